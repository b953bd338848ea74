//! Scalar bounds of the five probing strategies, and the explicit four-photon
//! states behind two of them.

use spinmetro::metrology::{self, Strategy};
use spinmetro::spin::PureSpinState;

fn main() -> spinmetro::Result<()> {
    print!("{:>3}", "N");
    for s in Strategy::ALL {
        print!(" {:>20}", s.name());
    }
    println!();
    for n in 1..=12 {
        let r = metrology::strategy_report(n)?;
        print!("{n:>3}");
        for s in Strategy::ALL {
            match r.get(s) {
                Some(v) => print!(" {v:>20.5}"),
                None => print!(" {:>20}", "-"),
            }
        }
        println!();
    }

    let tet = PureSpinState::tetrahedron().to_density();
    let noon = PureSpinState::noon(4)?.to_density();
    println!("tetrahedron s-QCRB {:.6}", metrology::sqcrb(&tet));
    println!("N00N(4)     s-QCRB {:.6}", metrology::sqcrb(&noon));
    println!("tetrahedron covariance\n{}", metrology::spin_covariance(&tet));
    Ok(())
}
