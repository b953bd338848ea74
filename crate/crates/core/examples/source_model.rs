//! Heralded four-photon source: event ledger at the measured parameters and the
//! fidelity as the losses are relaxed.

use spinmetro::source::{self, SourceParams};
use spinmetro::spin::PureSpinState;

fn main() -> spinmetro::Result<()> {
    let tet = PureSpinState::tetrahedron();
    let p = SourceParams::measured();
    let out = source::run_pipeline(&p)?;
    println!("success probability {:.3e}", out.success_probability);
    println!("truncation residual {:.3e}", out.truncation_residual);
    println!("fidelity {:.4}", out.state.fidelity(&tet)?);
    println!("{:<14} {:>12} {:>12}  monomial", "class", "simulated", "analytic");
    for e in &out.ledger.entries {
        match (e.analytic, &e.monomial) {
            (Some(a), Some(m)) => println!("{:<14} {:>12.4e} {:>12.4e}  {m}", e.label, e.simulated, a),
            _ => println!("{:<14} {:>12.4e}", e.label, e.simulated),
        }
    }

    println!("\n{:>6} {:>6} {:>9}", "t", "tau", "fidelity");
    for i in 0..=4 {
        let s = i as f64 / 4.0;
        let q = SourceParams { t: p.t + s * (1.0 - p.t), tau: p.tau + s * (1.0 - p.tau), ..p.clone() };
        let f = source::run_pipeline(&q)?.state.fidelity(&tet)?;
        println!("{:6.3} {:6.3} {f:9.4}", q.t, q.tau);
    }

    let mixed = source::leakage_channel(&out.state, 0.13)?;
    println!("\nwith 13% leakage: fidelity {:.4}, symmetric population {:.3}", mixed.fidelity(&tet)?, mixed.symmetric_population());
    Ok(())
}
