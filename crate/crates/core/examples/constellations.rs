//! Majorana points of a few four-photon states, and the state rebuilt from them.

use spinmetro::constellation::Constellation;
use spinmetro::metrology;
use spinmetro::spin::{PureSpinState, RotationParams};

fn show(name: &str, psi: &PureSpinState) -> spinmetro::Result<()> {
    let stars = Constellation::from_state(psi)?;
    println!("{name}");
    for p in &stars.points {
        println!("  theta {:8.5}  phi {:8.5}", p.theta, p.phi);
    }
    let back = stars.to_state()?;
    println!("  round-trip overlap {:.12}", psi.overlap_modulus(&back)?);
    let m = metrology::multipole_moments(&psi.to_density(), psi.spin())?;
    println!("  multipoles M1 {:.4} M2 {:.4}", m[1], m[2]);
    Ok(())
}

fn main() -> spinmetro::Result<()> {
    show("horizontal", &PureSpinState::horizontal(4))?;
    show("N00N", &PureSpinState::noon(4)?)?;
    show("tetrahedron", &PureSpinState::tetrahedron())?;

    let r = RotationParams::about([1.0, 1.0, 0.0], 0.7);
    show("rotated tetrahedron", &PureSpinState::tetrahedron().rotate(&r))?;

    let d = metrology::is_second_order_unpolarized(&PureSpinState::tetrahedron(), 1e-12);
    println!("tetrahedron second-order unpolarized: {} (residual {:.1e})", d.passed, d.residual());
    Ok(())
}
