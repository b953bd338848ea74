//! Simulated counts from the tetrahedron, likelihood reconstruction, phase
//! alignment and Monte-Carlo error bars.

use spinmetro::metrology;
use spinmetro::spin::PureSpinState;
use spinmetro::tomography;

fn main() -> spinmetro::Result<()> {
    let tet = PureSpinState::tetrahedron();
    let bases = tomography::default_bases();
    println!("{} bases, smallest axis separation {:.1} deg", bases.len(), tomography::min_axis_angle(&bases).to_degrees());

    for trials in [2434u64, 24_340, 243_400] {
        let counts = tomography::simulate_counts(&tet.to_density(), &bases, trials, 1)?;
        let mut res = tomography::mle_reconstruct(&counts, &bases)?;
        let f = res.align(&tet)?;
        println!(
            "{trials:>7} trials, {:>6} detected: fidelity {f:.4}, phi {:+.3}, {} iterations, s-QCRB {:.3}",
            counts.total_events(),
            res.phi,
            res.iterations,
            metrology::sqcrb(&res.aligned_state())
        );
    }

    let counts = tomography::simulate_counts(&tet.to_density(), &bases, 2434, 1)?;
    let mc = tomography::monte_carlo_errors(&counts, &bases, 50, 2, &tet)?;
    println!("MC over {} resamples ({} failed)", mc.n_resamples, mc.failures);
    println!("  fidelity {:.3} +- {:.3}", mc.fidelity.mean, mc.fidelity.std);
    println!("  s-QCRB   {:.3} +- {:.3}", mc.sqcrb.mean, mc.sqcrb.std);
    Ok(())
}
