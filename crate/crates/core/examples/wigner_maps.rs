//! Wigner function of the tetrahedron state: extrema and the four vertex-centred maps.

use spinmetro::phase_space::{self, WignerFunction};
use spinmetro::spin::{PureSpinState, Spin};

fn main() -> spinmetro::Result<()> {
    let spin = Spin::of_photons(4);
    let rho = PureSpinState::tetrahedron().to_density();
    let w = WignerFunction::from_density(&rho, spin)?;
    println!("kernel: {}", phase_space::KERNEL_DESCRIPTION);

    let grid = w.grid(91, 180)?;
    let maxima = grid.local_maxima();
    let minima = grid.local_minima();
    println!("{} local maxima, {} local minima", maxima.len(), minima.len());
    for &(i, j) in maxima.iter().chain(&minima) {
        println!("  theta {:6.3} phi {:6.3}  W {:+.4}", grid.theta(i), grid.phi(j), grid.get(i, j));
    }
    println!("W at the north-pole vertex {:+.4}", w.value(0.0, 0.0)?);

    let maps = phase_space::vertex_projections(&rho, spin, 91, 180)?;
    for (i, m) in maps.iter().enumerate().skip(1) {
        println!("map {i} vs map 0: {:.1e}", m.max_abs_difference(&maps[0]));
    }
    Ok(())
}
