//! Overlap of the tetrahedron with its rotated copy about x, y and z.

use spinmetro::metrology;
use spinmetro::spin::PureSpinState;

fn main() -> spinmetro::Result<()> {
    let rho = PureSpinState::tetrahedron().to_density();
    let thetas = metrology::angle_grid(72);
    let axes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let curves: Vec<Vec<f64>> = axes
        .iter()
        .map(|&a| metrology::rotation_scan(&rho, a, &thetas))
        .collect::<spinmetro::Result<_>>()?;
    println!("{:>8} {:>8} {:>8} {:>8}", "theta", "x", "y", "z");
    for (i, t) in thetas.iter().enumerate() {
        println!("{t:8.4} {:8.4} {:8.4} {:8.4}", curves[0][i], curves[1][i], curves[2][i]);
    }
    for (name, c) in ["x", "y", "z"].iter().zip(&curves) {
        println!("{name}: {} maxima per turn", metrology::count_periodic_maxima(c));
    }
    Ok(())
}
