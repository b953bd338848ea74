//! Fisher information for SU(2) rotation estimation.
//!
//! The family `R(θ) ρ R(θ)†` with `R(θ) = exp(-i θ·J)` is evaluated at `θ = 0`.
//! All quantities use the block-diagonal generators with multiplicity weighting.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multipole::multipole_moments_of_block;
use crate::spin::{
    build_generators, hermitian_eigen, BlockDensityMatrix, CMatrix, PureSpinState, RotationParams, Spin, C64,
};

/// Default relative eigenvalue cutoff for the mixed-state QFI.
pub const QFI_RANK_EPS: f64 = 1e-10;

/// Symmetrized spin covariance `½⟨J_lJ_m + J_mJ_l⟩ - ⟨J_l⟩⟨J_m⟩`.
pub fn spin_covariance(rho: &BlockDensityMatrix) -> Matrix3<f64> {
    let mut second = Matrix3::zeros();
    let mut first = Vector3::zeros();
    for s in rho.sectors() {
        let d = s.multiplicity as f64;
        let g = build_generators(s.spin);
        let comps = [&g.x, &g.y, &g.z];
        for l in 0..3 {
            first[l] += d * (&s.block * comps[l]).trace().re;
            for m in 0..3 {
                let anti = comps[l] * comps[m] + comps[m] * comps[l];
                second[(l, m)] += 0.5 * d * (&s.block * anti).trace().re;
            }
        }
    }
    second - first * first.transpose()
}

pub fn spin_covariance_pure(psi: &PureSpinState) -> Matrix3<f64> {
    spin_covariance(&psi.to_density())
}

/// QFI matrix with a flag set when it is singular.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QfiMatrix {
    pub matrix: Matrix3<f64>,
    pub singular: bool,
}

impl QfiMatrix {
    fn from_matrix(matrix: Matrix3<f64>) -> Self {
        let eig = SymmetricEigen::new(matrix);
        let max = eig.eigenvalues.max().max(0.0);
        let min = eig.eigenvalues.min();
        let singular = max == 0.0 || min <= 1e-10 * max.max(1.0);
        Self { matrix, singular }
    }

    /// `Tr F⁻¹`, or `+∞` when singular.
    pub fn sqcrb(&self) -> f64 {
        if self.singular {
            return f64::INFINITY;
        }
        SymmetricEigen::new(self.matrix).eigenvalues.iter().map(|l| 1.0 / l).sum()
    }
}

pub fn qfi_matrix(rho: &BlockDensityMatrix) -> QfiMatrix {
    qfi_matrix_with_cutoff(rho, QFI_RANK_EPS)
}

/// Spectral QFI, `F_lm = 2 Σ_ab Re(⟨a|J_l|b⟩⟨b|J_m|a⟩)(λa-λb)²/(λa+λb)`; pairs with
/// `λa + λb <= rel_eps · λmax` are dropped.
pub fn qfi_matrix_with_cutoff(rho: &BlockDensityMatrix, rel_eps: f64) -> QfiMatrix {
    let spectra: Vec<_> = rho.sectors().iter().map(|s| hermitian_eigen(&s.block)).collect();
    let lmax = spectra
        .iter()
        .flat_map(|(vals, _)| vals.iter().copied())
        .fold(0.0f64, f64::max);
    let cutoff = rel_eps * lmax;
    let mut f = Matrix3::zeros();
    for (s, (vals, vecs)) in rho.sectors().iter().zip(&spectra) {
        let g = build_generators(s.spin);
        let in_eigenbasis: Vec<CMatrix> =
            [&g.x, &g.y, &g.z].iter().map(|j| vecs.adjoint() * *j * vecs).collect();
        let n = vals.len();
        for a in 0..n {
            for b in 0..n {
                let sum = vals[a] + vals[b];
                if sum <= cutoff {
                    continue;
                }
                let w = 2.0 * (vals[a] - vals[b]).powi(2) / sum * s.multiplicity as f64;
                if w == 0.0 {
                    continue;
                }
                for l in 0..3 {
                    for m in l..3 {
                        let term = (in_eigenbasis[l][(a, b)] * in_eigenbasis[m][(b, a)]).re * w;
                        f[(l, m)] += term;
                        if m != l {
                            f[(m, l)] += term;
                        }
                    }
                }
            }
        }
    }
    QfiMatrix::from_matrix(f)
}

/// Scalar bound `Tr F⁻¹` with identity cost.
pub fn sqcrb(rho: &BlockDensityMatrix) -> f64 {
    qfi_matrix(rho).sqcrb()
}

/// `¼ Tr Cov⁻¹`, the pure-state form of the scalar bound.
pub fn sqcrb_from_covariance(cov: &Matrix3<f64>) -> f64 {
    QfiMatrix::from_matrix(cov * 4.0).sqcrb()
}

/// Covariance of a sequential strategy: the probes are used one after another, so
/// their covariance matrices add.
pub fn sequential_covariance(probes: &[BlockDensityMatrix]) -> Matrix3<f64> {
    probes.iter().map(spin_covariance).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    CoherentSingle,
    CoherentSequential,
    NoonSimultaneous,
    NoonSequential,
    Platonic,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::CoherentSingle,
        Strategy::CoherentSequential,
        Strategy::NoonSimultaneous,
        Strategy::NoonSequential,
        Strategy::Platonic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::CoherentSingle => "coherent_single",
            Strategy::CoherentSequential => "coherent_sequential",
            Strategy::NoonSimultaneous => "noon_simultaneous",
            Strategy::NoonSequential => "noon_sequential",
            Strategy::Platonic => "platonic",
        }
    }

    /// Closed-form scalar bound, `None` when the strategy is not defined for `n`.
    pub fn closed_form(self, n: u32) -> Option<f64> {
        let nf = n as f64;
        match self {
            Strategy::CoherentSingle => Some(f64::INFINITY),
            Strategy::CoherentSequential => n.is_multiple_of(3).then(|| 9.0 / (2.0 * nf)),
            Strategy::NoonSimultaneous => Some(2.0 / nf + 1.0 / (nf * nf)),
            Strategy::NoonSequential => n.is_multiple_of(3).then(|| 27.0 / (nf * (nf + 6.0))),
            Strategy::Platonic => Some(9.0 / (nf * (nf + 2.0))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether a second-order unpolarized pure state of `n` photons exists
/// (none for `n` in 1, 2, 3, 5).
pub fn unpolarized_state_exists(n: u32) -> bool {
    n == 4 || n >= 6
}

/// Scalar bounds of the reference strategies at one photon number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub n: u32,
    pub entries: BTreeMap<Strategy, f64>,
    /// The platonic value is the bound `9/(N(N+2))` any second-order unpolarized
    /// state would attain; this records whether such a state exists at `n`.
    pub platonic_state_exists: bool,
}

impl StrategyReport {
    pub fn get(&self, s: Strategy) -> Option<f64> {
        self.entries.get(&s).copied()
    }
}

pub fn strategy_report(n: u32) -> Result<StrategyReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("photon number must be at least 1".into()));
    }
    let entries: BTreeMap<_, _> = Strategy::ALL
        .iter()
        .filter_map(|&s| s.closed_form(n).map(|v| (s, v)))
        .collect();
    if n == 4 {
        let checks = [
            (Strategy::Platonic, PureSpinState::tetrahedron()),
            (Strategy::NoonSimultaneous, PureSpinState::noon(4)?),
        ];
        for (s, psi) in checks {
            let direct = sqcrb(&psi.to_density());
            let closed = entries[&s];
            if (direct - closed).abs() > 1e-9 {
                return Err(Error::Consistency(format!(
                    "{s}: closed form {closed} differs from direct evaluation {direct}"
                )));
            }
        }
    }
    Ok(StrategyReport { n, entries, platonic_state_exists: unpolarized_state_exists(n) })
}

/// Residuals of the second-order unpolarized conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct UnpolarizedDiagnostics {
    pub mean: Vector3<f64>,
    /// `⟨J_l J_m⟩`, complex in general.
    pub second_moments: [[C64; 3]; 3],
    /// `(N/6)(N/2 + 1)`.
    pub target: f64,
    pub mean_residual: f64,
    pub second_moment_residual: f64,
    pub passed: bool,
}

impl UnpolarizedDiagnostics {
    pub fn residual(&self) -> f64 {
        self.mean_residual.max(self.second_moment_residual)
    }
}

/// Tests `⟨J⟩ = 0` and `⟨J_l J_m⟩ = (N/6)(N/2+1) δ_lm`.
pub fn is_second_order_unpolarized(psi: &PureSpinState, tol: f64) -> UnpolarizedDiagnostics {
    let g = build_generators(psi.spin());
    let comps = [&g.x, &g.y, &g.z];
    let n = psi.photons() as f64;
    let target = n / 6.0 * (n / 2.0 + 1.0);
    let mean = Vector3::from_fn(|l, _| psi.expectation(comps[l]).re);
    let mut second = [[C64::new(0.0, 0.0); 3]; 3];
    let mut second_moment_residual = 0.0f64;
    for l in 0..3 {
        for m in 0..3 {
            second[l][m] = psi.expectation(&(comps[l] * comps[m]));
            let expect = if l == m { target } else { 0.0 };
            second_moment_residual = second_moment_residual.max((second[l][m] - expect).norm());
        }
    }
    let mean_residual = mean.norm();
    UnpolarizedDiagnostics {
        mean,
        second_moments: second,
        target,
        mean_residual,
        second_moment_residual,
        passed: mean_residual <= tol && second_moment_residual <= tol,
    }
}

/// Multipole moments `M_0..M_2j` of one sector, normalized by the sector trace.
pub fn multipole_moments(rho: &BlockDensityMatrix, spin: Spin) -> Result<Vec<f64>> {
    let block = rho.block(spin)?;
    if block.trace().re <= 0.0 {
        return Err(Error::InvalidDensity(format!("sector j = {spin} is empty")));
    }
    Ok(multipole_moments_of_block(spin, block))
}

/// Fidelity with the tetrahedron state after rotating by each angle about `axis`.
pub fn rotation_scan(rho: &BlockDensityMatrix, axis: [f64; 3], thetas: &[f64]) -> Result<Vec<f64>> {
    rotation_scan_against(rho, &PureSpinState::tetrahedron(), axis, thetas)
}

pub fn rotation_scan_against(
    rho: &BlockDensityMatrix,
    reference: &PureSpinState,
    axis: [f64; 3],
    thetas: &[f64],
) -> Result<Vec<f64>> {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidParameter("scan axis must be a nonzero finite vector".into()));
    }
    rho.block(reference.spin())?;
    thetas
        .iter()
        .map(|&t| rho.rotate(&RotationParams::about(axis, t)).fidelity(reference))
        .collect()
}

/// `n` equally spaced angles in `[0, 2π)`.
pub fn angle_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

/// Local maxima of a periodic sampled curve: strictly above the previous sample and
/// at least the next one.
pub fn count_periodic_maxima(values: &[f64]) -> usize {
    let n = values.len();
    (0..n)
        .filter(|&i| {
            let prev = values[(i + n - 1) % n];
            let next = values[(i + 1) % n];
            values[i] > prev + 1e-12 && values[i] >= next - 1e-12
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::Sector;

    fn dens(psi: &PureSpinState) -> BlockDensityMatrix {
        psi.to_density()
    }

    fn assert_mat(a: &Matrix3<f64>, b: &Matrix3<f64>, tol: f64) {
        assert!((a - b).amax() < tol, "{a} vs {b}");
    }

    #[test]
    fn covariance_examples() {
        assert_mat(&spin_covariance(&dens(&PureSpinState::horizontal(4))), &Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0)), 1e-12);
        assert_mat(&spin_covariance(&dens(&PureSpinState::noon(4).unwrap())), &Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 4.0)), 1e-12);
        assert_mat(&spin_covariance(&dens(&PureSpinState::tetrahedron())), &(Matrix3::identity() * 2.0), 1e-12);
    }

    #[test]
    fn qfi_examples() {
        let f = qfi_matrix(&dens(&PureSpinState::tetrahedron()));
        assert_mat(&f.matrix, &(Matrix3::identity() * 8.0), 1e-10);
        assert!(!f.singular);
        let f = qfi_matrix(&dens(&PureSpinState::horizontal(4)));
        assert_mat(&f.matrix, &Matrix3::from_diagonal(&Vector3::new(4.0, 4.0, 0.0)), 1e-10);
        assert!(f.singular);
        let f = qfi_matrix(&BlockDensityMatrix::maximally_mixed(Spin::from_twice(4)));
        assert_mat(&f.matrix, &Matrix3::zeros(), 1e-12);
        assert!(f.singular);
    }

    #[test]
    fn sqcrb_examples() {
        assert!((sqcrb(&dens(&PureSpinState::tetrahedron())) - 0.375).abs() < 1e-12);
        assert!(sqcrb(&dens(&PureSpinState::horizontal(4))).is_infinite());
        assert!((sqcrb(&dens(&PureSpinState::noon(4).unwrap())) - 0.5625).abs() < 1e-12);
    }

    #[test]
    fn strategy_report_examples() {
        let r4 = strategy_report(4).unwrap();
        assert!((r4.get(Strategy::Platonic).unwrap() - 0.375).abs() < 1e-15);
        assert!((r4.get(Strategy::NoonSimultaneous).unwrap() - 0.5625).abs() < 1e-15);
        assert!(r4.get(Strategy::NoonSequential).is_none());
        assert!(r4.get(Strategy::CoherentSingle).unwrap().is_infinite());
        let r6 = strategy_report(6).unwrap();
        assert!((r6.get(Strategy::CoherentSequential).unwrap() - 0.75).abs() < 1e-15);
        assert!((r6.get(Strategy::NoonSequential).unwrap() - 0.375).abs() < 1e-15);
        let r12 = strategy_report(12).unwrap();
        assert!((r12.get(Strategy::NoonSequential).unwrap() - 0.125).abs() < 1e-15);
        assert!(r12.get(Strategy::NoonSequential).unwrap() < r12.get(Strategy::NoonSimultaneous).unwrap());
        assert!(!strategy_report(5).unwrap().platonic_state_exists);
    }

    fn along_axes(psi: &PureSpinState) -> Vec<BlockDensityMatrix> {
        // the probe's symmetry axis is z; turn it onto x, y and z in turn
        let to_x = RotationParams::about([0.0, 1.0, 0.0], PI / 2.0);
        let to_y = RotationParams::about([1.0, 0.0, 0.0], -PI / 2.0);
        vec![dens(&psi.rotate(&to_x)), dens(&psi.rotate(&to_y)), dens(psi)]
    }

    #[test]
    fn sequential_strategies_add_covariances() {
        for n in [3u32, 6, 9] {
            let k = n / 3;
            let coh = sequential_covariance(&along_axes(&PureSpinState::horizontal(k)));
            let expect = Strategy::CoherentSequential.closed_form(n).unwrap();
            assert!((sqcrb_from_covariance(&coh) - expect).abs() < 1e-10, "coherent n={n}");
            let noon = sequential_covariance(&along_axes(&PureSpinState::noon(k).unwrap()));
            let expect = Strategy::NoonSequential.closed_form(n).unwrap();
            if k < 3 {
                // N00N states of one or two photons lack the diag(k/4, k/4, k²/4)
                // covariance behind the closed form
                assert!(sqcrb_from_covariance(&noon) > expect);
            } else {
                assert!((sqcrb_from_covariance(&noon) - expect).abs() < 1e-10, "noon n={n}");
            }
            let direct: Matrix3<f64> = along_axes(&PureSpinState::noon(k).unwrap()).iter().map(spin_covariance).sum();
            assert_mat(&noon, &direct, 1e-14);
        }
    }

    #[test]
    fn unpolarized_examples() {
        let d = is_second_order_unpolarized(&PureSpinState::tetrahedron(), 1e-10);
        assert!(d.passed);
        for l in 0..3 {
            assert!((d.second_moments[l][l].re - 2.0).abs() < 1e-12);
        }
        let d = is_second_order_unpolarized(&PureSpinState::noon(4).unwrap(), 1e-10);
        assert!(!d.passed);
        assert!((d.second_moments[2][2].re - 4.0).abs() < 1e-12);
        let d = is_second_order_unpolarized(&PureSpinState::dicke(Spin::of_photons(2), 1), 0.1);
        assert!(!d.passed);
    }

    #[test]
    fn multipoles_of_mixed_state_vanish_above_zero() {
        let m = multipole_moments(&BlockDensityMatrix::maximally_mixed(Spin::from_twice(4)), Spin::from_twice(4)).unwrap();
        assert!((m[0] - 0.2).abs() < 1e-12);
        assert!(m[1..].iter().all(|&v| v < 1e-14));
    }

    #[test]
    fn z_scan_matches_closed_form() {
        let thetas = angle_grid(720);
        let curve = rotation_scan(&dens(&PureSpinState::tetrahedron()), [0.0, 0.0, 1.0], &thetas).unwrap();
        for (t, f) in thetas.iter().zip(&curve) {
            assert!((f - (5.0 / 9.0 + 4.0 / 9.0 * (3.0 * t).cos())).abs() < 1e-9);
        }
        assert!((curve[0] - 1.0).abs() < 1e-12);
        assert_eq!(count_periodic_maxima(&curve), 3);
    }

    #[test]
    fn rotated_tetrahedron_fidelity_minimum() {
        let rho = dens(&PureSpinState::tetrahedron());
        let f = rho.rotate(&RotationParams::about_z(PI / 3.0)).fidelity(&PureSpinState::tetrahedron()).unwrap();
        assert!((f - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn qfi_of_sectors_is_weighted_sum() {
        let t = PureSpinState::tetrahedron().projector() * C64::new(0.5, 0.0);
        let spin1 = Spin::from_twice(2);
        let b1 = CMatrix::identity(3, 3) * C64::new(0.5 / 9.0, 0.0);
        let rho = BlockDensityMatrix::new(vec![
            Sector::new(Spin::from_twice(4), 1, t),
            Sector::new(spin1, 3, b1),
        ])
        .unwrap();
        let f = qfi_matrix(&rho);
        assert_mat(&f.matrix, &(Matrix3::identity() * 4.0), 1e-10);
    }
}
