//! Majorana stellar representation.
//!
//! A symmetric `N`-photon state is written as a product of single-photon
//! creation operators `cos(θ/2) a_H† + e^{iφ} sin(θ/2) a_V†` acting on the
//! vacuum. The stellar polynomial is `p(u) = Σ_k ψ(n_H = k) √C(N,k) u^k`; its
//! roots `u_k = -e^{iφ_k} tan(θ_k/2)` give the points (stereographic projection
//! from the south pole). A degree deficit `N - deg p` contributes points at the
//! south pole.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{binomial, c, CMatrix, CVector, PureSpinState, RotationParams, Spin, C64};

/// Roots with modulus above this are mapped to the south pole.
const POLE_CLAMP: f64 = 1e8;
/// Relative threshold below which a stellar-polynomial coefficient counts as zero.
const COEFF_EPS: f64 = 1e-14;

/// A point on the unit sphere, `theta` in `[0, π]`, `phi` in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct SpherePoint {
    pub theta: f64,
    pub phi: f64,
}

impl From<[f64; 2]> for SpherePoint {
    fn from(v: [f64; 2]) -> Self {
        SpherePoint::new(v[0], v[1])
    }
}

impl From<SpherePoint> for [f64; 2] {
    fn from(p: SpherePoint) -> Self {
        [p.theta, p.phi]
    }
}

impl SpherePoint {
    /// Wraps angles into range; the azimuth is zeroed at the poles.
    pub fn new(theta: f64, phi: f64) -> Self {
        SpherePoint::from_cartesian(Vector3::new(
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
            theta.cos(),
        ))
    }

    pub const NORTH: SpherePoint = SpherePoint { theta: 0.0, phi: 0.0 };
    pub const SOUTH: SpherePoint = SpherePoint { theta: PI, phi: 0.0 };

    pub fn from_cartesian(v: Vector3<f64>) -> Self {
        let n = v.norm();
        let (x, y, z) = (v.x / n, v.y / n, v.z / n);
        let rho = x.hypot(y);
        if rho < 1e-15 {
            return if z > 0.0 { Self::NORTH } else { Self::SOUTH };
        }
        let theta = rho.atan2(z);
        let mut phi = y.atan2(x);
        if phi < 0.0 {
            phi += 2.0 * PI;
        }
        if phi >= 2.0 * PI {
            phi -= 2.0 * PI;
        }
        SpherePoint { theta, phi }
    }

    pub fn to_cartesian(self) -> Vector3<f64> {
        Vector3::new(
            self.theta.sin() * self.phi.cos(),
            self.theta.sin() * self.phi.sin(),
            self.theta.cos(),
        )
    }

    pub fn chordal_distance(self, other: SpherePoint) -> f64 {
        (self.to_cartesian() - other.to_cartesian()).norm()
    }

    pub fn rotate(self, r: &RotationParams) -> Self {
        SpherePoint::from_cartesian(r.so3() * self.to_cartesian())
    }
}

/// Multiset of Majorana points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub points: Vec<SpherePoint>,
}

impl Constellation {
    pub fn new(points: Vec<SpherePoint>) -> Self {
        Self { points }
    }

    /// `n` copies of one point.
    pub fn repeated(point: SpherePoint, n: usize) -> Self {
        Self { points: vec![point; n] }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The regular tetrahedron with one vertex at the north pole and the others at
    /// colatitude `2 arctan √2`, azimuths `0, 2π/3, 4π/3`.
    pub fn tetrahedron() -> Self {
        let theta = 2.0 * 2f64.sqrt().atan();
        Self {
            points: vec![
                SpherePoint::NORTH,
                SpherePoint::new(theta, 0.0),
                SpherePoint::new(theta, 2.0 * PI / 3.0),
                SpherePoint::new(theta, 4.0 * PI / 3.0),
            ],
        }
    }

    /// Expands the product of creation operators into Dicke amplitudes.
    pub fn to_state(&self) -> Result<PureSpinState> {
        let n = self.points.len();
        if n == 0 {
            return Err(Error::InvalidParameter("empty constellation".into()));
        }
        // coeff[k] multiplies a_H†^k a_V†^(m-k) after m factors
        let mut coeff = vec![c(1.0, 0.0)];
        for p in &self.points {
            let h = c((p.theta / 2.0).cos(), 0.0);
            let v = C64::from_polar((p.theta / 2.0).sin(), p.phi);
            let mut next = vec![c(0.0, 0.0); coeff.len() + 1];
            for (k, &a) in coeff.iter().enumerate() {
                next[k + 1] += a * h;
                next[k] += a * v;
            }
            coeff = next;
        }
        let spin = Spin::of_photons(n as u32);
        // amplitude at Dicke index i (n_V = i, n_H = n - i)
        let amps = CVector::from_iterator(
            n + 1,
            (0..=n).map(|i| {
                let k = n - i;
                coeff[k] / binomial(n as u64, k as u64).sqrt()
            }),
        );
        Ok(PureSpinState::normalized(spin, amps)?.with_canonical_phase())
    }

    /// Majorana points of a symmetric state.
    pub fn from_state(psi: &PureSpinState) -> Result<Self> {
        let n = psi.photons() as usize;
        if n == 0 {
            return Ok(Self { points: Vec::new() });
        }
        let amps = psi.amplitudes();
        let coeffs: Vec<C64> = (0..=n)
            .map(|k| amps[n - k] * binomial(n as u64, k as u64).sqrt())
            .collect();
        let scale = coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::ZeroState);
        }
        let degree = (0..=n).rev().find(|&k| coeffs[k].norm() > COEFF_EPS * scale).unwrap_or(0);
        let mut points: Vec<SpherePoint> = polynomial_roots(&coeffs[..=degree])
            .into_iter()
            .map(root_to_point)
            .collect();
        points.extend(std::iter::repeat_n(SpherePoint::SOUTH, n - degree));
        Ok(Self { points })
    }

    pub fn rotate(&self, r: &RotationParams) -> Self {
        Self { points: self.points.iter().map(|p| p.rotate(r)).collect() }
    }

    /// `n` points drawn uniformly (area measure) on the sphere.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(n, &mut rng)
    }

    pub fn random_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let points = (0..n)
            .map(|_| {
                let z: f64 = rng.random_range(-1.0..=1.0);
                let phi: f64 = rng.random_range(0.0..2.0 * PI);
                SpherePoint::new(z.clamp(-1.0, 1.0).acos(), phi)
            })
            .collect();
        Self { points }
    }

    /// Bottleneck distance between multisets: the smallest `d` such that some
    /// one-to-one pairing keeps every pair within chordal distance `d`.
    /// Infinite when the sizes differ.
    pub fn distance(&self, other: &Constellation) -> f64 {
        let n = self.points.len();
        if n != other.points.len() {
            return f64::INFINITY;
        }
        if n == 0 {
            return 0.0;
        }
        let dist: Vec<Vec<f64>> = self
            .points
            .iter()
            .map(|a| other.points.iter().map(|b| a.chordal_distance(*b)).collect())
            .collect();
        let mut candidates: Vec<f64> = dist.iter().flatten().copied().collect();
        candidates.sort_by(f64::total_cmp);
        candidates.dedup();
        let (mut lo, mut hi) = (0, candidates.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if perfect_matching(&dist, candidates[mid]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        candidates[lo]
    }

    pub fn approx_eq(&self, other: &Constellation, tol: f64) -> bool {
        self.distance(other) <= tol
    }
}

fn root_to_point(u: C64) -> SpherePoint {
    let r = u.norm();
    if r > POLE_CLAMP || !r.is_finite() {
        return SpherePoint::SOUTH;
    }
    if r < 1e-15 {
        return SpherePoint::NORTH;
    }
    SpherePoint::new(2.0 * r.atan(), (-u).arg())
}

/// Kuhn's augmenting-path test for a perfect matching using edges with weight `<= limit`.
fn perfect_matching(dist: &[Vec<f64>], limit: f64) -> bool {
    let n = dist.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(
        i: usize,
        dist: &[Vec<f64>],
        limit: f64,
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for j in 0..dist.len() {
            if dist[i][j] <= limit && !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|k| augment(k, dist, limit, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    (0..n).all(|i| {
        let mut seen = vec![false; n];
        augment(i, dist, limit, &mut seen, &mut owner)
    })
}

/// Roots of `Σ_k coeffs[k] u^k` (last coefficient nonzero). Exact zero roots are
/// split off first; the rest come from the companion-matrix eigenvalues, with
/// Aberth iteration as a fallback when the Schur iteration stalls. Each root gets
/// one Newton polish.
pub fn polynomial_roots(coeffs: &[C64]) -> Vec<C64> {
    let zeros = coeffs.iter().take_while(|a| a.norm() == 0.0).count();
    let coeffs = &coeffs[zeros.min(coeffs.len())..];
    let degree = coeffs.len().saturating_sub(1);
    let mut roots = vec![c(0.0, 0.0); zeros];
    if degree == 0 {
        return roots;
    }
    let lead = coeffs[degree];
    let mut companion = CMatrix::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = c(1.0, 0.0);
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i] / lead;
    }
    let found = match companion.try_schur(f64::EPSILON, 500) {
        Some(schur) => {
            let (_, t) = schur.unpack();
            (0..degree).map(|i| t[(i, i)]).collect()
        }
        None => aberth(coeffs),
    };
    roots.extend(found.into_iter().map(|z| newton_polish(coeffs, z)));
    roots
}

fn aberth(coeffs: &[C64]) -> Vec<C64> {
    let degree = coeffs.len() - 1;
    let lead = coeffs[degree].norm();
    // Cauchy-style radius for the starting circle
    let radius = 1.0
        + coeffs[..degree].iter().map(|a| a.norm() / lead).fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..degree)
        .map(|k| C64::from_polar(radius, 2.0 * PI * k as f64 / degree as f64 + 0.4))
        .collect();
    for _ in 0..2000 {
        let mut largest = 0.0f64;
        for i in 0..degree {
            let (p, dp) = eval_with_derivative(coeffs, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: C64 = (0..degree)
                .filter(|&j| j != i)
                .map(|j| c(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let step = ratio / (c(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                largest = largest.max(step.norm() / z[i].norm().max(1.0));
            }
        }
        if largest < 1e-15 {
            break;
        }
    }
    z
}

fn eval_with_derivative(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = c(0.0, 0.0);
    let mut dp = c(0.0, 0.0);
    for &a in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

fn newton_polish(coeffs: &[C64], z: C64) -> C64 {
    let (p, dp) = eval_with_derivative(coeffs, z);
    if dp.norm() == 0.0 || !z.is_finite() {
        return z;
    }
    let candidate = z - p / dp;
    let (pc, _) = eval_with_derivative(coeffs, candidate);
    if candidate.is_finite() && pc.norm() < p.norm() {
        candidate
    } else {
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::PureSpinState;

    #[test]
    fn north_pole_copies_give_horizontal_state() {
        let psi = Constellation::repeated(SpherePoint::NORTH, 3).to_state().unwrap();
        assert!((psi.amplitude(0).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn opposite_poles_give_dicke_m0() {
        let psi = Constellation::new(vec![SpherePoint::NORTH, SpherePoint::SOUTH]).to_state().unwrap();
        assert!((psi.amplitude(1).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tetrahedron_points_give_tetrahedron_state() {
        let psi = Constellation::tetrahedron().to_state().unwrap();
        let overlap = psi.overlap_modulus(&PureSpinState::tetrahedron()).unwrap();
        assert!(overlap >= 1.0 - 1e-10, "overlap {overlap}");
    }

    #[test]
    fn horizontal_state_stars_at_north_pole() {
        let stars = Constellation::from_state(&PureSpinState::horizontal(5)).unwrap();
        assert!(stars.approx_eq(&Constellation::repeated(SpherePoint::NORTH, 5), 1e-12));
    }

    #[test]
    fn vertical_state_uses_degree_deficit() {
        let psi = PureSpinState::dicke(Spin::of_photons(3), 3);
        let stars = Constellation::from_state(&psi).unwrap();
        assert!(stars.approx_eq(&Constellation::repeated(SpherePoint::SOUTH, 3), 1e-12));
    }

    #[test]
    fn noon_four_is_equatorial_square() {
        let stars = Constellation::from_state(&PureSpinState::noon(4).unwrap()).unwrap();
        let expect = Constellation::new(
            [1.0, 3.0, 5.0, 7.0].iter().map(|k| SpherePoint::new(PI / 2.0, k * PI / 4.0)).collect(),
        );
        assert!(stars.approx_eq(&expect, 1e-9), "{stars:?}");
    }

    #[test]
    fn tetrahedron_state_stars() {
        let stars = Constellation::from_state(&PureSpinState::tetrahedron()).unwrap();
        assert!(stars.approx_eq(&Constellation::tetrahedron(), 1e-9), "{stars:?}");
    }

    #[test]
    fn rotation_examples() {
        let t = Constellation::tetrahedron();
        assert!(t.rotate(&RotationParams::identity()).approx_eq(&t, 1e-15));
        let south = Constellation::repeated(SpherePoint::NORTH, 1).rotate(&RotationParams::about([1.0, 0.0, 0.0], PI));
        assert!(south.approx_eq(&Constellation::repeated(SpherePoint::SOUTH, 1), 1e-12));
        let spun = t.rotate(&RotationParams::about_z(2.0 * PI / 3.0));
        assert!(spun.approx_eq(&t, 1e-9));
    }

    #[test]
    fn random_is_deterministic_and_uniform() {
        assert_eq!(Constellation::random(4, 11), Constellation::random(4, 11));
        assert_ne!(Constellation::random(4, 11), Constellation::random(4, 12));
        let big = Constellation::random(10_000, 5);
        let mean_z: f64 = big.points.iter().map(|p| p.theta.cos()).sum::<f64>() / 1e4;
        assert!(mean_z.abs() < 0.02, "mean z {mean_z}");
    }

    #[test]
    fn zero_state_rejected() {
        // construct a zero amplitude vector by bypassing normalization is not possible;
        // the stellar polynomial path guards against it anyway
        assert!(matches!(
            PureSpinState::normalized(Spin::of_photons(2), CVector::zeros(3)),
            Err(Error::ZeroState)
        ));
    }

    #[test]
    fn aberth_agrees_with_companion() {
        let coeffs = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let roots = aberth(&coeffs);
        for r in roots {
            assert!((r.powu(4) + 1.0).norm() < 1e-12, "{r}");
        }
    }

    #[test]
    fn bottleneck_distance_ignores_order() {
        let a = Constellation::new(vec![SpherePoint::NORTH, SpherePoint::new(1.0, 2.0)]);
        let b = Constellation::new(vec![SpherePoint::new(1.0, 2.0), SpherePoint::NORTH]);
        assert!(a.distance(&b) < 1e-15);
        assert!(a.distance(&Constellation::repeated(SpherePoint::NORTH, 3)).is_infinite());
    }

    #[test]
    fn polynomial_roots_of_cubic() {
        // (u - 1)(u + 2)(u - i)
        let roots = polynomial_roots(&[c(0.0, 2.0), c(-2.0, -1.0), c(1.0, -1.0), c(1.0, 0.0)]);
        for expect in [c(1.0, 0.0), c(-2.0, 0.0), c(0.0, 1.0)] {
            assert!(roots.iter().any(|r| (r - expect).norm() < 1e-12), "{roots:?}");
        }
    }
}
