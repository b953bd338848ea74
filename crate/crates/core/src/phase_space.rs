//! Spherical Wigner function `W(Ω) = Σ_kq ρ_kq Y_kq(Ω)` with `ρ_kq = Tr(ρ T_kq†)`.
//!
//! Spherical harmonics carry the Condon-Shortley phase. The grid has
//! `θ_i = π i / (n_θ - 1)` and `φ_j = 2π j / n_φ`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::{Constellation, SpherePoint};
use crate::error::{Error, Result};
use crate::multipole::multipole_coefficients;
use crate::spin::{BlockDensityMatrix, CMatrix, RotationParams, Spin, C64};

/// Imaginary residue tolerated before a Wigner value is declared non-real.
const IMAG_TOL: f64 = 1e-10;

/// Short description of the plotted quantity, written into output metadata.
pub const KERNEL_DESCRIPTION: &str =
    "W(theta,phi) = sum_kq rho_kq Y_kq(theta,phi), rho_kq = Tr(rho T_kq^dagger), orthonormal Y_kq with Condon-Shortley phase";

/// Normalized associated Legendre values `N_lm P_l^m(x)` for `0 <= m <= l <= lmax`,
/// such that `Y_lm = N_lm P_l^m(cos θ) e^{imφ}`. Indexed `[l][m]`.
fn normalized_legendre(lmax: usize, x: f64) -> Vec<Vec<f64>> {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut p = vec![vec![0.0; lmax + 1]; lmax + 1];
    p[0][0] = (1.0 / (4.0 * PI)).sqrt();
    for m in 1..=lmax {
        p[m][m] = -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s * p[m - 1][m - 1];
    }
    for m in 0..lmax {
        p[m + 1][m] = ((2 * m + 3) as f64).sqrt() * x * p[m][m];
    }
    for m in 0..=lmax {
        for l in (m + 2)..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[l][m] = a * (x * p[l - 1][m] - b * p[l - 2][m]);
        }
    }
    p
}

/// Orthonormal spherical harmonic `Y_lm(θ, φ)`.
pub fn spherical_harmonic(l: u32, m: i32, theta: f64, phi: f64) -> C64 {
    if m.unsigned_abs() > l {
        return C64::new(0.0, 0.0);
    }
    let p = normalized_legendre(l as usize, theta.cos());
    let am = m.unsigned_abs() as usize;
    let y = p[l as usize][am] * C64::from_polar(1.0, am as f64 * phi);
    if m >= 0 {
        y
    } else if am.is_multiple_of(2) {
        y.conj()
    } else {
        -y.conj()
    }
}

/// Precomputed multipole expansion of one sector block.
#[derive(Clone, Debug)]
pub struct WignerFunction {
    spin: Spin,
    coeffs: Vec<Vec<C64>>,
}

impl WignerFunction {
    pub fn new(spin: Spin, block: &CMatrix) -> Result<Self> {
        if block.nrows() != spin.dim() || block.ncols() != spin.dim() {
            return Err(Error::DimensionMismatch { expected: spin.dim(), found: block.nrows() });
        }
        Ok(Self { spin, coeffs: multipole_coefficients(spin, block) })
    }

    pub fn from_density(rho: &BlockDensityMatrix, spin: Spin) -> Result<Self> {
        Self::new(spin, rho.block(spin)?)
    }

    fn kmax(&self) -> usize {
        self.spin.twice() as usize
    }

    /// Fourier components `c_q(θ) = Σ_k ρ_kq N_kq P_k^q(cos θ)` for `q = -kmax..=kmax`.
    fn azimuthal_components(&self, theta: f64) -> Vec<C64> {
        let kmax = self.kmax();
        let p = normalized_legendre(kmax, theta.cos());
        let mut out = vec![C64::new(0.0, 0.0); 2 * kmax + 1];
        for (k, row) in self.coeffs.iter().enumerate() {
            for q in -(k as i64)..=k as i64 {
                let aq = q.unsigned_abs() as usize;
                let sign = if q < 0 && aq % 2 == 1 { -1.0 } else { 1.0 };
                out[(q + kmax as i64) as usize] += row[(q + k as i64) as usize] * p[k][aq] * sign;
            }
        }
        out
    }

    fn sum_components(&self, comps: &[C64], phi: f64) -> C64 {
        let kmax = self.kmax() as i64;
        comps
            .iter()
            .enumerate()
            .map(|(i, c)| c * C64::from_polar(1.0, (i as i64 - kmax) as f64 * phi))
            .sum()
    }

    fn checked_real(z: C64, scale: f64) -> Result<f64> {
        if z.im.abs() > IMAG_TOL * scale.max(1.0) {
            return Err(Error::Consistency(format!("Wigner value has imaginary part {:e}", z.im)));
        }
        Ok(z.re)
    }

    fn scale(&self) -> f64 {
        self.coeffs.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn value(&self, theta: f64, phi: f64) -> Result<f64> {
        let comps = self.azimuthal_components(theta);
        Self::checked_real(self.sum_components(&comps, phi), self.scale())
    }

    pub fn value_at(&self, p: SpherePoint) -> Result<f64> {
        self.value(p.theta, p.phi)
    }

    pub fn value_at_vector(&self, n: &Vector3<f64>) -> Result<f64> {
        self.value_at(SpherePoint::from_cartesian(*n))
    }

    pub fn grid(&self, n_theta: usize, n_phi: usize) -> Result<SphericalGrid> {
        if n_theta < 2 || n_phi < 2 {
            return Err(Error::InvalidParameter("grid sizes must be at least 2".into()));
        }
        let scale = self.scale();
        let rows: Result<Vec<Vec<f64>>> = (0..n_theta)
            .into_par_iter()
            .map(|i| {
                let comps = self.azimuthal_components(grid_theta(i, n_theta));
                (0..n_phi)
                    .map(|j| Self::checked_real(self.sum_components(&comps, grid_phi(j, n_phi)), scale))
                    .collect()
            })
            .collect();
        Ok(SphericalGrid { n_theta, n_phi, values: rows?.concat() })
    }
}

pub fn grid_theta(i: usize, n_theta: usize) -> f64 {
    PI * i as f64 / (n_theta - 1) as f64
}

pub fn grid_phi(j: usize, n_phi: usize) -> f64 {
    2.0 * PI * j as f64 / n_phi as f64
}

/// Wigner values on a longitude-latitude grid, row-major in `θ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    pub values: Vec<f64>,
}

impl SphericalGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_phi + j]
    }

    pub fn theta(&self, i: usize) -> f64 {
        grid_theta(i, self.n_theta)
    }

    pub fn phi(&self, j: usize) -> f64 {
        grid_phi(j, self.n_phi)
    }

    pub fn max_abs_difference(&self, other: &SphericalGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Grid indices of the strict local maxima (periodic in `φ`, poles excluded),
    /// sorted by decreasing value.
    pub fn local_maxima(&self) -> Vec<(usize, usize)> {
        self.local_extrema(1.0)
    }

    pub fn local_minima(&self) -> Vec<(usize, usize)> {
        self.local_extrema(-1.0)
    }

    fn local_extrema(&self, sign: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 1..self.n_theta - 1 {
            for j in 0..self.n_phi {
                let v = sign * self.get(i, j);
                let neighbours = (-1i64..=1).flat_map(|di| (-1i64..=1).map(move |dj| (di, dj)));
                let is_peak = neighbours.filter(|&(di, dj)| di != 0 || dj != 0).all(|(di, dj)| {
                    let ii = (i as i64 + di) as usize;
                    let jj = ((j as i64 + dj).rem_euclid(self.n_phi as i64)) as usize;
                    v > sign * self.get(ii, jj)
                });
                if is_peak {
                    out.push((i, j));
                }
            }
        }
        out.sort_by(|a, b| (sign * self.get(b.0, b.1)).total_cmp(&(sign * self.get(a.0, a.1))));
        out
    }
}

pub fn wigner_grid(block: &CMatrix, spin: Spin, n_theta: usize, n_phi: usize) -> Result<SphericalGrid> {
    WignerFunction::new(spin, block)?.grid(n_theta, n_phi)
}

/// Values of `W` at the grid points mapped through `r⁻¹`: the grid of the rotated
/// function `n ↦ W(R⁻¹ n)`, computed by exact re-evaluation.
pub fn resampled_grid(w: &WignerFunction, r: &Matrix3<f64>, n_theta: usize, n_phi: usize) -> Result<SphericalGrid> {
    let inv = r.transpose();
    let rows: Result<Vec<Vec<f64>>> = (0..n_theta)
        .into_par_iter()
        .map(|i| {
            (0..n_phi)
                .map(|j| {
                    let n = SpherePoint { theta: grid_theta(i, n_theta), phi: grid_phi(j, n_phi) }.to_cartesian();
                    w.value_at_vector(&(inv * n))
                })
                .collect()
        })
        .collect();
    Ok(SphericalGrid { n_theta, n_phi, values: rows?.concat() })
}

/// The 12 proper rotations preserving the tetrahedron constellation.
pub fn tetrahedral_rotations() -> Vec<RotationParams> {
    let v: Vec<Vector3<f64>> = Constellation::tetrahedron().points.iter().map(|p| p.to_cartesian()).collect();
    let mut out = vec![RotationParams::identity()];
    for a in &v {
        for angle in [2.0 * PI / 3.0, -2.0 * PI / 3.0] {
            out.push(RotationParams::about([a.x, a.y, a.z], angle));
        }
    }
    for b in 1..4 {
        let axis = v[0] + v[b];
        out.push(RotationParams::about([axis.x, axis.y, axis.z], PI));
    }
    out
}

/// Rotation taking the north pole to the map centre `(θ, φ) = (π/2, π)`.
pub fn map_centering() -> RotationParams {
    RotationParams::about([0.0, 1.0, 0.0], -PI / 2.0)
}

/// Rotation bringing tetrahedron vertex `i` to the map centre: a tetrahedral
/// symmetry moving vertex `i` onto the north-pole vertex (the half turn about the
/// axis through the midpoint of edge `0i`), followed by [`map_centering`].
pub fn vertex_rotation(i: usize) -> Result<Matrix3<f64>> {
    let pts = Constellation::tetrahedron().points;
    let v = pts
        .get(i)
        .ok_or_else(|| Error::InvalidParameter(format!("vertex index {i} out of range 0..4")))?
        .to_cartesian();
    let to_north = if i == 0 {
        Matrix3::identity()
    } else {
        let axis = pts[0].to_cartesian() + v;
        RotationParams::about([axis.x, axis.y, axis.z], PI).so3()
    };
    Ok(map_centering().so3() * to_north)
}

/// Four maps of the sector `spin`, map `i` centred on tetrahedron vertex `i`.
pub fn vertex_projections(
    rho: &BlockDensityMatrix,
    spin: Spin,
    n_theta: usize,
    n_phi: usize,
) -> Result<Vec<SphericalGrid>> {
    let w = WignerFunction::from_density(rho, spin)?;
    (0..4)
        .map(|i| resampled_grid(&w, &vertex_rotation(i)?, n_theta, n_phi))
        .collect()
}
