//! Collective spin states in the Dicke basis.
//!
//! Amplitude vectors are indexed by `m = j, j-1, ..., -j` (index 0 holds
//! `m = j`). For `N = 2j` photons the Dicke state `|j, m⟩` is the Fock state
//! with `j + m` horizontally and `j - m` vertically polarized photons, so
//! index `i` corresponds to `n_V = i`, `n_H = N - i`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::{Complex, DMatrix, DVector, Matrix3, SymmetricEigen};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const NORM_TOL: f64 = 1e-12;
pub(crate) const DENSITY_TOL: f64 = 1e-10;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Spin quantum number stored as the integer `2j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Spin(u32);

impl Spin {
    pub const fn from_twice(two_j: u32) -> Self {
        Spin(two_j)
    }

    /// Spin of the fully symmetric sector of `n` photons.
    pub const fn of_photons(n: u32) -> Self {
        Spin(n)
    }

    pub fn from_value(j: f64) -> Result<Self> {
        let two_j = 2.0 * j;
        if !two_j.is_finite() || two_j < 0.0 || (two_j - two_j.round()).abs() > 1e-12 {
            return Err(Error::InvalidSpin(j));
        }
        Ok(Spin(two_j.round() as u32))
    }

    pub const fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn dim(self) -> usize {
        self.0 as usize + 1
    }

    /// Magnetic quantum number at Dicke index `i`.
    pub fn m_at(self, i: usize) -> f64 {
        self.value() - i as f64
    }

    /// Dicke index of the projection `m` given as `2m`.
    pub fn index_of_twice_m(self, two_m: i32) -> Option<usize> {
        let two_j = self.0 as i32;
        if two_m.abs() > two_j || (two_j - two_m) % 2 != 0 {
            return None;
        }
        Some(((two_j - two_m) / 2) as usize)
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// The triple `(Jx, Jy, Jz)` for one spin sector.
#[derive(Clone, Debug)]
pub struct AngularMomentum {
    spin: Spin,
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
}

impl AngularMomentum {
    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn component(&self, axis: usize) -> &CMatrix {
        match axis {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("axis index {axis} out of range"),
        }
    }

    /// `n · J` for a real 3-vector `n`.
    pub fn along(&self, n: [f64; 3]) -> CMatrix {
        &self.x * c(n[0], 0.0) + &self.y * c(n[1], 0.0) + &self.z * c(n[2], 0.0)
    }

    pub fn raising(&self) -> CMatrix {
        &self.x + &self.y * c(0.0, 1.0)
    }

    pub fn lowering(&self) -> CMatrix {
        &self.x - &self.y * c(0.0, 1.0)
    }
}

/// Standard ladder-operator construction of the spin-`j` generators.
pub fn build_generators(spin: Spin) -> AngularMomentum {
    let d = spin.dim();
    let j = spin.value();
    let mut z = CMatrix::zeros(d, d);
    let mut plus = CMatrix::zeros(d, d);
    for i in 0..d {
        let m = spin.m_at(i);
        z[(i, i)] = c(m, 0.0);
        // J+ |j, m⟩ = sqrt(j(j+1) - m(m+1)) |j, m+1⟩, and m+1 sits at index i-1.
        if i > 0 {
            plus[(i - 1, i)] = c((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let minus = plus.adjoint();
    let x = (&plus + &minus) * c(0.5, 0.0);
    let y = (&plus - &minus) * c(0.0, -0.5);
    AngularMomentum { spin, x, y, z }
}

/// Axis-angle rotation parameters: rotation angle `|theta|` about `theta/|theta|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationParams {
    pub theta: [f64; 3],
}

impl RotationParams {
    pub fn new(theta: [f64; 3]) -> Result<Self> {
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite rotation vector {theta:?}")));
        }
        Ok(Self { theta })
    }

    pub const fn identity() -> Self {
        Self { theta: [0.0; 3] }
    }

    /// Rotation by `angle` about `axis` (normalized internally).
    pub fn about(axis: [f64; 3], angle: f64) -> Self {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if norm == 0.0 {
            return Self::identity();
        }
        Self { theta: axis.map(|a| a * angle / norm) }
    }

    pub fn about_z(angle: f64) -> Self {
        Self { theta: [0.0, 0.0, angle] }
    }

    pub fn angle(&self) -> f64 {
        self.theta.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn inverse(&self) -> Self {
        Self { theta: self.theta.map(|v| -v) }
    }

    /// The SO(3) matrix acting on Bloch vectors (Rodrigues formula).
    pub fn so3(&self) -> Matrix3<f64> {
        let angle = self.angle();
        if angle == 0.0 {
            return Matrix3::identity();
        }
        let [kx, ky, kz] = self.theta.map(|v| v / angle);
        let k = Matrix3::new(0.0, -kz, ky, kz, 0.0, -kx, -ky, kx, 0.0);
        Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
    }

    /// `exp(-i theta · J)` in the given sector, via eigendecomposition of `theta · J`.
    pub fn unitary(&self, spin: Spin) -> CMatrix {
        let gens = build_generators(spin);
        self.unitary_with(&gens)
    }

    pub(crate) fn unitary_with(&self, gens: &AngularMomentum) -> CMatrix {
        let h = gens.along(self.theta);
        let eig = SymmetricEigen::new(h);
        let phases = CVector::from_iterator(
            eig.eigenvalues.len(),
            eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l)),
        );
        let v = &eig.eigenvectors;
        let u = v * CMatrix::from_diagonal(&phases) * v.adjoint();
        debug_assert!(
            (u.adjoint() * &u - CMatrix::identity(u.nrows(), u.nrows())).camax() < 1e-12,
            "rotation operator lost unitarity"
        );
        u
    }
}

/// Pure state of a single spin sector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureSpinState {
    spin: Spin,
    amps: CVector,
}

impl PureSpinState {
    /// Wraps an amplitude vector, rejecting wrong lengths and unnormalized input.
    pub fn new(spin: Spin, amps: CVector) -> Result<Self> {
        if amps.len() != spin.dim() {
            return Err(Error::DimensionMismatch { expected: spin.dim(), found: amps.len() });
        }
        let n2 = amps.norm_squared();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self { spin, amps })
    }

    /// Normalizes `amps`; fails only for the zero vector or a length mismatch.
    pub fn normalized(spin: Spin, amps: CVector) -> Result<Self> {
        if amps.len() != spin.dim() {
            return Err(Error::DimensionMismatch { expected: spin.dim(), found: amps.len() });
        }
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroState);
        }
        Ok(Self { spin, amps: amps / c(norm, 0.0) })
    }

    pub fn from_amplitudes(spin: Spin, amps: &[C64]) -> Result<Self> {
        Self::new(spin, CVector::from_column_slice(amps))
    }

    /// Dicke state `|j, m⟩` addressed by Dicke index.
    pub fn dicke(spin: Spin, index: usize) -> Self {
        assert!(index < spin.dim(), "Dicke index out of range");
        let mut amps = CVector::zeros(spin.dim());
        amps[index] = c(1.0, 0.0);
        Self { spin, amps }
    }

    /// `|N_H, 0_V⟩`.
    pub fn horizontal(n: u32) -> Self {
        Self::dicke(Spin::of_photons(n), 0)
    }

    /// Spin-coherent state with all photons pointing to `(theta, phi)`.
    pub fn coherent(n: u32, theta: f64, phi: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("coherent state needs N >= 1".into()));
        }
        let spin = Spin::of_photons(n);
        let (ch, sh) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let v = C64::from_polar(sh, phi);
        let amps = CVector::from_iterator(
            spin.dim(),
            (0..spin.dim()).map(|i| {
                let n_h = n as usize - i;
                let binom = binomial(n as u64, n_h as u64).sqrt();
                v.powu(i as u32) * c(binom * ch.powi(n_h as i32), 0.0)
            }),
        );
        Ok(Self::normalized(spin, amps)?.with_canonical_phase())
    }

    /// N00N state `(|N_H, 0_V⟩ + |0_H, N_V⟩)/√2` aligned with the z axis.
    pub fn noon(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("N00N state needs N >= 1".into()));
        }
        let spin = Spin::of_photons(n);
        let mut amps = CVector::zeros(spin.dim());
        amps[0] = c(FRAC_1_SQRT_2, 0.0);
        amps[n as usize] = c(FRAC_1_SQRT_2, 0.0);
        Ok(Self { spin, amps })
    }

    /// The four-photon tetrahedron state `√(1/3)|4_H,0_V⟩ + √(2/3)|1_H,3_V⟩`.
    pub fn tetrahedron() -> Self {
        let spin = Spin::of_photons(4);
        let mut amps = CVector::zeros(5);
        amps[0] = c((1.0f64 / 3.0).sqrt(), 0.0);
        amps[3] = c((2.0f64 / 3.0).sqrt(), 0.0);
        Self { spin, amps }
    }

    /// Haar-random pure state of the sector (normalized complex Gaussian vector).
    pub fn random<R: rand::Rng + ?Sized>(spin: Spin, rng: &mut R) -> Self {
        loop {
            let amps = CVector::from_fn(spin.dim(), |_, _| {
                c(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            if let Ok(psi) = Self::normalized(spin, amps) {
                return psi;
            }
        }
    }

    /// Global phase fixed so that the first nonzero amplitude is real and nonnegative.
    pub fn with_canonical_phase(mut self) -> Self {
        if let Some(first) = self.amps.iter().find(|a| a.norm() > 1e-14).copied() {
            let phase = first.conj() / first.norm();
            self.amps *= phase;
        }
        self
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn photons(&self) -> u32 {
        self.spin.twice()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn overlap(&self, other: &PureSpinState) -> Result<C64> {
        self.check_same_sector(other.spin)?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// `|⟨self|other⟩|`.
    pub fn overlap_modulus(&self, other: &PureSpinState) -> Result<f64> {
        Ok(self.overlap(other)?.norm())
    }

    pub fn expectation(&self, op: &CMatrix) -> C64 {
        self.amps.dotc(&(op * &self.amps))
    }

    pub fn projector(&self) -> CMatrix {
        &self.amps * self.amps.adjoint()
    }

    /// Applies `exp(-i theta · J)`; no re-phasing.
    pub fn rotate(&self, r: &RotationParams) -> Self {
        let u = r.unitary(self.spin);
        let amps = u * &self.amps;
        let norm = amps.norm();
        Self { spin: self.spin, amps: amps / c(norm, 0.0) }
    }

    pub fn apply(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.spin.dim() || u.ncols() != self.spin.dim() {
            return Err(Error::DimensionMismatch { expected: self.spin.dim(), found: u.nrows() });
        }
        Self::normalized(self.spin, u * &self.amps)
    }

    pub fn to_density(&self) -> BlockDensityMatrix {
        BlockDensityMatrix::from_pure(self)
    }

    fn check_same_sector(&self, spin: Spin) -> Result<()> {
        if spin != self.spin {
            return Err(Error::DimensionMismatch { expected: self.spin.dim(), found: spin.dim() });
        }
        Ok(())
    }
}

/// One spin sector of a block-diagonal density matrix. `block` is the state of
/// a single copy; all `multiplicity` copies carry the same block.
#[derive(Clone, Debug, PartialEq)]
pub struct Sector {
    pub spin: Spin,
    pub multiplicity: u32,
    pub block: CMatrix,
}

impl Sector {
    pub fn new(spin: Spin, multiplicity: u32, block: CMatrix) -> Self {
        Self { spin, multiplicity, block }
    }

    /// `d_j · Tr(block)`.
    pub fn population(&self) -> f64 {
        self.multiplicity as f64 * self.block.trace().re
    }
}

/// Multiplicities of the spin sectors of `n` spin-1/2 particles, largest spin first.
pub fn sector_multiplicities(n: u32) -> Vec<(Spin, u32)> {
    let mut out = Vec::new();
    let mut two_j = n as i64;
    while two_j >= 0 {
        // d_j = C(N, N/2 - j) - C(N, N/2 - j - 1)
        let k = (n as i64 - two_j) / 2;
        let d = binomial(n as u64, k as u64) - if k > 0 { binomial(n as u64, (k - 1) as u64) } else { 0.0 };
        out.push((Spin::from_twice(two_j as u32), d.round() as u32));
        two_j -= 2;
    }
    out
}

/// Block-diagonal mixed state over spin sectors with multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDensityMatrix {
    sectors: Vec<Sector>,
}

impl BlockDensityMatrix {
    /// Validates Hermiticity, positivity and unit trace.
    pub fn new(sectors: Vec<Sector>) -> Result<Self> {
        let rho = Self { sectors };
        rho.validate()?;
        Ok(rho)
    }

    pub fn from_pure(psi: &PureSpinState) -> Self {
        Self { sectors: vec![Sector::new(psi.spin, 1, psi.projector())] }
    }

    /// `1/(2j+1)` on a single sector of multiplicity one.
    pub fn maximally_mixed(spin: Spin) -> Self {
        let d = spin.dim();
        Self {
            sectors: vec![Sector::new(spin, 1, CMatrix::identity(d, d) * c(1.0 / d as f64, 0.0))],
        }
    }

    /// Embeds a symmetric-sector state into the full sector layout of `n` photons,
    /// with empty blocks for the lower spins.
    pub fn embed_symmetric(block: CMatrix, n: u32) -> Result<Self> {
        let sectors = sector_multiplicities(n)
            .into_iter()
            .map(|(spin, d)| {
                if spin.twice() == n {
                    Sector::new(spin, d, block.clone())
                } else {
                    Sector::new(spin, d, CMatrix::zeros(spin.dim(), spin.dim()))
                }
            })
            .collect();
        Self::new(sectors)
    }

    pub fn validate(&self) -> Result<()> {
        let mut total = 0.0;
        for s in &self.sectors {
            let d = s.spin.dim();
            if s.block.nrows() != d || s.block.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: s.block.nrows() });
            }
            if s.multiplicity == 0 {
                return Err(Error::InvalidDensity(format!("sector j = {} has zero multiplicity", s.spin)));
            }
            let herm = (&s.block - s.block.adjoint()).camax();
            if herm > NORM_TOL.max(1e-12 * s.block.camax()) {
                return Err(Error::InvalidDensity(format!("block j = {} is not Hermitian ({herm:e})", s.spin)));
            }
            let min_eig = hermitian_eigen(&s.block).0.iter().cloned().fold(f64::INFINITY, f64::min);
            if min_eig < -DENSITY_TOL {
                return Err(Error::InvalidDensity(format!(
                    "block j = {} has negative eigenvalue {min_eig:e}",
                    s.spin
                )));
            }
            total += s.population();
        }
        if (total - 1.0).abs() > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("trace is {total}, not 1")));
        }
        Ok(())
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn sector(&self, spin: Spin) -> Option<&Sector> {
        self.sectors.iter().find(|s| s.spin == spin)
    }

    pub fn block(&self, spin: Spin) -> Result<&CMatrix> {
        self.sector(spin).map(|s| &s.block).ok_or(Error::SectorMissing(spin))
    }

    pub fn trace(&self) -> f64 {
        self.sectors.iter().map(Sector::population).sum()
    }

    /// `Tr ρ²` over the full space, counting every copy.
    pub fn purity(&self) -> f64 {
        self.sectors
            .iter()
            .map(|s| s.multiplicity as f64 * (&s.block * &s.block).trace().re)
            .sum()
    }

    /// Population of the largest-spin sector present.
    pub fn symmetric_population(&self) -> f64 {
        self.sectors.iter().max_by_key(|s| s.spin).map(Sector::population).unwrap_or(0.0)
    }

    pub fn map_blocks(&self, mut f: impl FnMut(&Sector) -> CMatrix) -> Self {
        Self {
            sectors: self
                .sectors
                .iter()
                .map(|s| Sector::new(s.spin, s.multiplicity, f(s)))
                .collect(),
        }
    }

    /// Blockwise conjugation by the sector rotation.
    pub fn rotate(&self, r: &RotationParams) -> Self {
        self.map_blocks(|s| {
            let u = r.unitary(s.spin);
            &u * &s.block * u.adjoint()
        })
    }

    /// `d_j ⟨ψ|block_j|ψ⟩` for the sector of `psi`.
    pub fn fidelity(&self, psi: &PureSpinState) -> Result<f64> {
        let s = self.sector(psi.spin).ok_or(Error::SectorMissing(psi.spin))?;
        Ok(s.multiplicity as f64 * psi.expectation(&s.block).re)
    }

    /// All eigenpairs, each copy of a sector counted once with its multiplicity,
    /// sorted by decreasing eigenvalue: `(eigenvalue, multiplicity, eigenvector)`.
    pub fn eigen(&self) -> Vec<(f64, u32, PureSpinState)> {
        let mut out = Vec::new();
        for s in &self.sectors {
            let (vals, vecs) = hermitian_eigen(&s.block);
            for (k, &v) in vals.iter().enumerate() {
                let col = vecs.column(k).into_owned();
                if let Ok(psi) = PureSpinState::normalized(s.spin, col) {
                    out.push((v, s.multiplicity, psi));
                }
            }
        }
        out.sort_by(|a, b| b.0.total_cmp(&a.0));
        out
    }

    /// Eigenstate with the largest eigenvalue, phase-fixed.
    pub fn dominant_eigenstate(&self) -> Option<(f64, PureSpinState)> {
        self.eigen().into_iter().next().map(|(v, _, psi)| (v, psi.with_canonical_phase()))
    }

    /// Trace distance `½‖ρ - σ‖₁` between states with the same sector layout.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        let mut total = 0.0;
        for s in &self.sectors {
            let o = other
                .sector(s.spin)
                .map(|o| o.block.clone())
                .unwrap_or_else(|| CMatrix::zeros(s.spin.dim(), s.spin.dim()));
            let diff = &s.block - o;
            let (vals, _) = hermitian_eigen(&diff);
            total += s.multiplicity as f64 * vals.iter().map(|v| v.abs()).sum::<f64>();
        }
        for o in &other.sectors {
            if self.sector(o.spin).is_none() {
                let (vals, _) = hermitian_eigen(&o.block);
                total += o.multiplicity as f64 * vals.iter().map(|v| v.abs()).sum::<f64>();
            }
        }
        Ok(0.5 * total)
    }
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_columns(&idx.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    (vals, vecs)
}

pub(crate) fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
