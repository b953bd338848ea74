//! Block-diagonal tomography of four-photon polarization states.
//!
//! A basis setting is an axis `n̂`; outcome `k` (photons transmitted) is the
//! projector onto `m = k - 2` along `n̂` in every spin sector. Each arm has three
//! detectors, so `k = 0` and `k = 4` are never recorded.
//!
//! Only `d_j B_j` enters the probabilities, so the fit runs over the effective
//! 9-dimensional block `σ = B_2 ⊕ 3 B_1 ⊕ 2 B_0` with unit trace; this ties the
//! same-spin copies together by construction.

use nalgebra::{DMatrix, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrology;
use crate::spin::{c, BlockDensityMatrix, CMatrix, PureSpinState, RotationParams, Sector, Spin, C64};

/// Number of photons in the measured state.
pub const PHOTONS: u32 = 4;
/// Outcomes `k` the multiplexed detectors can resolve.
pub const DETECTABLE: [usize; 3] = [1, 2, 3];
/// Free parameters of the block structure before trace normalization.
pub const BLOCK_PARAMETERS: usize = 35;

const EFFECTIVE_DIM: usize = 9;
const SECTORS: [(u32, u32, usize); 3] = [(4, 1, 0), (2, 3, 5), (0, 2, 8)];

/// Measurement axis on the Poincaré sphere (`+z` transmits `H`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct BasisSetting {
    axis: [f64; 3],
}

impl TryFrom<[f64; 3]> for BasisSetting {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BasisSetting> for [f64; 3] {
    fn from(b: BasisSetting) -> Self {
        b.axis
    }
}

impl BasisSetting {
    pub fn new(axis: [f64; 3]) -> Result<Self> {
        let norm = Vector3::from(axis).norm();
        if !(norm.is_finite() && norm > 1e-9) {
            return Err(Error::InvalidParameter(format!("basis axis {axis:?} has no direction")));
        }
        if (norm - 1.0).abs() < 1e-12 {
            return Ok(Self { axis });
        }
        Ok(Self { axis: axis.map(|a| a / norm) })
    }

    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self { axis: [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()] }
    }

    pub fn z() -> Self {
        Self { axis: [0.0, 0.0, 1.0] }
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    /// A rotation taking `+z` to the axis.
    pub fn rotation(&self) -> RotationParams {
        let n = Vector3::from(self.axis);
        let z = Vector3::z();
        let cross = z.cross(&n);
        let s = cross.norm();
        if s < 1e-15 {
            return if n.z > 0.0 { RotationParams::identity() } else { RotationParams::about([1.0, 0.0, 0.0], std::f64::consts::PI) };
        }
        RotationParams::about(cross.into(), s.atan2(n.z))
    }

    /// Projector onto `m = k - 2` along the axis in `spin`, or `None` when `|m| > j`.
    pub fn projector(&self, spin: Spin, k: usize) -> Option<CMatrix> {
        let two_m = 2 * k as i32 - PHOTONS as i32;
        let idx = spin.index_of_twice_m(two_m)?;
        let u = self.rotation().unitary(spin);
        let col = u.column(idx).into_owned();
        Some(&col * col.adjoint())
    }
}

/// The default 13 settings: `+z` and 12 spherical-Fibonacci axes in the upper hemisphere.
pub fn default_bases() -> Vec<BasisSetting> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut out = vec![BasisSetting::z()];
    for i in 0..12 {
        let z = 1.0 - (i as f64 + 1.5) / 13.5;
        let r = (1.0 - z * z).sqrt();
        let phi = i as f64 * golden;
        out.push(BasisSetting { axis: [r * phi.cos(), r * phi.sin(), z] });
    }
    out
}

/// Smallest angle between two measurement axes (as lines, not directions).
pub fn min_axis_angle(bases: &[BasisSetting]) -> f64 {
    let mut best = std::f64::consts::FRAC_PI_2;
    for (i, a) in bases.iter().enumerate() {
        for b in &bases[i + 1..] {
            let dot: f64 = a.axis.iter().zip(&b.axis).map(|(x, y)| x * y).sum();
            best = best.min(dot.abs().min(1.0).acos());
        }
    }
    best
}

fn check_photons(rho: &BlockDensityMatrix) -> Result<()> {
    for s in rho.sectors() {
        let tj = s.spin.twice();
        if tj > PHOTONS || !(PHOTONS - tj).is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "sector j = {} does not belong to a {PHOTONS}-photon state",
                s.spin
            )));
        }
    }
    Ok(())
}

/// `p(k)` for `k = 0..=4` transmitted photons.
pub fn outcome_probabilities(rho: &BlockDensityMatrix, b: &BasisSetting) -> Result<[f64; 5]> {
    check_photons(rho)?;
    let r = b.rotation();
    let mut p = [0.0; 5];
    for s in rho.sectors() {
        let u = r.unitary(s.spin);
        let local = u.adjoint() * &s.block * &u;
        for (k, pk) in p.iter_mut().enumerate() {
            let two_m = 2 * k as i32 - PHOTONS as i32;
            if let Some(i) = s.spin.index_of_twice_m(two_m) {
                *pk += s.multiplicity as f64 * local[(i, i)].re;
            }
        }
    }
    Ok(p)
}

/// Detected counts per basis for `k = 1, 2, 3`, with the relative exposure of each basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub counts: Vec<[u64; 3]>,
    /// Relative exposure per basis (trials in simulation); equal when unknown.
    pub exposure: Vec<f64>,
}

impl CountRecord {
    pub fn new(counts: Vec<[u64; 3]>) -> Self {
        let exposure = vec![1.0; counts.len()];
        Self { counts, exposure }
    }

    pub fn total_events(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn nonempty_projections(&self) -> usize {
        self.counts.iter().flatten().filter(|&&n| n > 0).count()
    }

    pub fn validate(&self, n_bases: usize) -> Result<()> {
        if self.counts.len() != n_bases || self.exposure.len() != n_bases {
            return Err(Error::DimensionMismatch { expected: n_bases, found: self.counts.len() });
        }
        if self.exposure.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::InvalidParameter("basis exposures must be positive".into()));
        }
        Ok(())
    }
}

/// Equal allocation of `total_events` trials over the bases, a multinomial draw over
/// the five outcomes per basis, censored outcomes discarded.
pub fn simulate_counts(rho: &BlockDensityMatrix, bases: &[BasisSetting], total_events: u64, seed: u64) -> Result<CountRecord> {
    let shares = equal_shares(total_events, bases.len());
    simulate_counts_with(rho, bases, &shares, seed)
}

pub fn equal_shares(total: u64, n: usize) -> Vec<u64> {
    if n == 0 {
        return Vec::new();
    }
    let base = total / n as u64;
    let extra = (total % n as u64) as usize;
    (0..n).map(|i| base + u64::from(i < extra)).collect()
}

/// As [`simulate_counts`] with an explicit number of trials per basis.
pub fn simulate_counts_with(rho: &BlockDensityMatrix, bases: &[BasisSetting], trials: &[u64], seed: u64) -> Result<CountRecord> {
    if trials.len() != bases.len() {
        return Err(Error::DimensionMismatch { expected: bases.len(), found: trials.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = Vec::with_capacity(bases.len());
    for (b, &n) in bases.iter().zip(trials) {
        let p = outcome_probabilities(rho, b)?;
        let mut remaining = n;
        let mut left = 1.0;
        let mut drawn = [0u64; 5];
        for k in 0..5 {
            if remaining == 0 {
                break;
            }
            if k == 4 {
                drawn[k] = remaining;
                break;
            }
            let q = (p[k].max(0.0) / left).clamp(0.0, 1.0);
            let x = if q >= 1.0 {
                remaining
            } else if q <= 0.0 {
                0
            } else {
                Binomial::new(remaining, q).expect("valid binomial").sample(&mut rng)
            };
            drawn[k] = x;
            remaining -= x;
            left = (left - p[k].max(0.0)).max(f64::MIN_POSITIVE);
        }
        counts.push([drawn[1], drawn[2], drawn[3]]);
    }
    let exposure = trials.iter().map(|&t| t.max(1) as f64).collect();
    Ok(CountRecord { counts, exposure })
}

/// Projectors for the detectable outcomes on the effective 9-dimensional block.
struct MeasurementModel {
    projectors: Vec<[CMatrix; 3]>,
    detectable: Vec<CMatrix>,
}

impl MeasurementModel {
    fn new(bases: &[BasisSetting]) -> Self {
        let projectors: Vec<[CMatrix; 3]> = bases
            .iter()
            .map(|b| {
                DETECTABLE.map(|k| {
                    let mut m = CMatrix::zeros(EFFECTIVE_DIM, EFFECTIVE_DIM);
                    for (tj, _, off) in SECTORS {
                        let spin = Spin::from_twice(tj);
                        if let Some(p) = b.projector(spin, k) {
                            m.view_mut((off, off), (spin.dim(), spin.dim())).copy_from(&p);
                        }
                    }
                    m
                })
            })
            .collect();
        let detectable = projectors.iter().map(|ps| ps.iter().fold(CMatrix::zeros(EFFECTIVE_DIM, EFFECTIVE_DIM), |a, p| a + p)).collect();
        Self { projectors, detectable }
    }

    fn prob(p: &CMatrix, sigma: &CMatrix) -> f64 {
        // Re tr(p σ) for Hermitian arguments
        p.iter().zip(sigma.transpose().iter()).map(|(a, b)| (a * b).re).sum()
    }

    /// Joint multinomial log-likelihood over all recorded cells.
    fn log_likelihood(&self, rec: &CountRecord, sigma: &CMatrix) -> f64 {
        let mut ll = 0.0;
        let mut norm = 0.0;
        for (b, ps) in self.projectors.iter().enumerate() {
            let e = rec.exposure[b];
            norm += e * Self::prob(&self.detectable[b], sigma);
            for (j, p) in ps.iter().enumerate() {
                let n = rec.counts[b][j];
                if n > 0 {
                    let q = Self::prob(p, sigma);
                    if !(q > 0.0) {
                        return f64::NEG_INFINITY;
                    }
                    ll += n as f64 * (e * q).ln();
                }
            }
        }
        ll - rec.total_events() as f64 * norm.ln()
    }

    /// `(R - G)/N`, the likelihood gradient scaled so that `tr(σ X) = 0`.
    fn ascent_operator(&self, rec: &CountRecord, sigma: &CMatrix) -> CMatrix {
        let n_total = rec.total_events() as f64;
        let mut r = CMatrix::zeros(EFFECTIVE_DIM, EFFECTIVE_DIM);
        let mut g = CMatrix::zeros(EFFECTIVE_DIM, EFFECTIVE_DIM);
        let mut norm = 0.0;
        for (b, ps) in self.projectors.iter().enumerate() {
            let e = rec.exposure[b];
            norm += e * Self::prob(&self.detectable[b], sigma);
            g += &self.detectable[b] * c(e, 0.0);
            for (j, p) in ps.iter().enumerate() {
                let n = rec.counts[b][j];
                if n > 0 {
                    r += p * c(n as f64 / Self::prob(p, sigma), 0.0);
                }
            }
        }
        (r - g * c(n_total / norm, 0.0)) / c(n_total, 0.0)
    }
}

/// Real rank of the span of the 39-or-fewer detectable projectors on the block space.
pub fn measurement_singular_values(bases: &[BasisSetting]) -> Vec<f64> {
    let model = MeasurementModel::new(bases);
    let rows: Vec<Vec<f64>> = model.projectors.iter().flatten().map(hermitian_coordinates).collect();
    let m = DMatrix::from_fn(rows.len(), BLOCK_PARAMETERS, |i, j| rows[i][j]);
    let mut v: Vec<f64> = m.svd(false, false).singular_values.iter().cloned().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn measurement_rank(bases: &[BasisSetting]) -> usize {
    let model = MeasurementModel::new(bases);
    let rows: Vec<Vec<f64>> = model.projectors.iter().flatten().map(hermitian_coordinates).collect();
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), BLOCK_PARAMETERS, |i, j| rows[i][j]);
    m.svd(false, false).rank(1e-9)
}

fn from_hermitian_coordinates(v: &[f64]) -> CMatrix {
    let mut m = CMatrix::zeros(EFFECTIVE_DIM, EFFECTIVE_DIM);
    let mut it = v.iter();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for (tj, _, off) in SECTORS {
        let d = tj as usize + 1;
        for i in 0..d {
            m[(off + i, off + i)] = c(*it.next().expect("coordinate count"), 0.0);
            for j in i + 1..d {
                let re = it.next().expect("coordinate count") * r;
                let im = it.next().expect("coordinate count") * r;
                m[(off + i, off + j)] = c(re, im);
                m[(off + j, off + i)] = c(re, -im);
            }
        }
    }
    m
}

/// Entropy of the full 16-dimensional state whose effective block is `sigma`.
fn block_entropy(sigma: &CMatrix) -> Option<f64> {
    let (vals, _) = crate::spin::hermitian_eigen(sigma);
    if vals[0] < -1e-13 {
        return None;
    }
    let mut s = 0.0;
    for (tj, mult, off) in SECTORS {
        let d = tj as usize + 1;
        let sub = sigma.view((off, off), (d, d)).into_owned();
        let (v, _) = crate::spin::hermitian_eigen(&sub);
        for x in v.into_iter().filter(|&x| x > 0.0) {
            s -= x * (x / mult as f64).ln();
        }
    }
    Some(s)
}

/// Newton ascent of the entropy inside the set of states with the same outcome
/// probabilities (and so the same likelihood).
fn max_entropy_refine(model: &MeasurementModel, sigma: &CMatrix) -> CMatrix {
    let rows: Vec<Vec<f64>> = model.projectors.iter().flatten().map(hermitian_coordinates).collect();
    let a = DMatrix::from_fn(rows.len(), BLOCK_PARAMETERS, |i, j| rows[i][j]);
    let eig = nalgebra::SymmetricEigen::new(a.transpose() * &a);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let kernel: Vec<CMatrix> = (0..BLOCK_PARAMETERS)
        .filter(|&i| eig.eigenvalues[i] < 1e-10 * top)
        .map(|i| from_hermitian_coordinates(eig.eigenvectors.column(i).as_slice()))
        .collect();
    let k = kernel.len();
    if k == 0 {
        return sigma.clone();
    }
    let mut sigma = sigma.clone();
    let Some(mut entropy) = block_entropy(&sigma) else { return sigma };
    for _ in 0..200 {
        // N - tr(N) σ keeps unit trace and scales every outcome probability alike,
        // so the joint likelihood is unchanged along these directions
        let null: Vec<CMatrix> = kernel.iter().map(|n| n - &sigma * n.trace()).collect();
        let mut grad = nalgebra::DVector::<f64>::zeros(k);
        let mut hess = DMatrix::<f64>::zeros(k, k);
        for (tj, mult, off) in SECTORS {
            let d = tj as usize + 1;
            let (vals, vecs) = crate::spin::hermitian_eigen(&sigma.view((off, off), (d, d)).into_owned());
            let lam: Vec<f64> = vals.iter().map(|v| v.max(1e-14)).collect();
            let rotated: Vec<CMatrix> = null
                .iter()
                .map(|n| vecs.adjoint() * n.view((off, off), (d, d)) * &vecs)
                .collect();
            // divided differences of ln
            let div = |p: usize, q: usize| {
                if (lam[p] - lam[q]).abs() <= 1e-12 * lam[p].max(lam[q]) {
                    2.0 / (lam[p] + lam[q])
                } else {
                    (lam[p].ln() - lam[q].ln()) / (lam[p] - lam[q])
                }
            };
            for i in 0..k {
                for p in 0..d {
                    grad[i] += (-lam[p].ln() + (mult as f64).ln()) * rotated[i][(p, p)].re;
                }
                for j in 0..=i {
                    let mut h = 0.0;
                    for p in 0..d {
                        for q in 0..d {
                            h -= div(p, q) * (rotated[i][(p, q)] * rotated[j][(p, q)].conj()).re;
                        }
                    }
                    hess[(i, j)] += h;
                    if i != j {
                        hess[(j, i)] += h;
                    }
                }
            }
        }
        let step_opt = (-hess.clone()).cholesky().map(|ch| ch.solve(&grad));
        let Some(step) = step_opt else { break };
        let decrement = grad.dot(&step);
        if decrement < 1e-14 {
            break;
        }
        let dir = null.iter().zip(step.iter()).fold(CMatrix::zeros(EFFECTIVE_DIM, EFFECTIVE_DIM), |acc, (n, w)| acc + n * c(*w, 0.0));
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-12 {
            let next = &sigma + &dir * c(t, 0.0);
            if let Some(s) = block_entropy(&next) {
                if s > entropy {
                    sigma = next;
                    entropy = s;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    sigma
}

fn hermitian_coordinates(m: &CMatrix) -> Vec<f64> {
    let mut v = Vec::with_capacity(BLOCK_PARAMETERS);
    for (tj, _, off) in SECTORS {
        let d = tj as usize + 1;
        for i in 0..d {
            v.push(m[(off + i, off + i)].re);
            for j in i + 1..d {
                v.push(m[(off + i, off + j)].re * 2f64.sqrt());
                v.push(m[(off + i, off + j)].im * 2f64.sqrt());
            }
        }
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    /// Stop when both the per-event log-likelihood change of an accepted step and
    /// the squared gradient norm `tr(XσX)` fall below this.
    pub tol: f64,
    pub max_iterations: usize,
    /// Among equally likely states pick the one of largest entropy.
    pub max_entropy: bool,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: 100_000, max_entropy: true }
    }
}

/// Mean and sample standard deviation over Monte-Carlo resamples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    /// Resamples contributing (non-finite values are skipped).
    pub samples: usize,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        let n = v.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN, samples: 0 };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Self { mean, std: var.sqrt(), samples: n }
    }
}

/// Elementwise standard deviations of one sector block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorErrors {
    pub two_j: u32,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McErrors {
    pub n_resamples: usize,
    pub failures: usize,
    /// More than a tenth of the resamples failed to reconstruct.
    pub warning: bool,
    pub entries: Vec<SectorErrors>,
    pub fidelity: Stat,
    pub sqcrb: Stat,
    pub symmetric_population: Stat,
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    pub rho_hat: BlockDensityMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    /// `φ` of the `e^{-iJ_zφ}` alignment; zero until [`ReconstructionResult::align`] runs.
    pub phi: f64,
    pub mc_errors: Option<McErrors>,
}

impl ReconstructionResult {
    /// Sets `φ` from the alignment with `target` and returns the aligned fidelity.
    pub fn align(&mut self, target: &PureSpinState) -> Result<f64> {
        let (phi, rotated) = align_phase(&self.rho_hat, target)?;
        self.phi = phi;
        rotated.fidelity(target)
    }

    pub fn aligned_state(&self) -> BlockDensityMatrix {
        self.rho_hat.rotate(&RotationParams::about_z(self.phi))
    }
}

/// Maximum-likelihood block state from a count record.
pub fn mle_reconstruct(counts: &CountRecord, bases: &[BasisSetting]) -> Result<ReconstructionResult> {
    mle_reconstruct_with(counts, bases, MleOptions::default(), |_, _| {})
}

/// As [`mle_reconstruct`]; `observe(iteration, log_likelihood)` sees every accepted step.
pub fn mle_reconstruct_with(
    counts: &CountRecord,
    bases: &[BasisSetting],
    opts: MleOptions,
    mut observe: impl FnMut(usize, f64),
) -> Result<ReconstructionResult> {
    counts.validate(bases.len())?;
    let nonempty = counts.nonempty_projections();
    if nonempty < BLOCK_PARAMETERS {
        return Err(Error::Underdetermined { rank: nonempty, required: BLOCK_PARAMETERS });
    }
    let model = MeasurementModel::new(bases);
    let n_total = counts.total_events() as f64;

    let mut sigma = CMatrix::zeros(EFFECTIVE_DIM, EFFECTIVE_DIM);
    for (tj, mult, off) in SECTORS {
        for i in 0..=tj as usize {
            sigma[(off + i, off + i)] = c(mult as f64 / 16.0, 0.0);
        }
    }
    let mut ll = model.log_likelihood(counts, &sigma);
    let mut eps = 1.0;
    let mut last_change = f64::INFINITY;
    let mut iterations = 0;
    let eye = CMatrix::identity(EFFECTIVE_DIM, EFFECTIVE_DIM);
    let converged = loop {
        if iterations >= opts.max_iterations {
            break false;
        }
        iterations += 1;
        let x = model.ascent_operator(counts, &sigma);
        let mut accepted = None;
        while eps > 1e-14 {
            let m = &eye + &x * c(eps, 0.0);
            let mut next = &m * &sigma * m.adjoint();
            next = (&next + next.adjoint()) * c(0.5, 0.0);
            let tr = next.trace().re;
            next /= c(tr, 0.0);
            let ll_next = model.log_likelihood(counts, &next);
            if ll_next >= ll {
                accepted = Some((next, ll_next));
                break;
            }
            eps *= 0.5;
        }
        let Some((next, ll_next)) = accepted else {
            // no ascent direction left at machine precision
            break true;
        };
        assert!(ll_next >= ll, "likelihood decreased during iteration");
        last_change = (ll_next - ll) / n_total;
        // first-order gain per unit step; zero exactly at a stationary point
        let gain = (&x * &sigma * &x).trace().re;
        sigma = next;
        ll = ll_next;
        observe(iterations, ll);
        eps = (eps * 2.0).min(1e4);
        if last_change < opts.tol && gain < opts.tol {
            break true;
        }
    };
    if !converged {
        return Err(Error::NonConvergence { iterations, last_change });
    }
    if opts.max_entropy {
        sigma = max_entropy_refine(&model, &sigma);
    }
    let rho_hat = effective_to_density(&sigma)?;
    Ok(ReconstructionResult { rho_hat, log_likelihood: ll, iterations, phi: 0.0, mc_errors: None })
}

fn effective_to_density(sigma: &CMatrix) -> Result<BlockDensityMatrix> {
    let sectors = SECTORS
        .iter()
        .map(|&(tj, mult, off)| {
            let spin = Spin::from_twice(tj);
            let d = spin.dim();
            let block = sigma.view((off, off), (d, d)).into_owned() / c(mult as f64, 0.0);
            Sector::new(spin, mult, (&block + block.adjoint()) * c(0.5, 0.0))
        })
        .collect();
    BlockDensityMatrix::new(sectors)
}

/// `φ` maximizing `⟨ψ|e^{-iJ_zφ} ρ e^{iJ_zφ}|ψ⟩` over `(-π, π]`, and the rotated state.
/// On plateaus the smallest `|φ|` wins.
pub fn align_phase(rho: &BlockDensityMatrix, target: &PureSpinState) -> Result<(f64, BlockDensityMatrix)> {
    let spin = target.spin();
    let block = rho.block(spin)?;
    let mult = rho.sector(spin).map(|s| s.multiplicity as f64).unwrap_or(1.0);
    let psi = target.amplitudes();
    // F(φ) = Σ_ab ψ_a* ρ_ab ψ_b e^{-i(m_a - m_b)φ}
    let terms: Vec<(f64, C64)> = (0..spin.dim())
        .flat_map(|a| (0..spin.dim()).map(move |b| (a, b)))
        .map(|(a, b)| (spin.m_at(a) - spin.m_at(b), psi[a].conj() * block[(a, b)] * psi[b] * mult))
        .filter(|(_, w)| w.norm() > 0.0)
        .collect();
    let f = |phi: f64| -> f64 { terms.iter().map(|(d, w)| (w * C64::from_polar(1.0, -d * phi)).re).sum() };
    let df = |phi: f64| -> f64 { terms.iter().map(|(d, w)| (w * C64::from_polar(1.0, -d * phi) * c(0.0, -d)).re).sum() };
    let d2f = |phi: f64| -> f64 { terms.iter().map(|(d, w)| (w * C64::from_polar(1.0, -d * phi) * c(-d * d, 0.0)).re).sum() };

    let n = 7200;
    let grid: Vec<f64> = (0..n).map(|i| -std::f64::consts::PI + (i + 1) as f64 * std::f64::consts::TAU / n as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&p| f(p)).collect();
    let fmax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = fmax - values.iter().cloned().fold(f64::INFINITY, f64::min);
    let phi = if spread <= 1e-12 {
        0.0
    } else {
        // polish every near-maximal grid point, then choose by value and |φ|
        let mut candidates: Vec<f64> = grid
            .iter()
            .zip(&values)
            .enumerate()
            .filter(|(i, (_, &v))| {
                let prev = values[(i + n - 1) % n];
                let next = values[(i + 1) % n];
                v >= prev && v >= next && v > fmax - 1e-3 * spread.max(1e-12)
            })
            .map(|(_, (&p, _))| {
                let mut x = p;
                for _ in 0..50 {
                    let h = d2f(x);
                    if h >= 0.0 {
                        break;
                    }
                    let step = df(x) / h;
                    x -= step;
                    if step.abs() < 1e-15 {
                        break;
                    }
                }
                wrap_angle(x)
            })
            .collect();
        let best = candidates.iter().map(|&p| f(p)).fold(f64::NEG_INFINITY, f64::max);
        candidates.retain(|&p| f(p) >= best - 1e-12 * best.abs().max(1.0));
        candidates.into_iter().min_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(0.0)
    };
    Ok((phi, rho.rotate(&RotationParams::about_z(phi))))
}

fn wrap_angle(x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut y = x.rem_euclid(tau);
    if y > std::f64::consts::PI {
        y -= tau;
    }
    y
}

/// Poisson resampling of every cell, reconstruction, alignment with `target`;
/// resample `i` draws from a generator seeded with `seed + i`.
pub fn monte_carlo_errors(
    counts: &CountRecord,
    bases: &[BasisSetting],
    n_resamples: usize,
    seed: u64,
    target: &PureSpinState,
) -> Result<McErrors> {
    if n_resamples < 2 {
        return Err(Error::InvalidParameter("at least 2 resamples are needed".into()));
    }
    counts.validate(bases.len())?;
    let runs: Vec<Option<(BlockDensityMatrix, f64, f64)>> = (0..n_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let resampled = CountRecord {
                counts: counts
                    .counts
                    .iter()
                    .map(|row| row.map(|n| if n == 0 { 0 } else { Poisson::new(n as f64).expect("positive mean").sample(&mut rng) as u64 }))
                    .collect(),
                exposure: counts.exposure.clone(),
            };
            let mut rec = mle_reconstruct(&resampled, bases).ok()?;
            let fid = rec.align(target).ok()?;
            let aligned = rec.aligned_state();
            let q = metrology::sqcrb(&aligned);
            Some((aligned, fid, q))
        })
        .collect();
    let ok: Vec<&(BlockDensityMatrix, f64, f64)> = runs.iter().flatten().collect();
    let failures = n_resamples - ok.len();
    if ok.len() < 2 {
        return Err(Error::Consistency(format!("{failures} of {n_resamples} resamples failed to reconstruct")));
    }
    let entries = ok[0]
        .0
        .sectors()
        .iter()
        .map(|s| {
            let d = s.spin.dim();
            let part = |f: fn(C64) -> f64| -> Vec<Vec<f64>> {
                (0..d)
                    .map(|i| {
                        (0..d)
                            .map(|j| Stat::of(ok.iter().map(|r| f(r.0.block(s.spin).expect("same layout")[(i, j)]))).std)
                            .collect()
                    })
                    .collect()
            };
            SectorErrors { two_j: s.spin.twice(), re: part(|z| z.re), im: part(|z| z.im) }
        })
        .collect();
    Ok(McErrors {
        n_resamples,
        failures,
        warning: failures * 10 > n_resamples,
        entries,
        fidelity: Stat::of(ok.iter().map(|r| r.1)),
        sqcrb: Stat::of(ok.iter().map(|r| r.2)),
        symmetric_population: Stat::of(ok.iter().map(|r| r.0.symmetric_population())),
    })
}
