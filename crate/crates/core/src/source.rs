//! Truncated Fock-space model of the heralded tetrahedron-state source.
//!
//! Modes are `H`, `V` (collinear output), `Herald` and `Signal` (non-collinear
//! pair). Loss is a beamsplitter to an environment mode per loss site; the lost
//! photon count per site is kept as a classical label, so the register is a
//! mixture of sparse pure vectors keyed by that label.
//!
//! Pipeline, in order:
//! 1. single-mode squeezing on `H` with pair term `η a_H†²`;
//! 2. transmission `t` on the squeezed photons;
//! 3. coherent displacement of `V` by `α` (an effective, already-attenuated
//!    amplitude, default `√(2ηt)`);
//! 4. the polarization rotation `a_H† → (a_H† - a_V†)/√2`, `a_V† → (a_H† + a_V†)/√2`,
//!    which turns `a_V†(a_H†² + a_V†²/3)` into `(√2/3)(a_H†³ + a_V†³)`;
//! 5. two-mode squeezing between `Signal` and `Herald` with pair term `μ a_S†a_R†`;
//! 6. transmission `τ` on `Signal` and on `Herald`;
//! 7. the Sagnac network `a_H† → (a_H† + a_D†)/√2`, `a_S† → (a_H† - a_D†)/√2`, which
//!    halves the `H` intensity of the three-photon state and merges the heralded
//!    photon into `H`; the discard port `D` is traced out;
//! 8. post-selection on a herald click and exactly four photons in `H + V`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{c, BlockDensityMatrix, CMatrix, Sector, Spin, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    H = 0,
    V = 1,
    Herald = 2,
    Signal = 3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossSite {
    Collinear = 0,
    Signal = 1,
    Herald = 2,
    Discard = 3,
}

const MODES: usize = 4;
const SITES: usize = 4;

type Occupation = [u8; MODES];
type LossRecord = [u8; SITES];

/// Smallest pipeline truncation that still contains the six-photon contamination.
pub const MIN_N_MAX: u32 = 6;

fn sqrt_factorial_ratio(hi: u32, lo: u32) -> f64 {
    // sqrt(hi! / lo!)
    ((lo + 1)..=hi).map(|k| k as f64).product::<f64>().sqrt()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Mixture of truncated pure states over the four source modes.
#[derive(Clone, Debug, PartialEq)]
pub struct FockRegister {
    n_max: u32,
    branches: BTreeMap<LossRecord, BTreeMap<Occupation, C64>>,
}

impl FockRegister {
    pub fn vacuum(n_max: u32) -> Self {
        let mut branch = BTreeMap::new();
        branch.insert([0; MODES], c(1.0, 0.0));
        let mut branches = BTreeMap::new();
        branches.insert([0; SITES], branch);
        Self { n_max, branches }
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    /// Total probability; below one by the weight dropped at the truncation.
    pub fn total_probability(&self) -> f64 {
        self.branches.values().flat_map(|b| b.values()).map(|a| a.norm_sqr()).sum()
    }

    pub fn truncation_residual(&self) -> f64 {
        (1.0 - self.total_probability()).max(0.0)
    }

    /// Probability of `n` photons in `mode`, summed over everything else.
    pub fn occupation_probability(&self, mode: Mode, n: u8) -> f64 {
        self.components().filter(|(_, occ, _)| occ[mode as usize] == n).map(|(_, _, a)| a.norm_sqr()).sum()
    }

    /// Probability that `site` received exactly `n` photons.
    pub fn loss_probability(&self, site: LossSite, n: u8) -> f64 {
        self.components().filter(|(lost, _, _)| lost[site as usize] == n).map(|(_, _, a)| a.norm_sqr()).sum()
    }

    pub fn mean_photons(&self, mode: Mode) -> f64 {
        self.components().map(|(_, occ, a)| occ[mode as usize] as f64 * a.norm_sqr()).sum()
    }

    /// Amplitude of a component with nothing lost.
    pub fn amplitude(&self, occ: [u8; MODES]) -> C64 {
        self.branches
            .get(&[0; SITES])
            .and_then(|b| b.get(&occ))
            .copied()
            .unwrap_or(c(0.0, 0.0))
    }

    fn components(&self) -> impl Iterator<Item = (&LossRecord, &Occupation, C64)> {
        self.branches.iter().flat_map(|(lost, b)| b.iter().map(move |(occ, a)| (lost, occ, *a)))
    }

    fn generated(lost: &LossRecord, occ: &Occupation) -> u32 {
        lost.iter().chain(occ.iter()).map(|&n| n as u32).sum()
    }

    /// Applies a map on one mode's occupation; `f(n, room)` returns the new
    /// occupations (at most `room`) with their amplitudes.
    fn map_mode(&mut self, mode: Mode, f: impl Fn(u32, u32) -> Vec<(u32, C64)>) {
        let m = mode as usize;
        let n_max = self.n_max;
        for branch in self.branches.values_mut() {
            let mut next: BTreeMap<Occupation, C64> = BTreeMap::new();
            for (occ, amp) in branch.iter() {
                let n = occ[m] as u32;
                let others = Self::generated(&[0; SITES], occ) - n;
                let room = n_max.saturating_sub(others);
                for (n2, w) in f(n, room) {
                    let mut o = *occ;
                    o[m] = n2 as u8;
                    *next.entry(o).or_insert(c(0.0, 0.0)) += amp * w;
                }
            }
            *branch = next;
        }
        self.enforce_budget();
    }

    fn map_two_modes(&mut self, a: Mode, b: Mode, f: impl Fn(u32, u32, u32) -> Vec<(u32, u32, C64)>) {
        let (ia, ib) = (a as usize, b as usize);
        let n_max = self.n_max;
        for branch in self.branches.values_mut() {
            let mut next: BTreeMap<Occupation, C64> = BTreeMap::new();
            for (occ, amp) in branch.iter() {
                let (na, nb) = (occ[ia] as u32, occ[ib] as u32);
                let others = Self::generated(&[0; SITES], occ) - na - nb;
                let room = n_max.saturating_sub(others);
                for (na2, nb2, w) in f(na, nb, room) {
                    let mut o = *occ;
                    o[ia] = na2 as u8;
                    o[ib] = nb2 as u8;
                    *next.entry(o).or_insert(c(0.0, 0.0)) += amp * w;
                }
            }
            *branch = next;
        }
        self.enforce_budget();
    }

    /// Drops components whose generated photon count (present plus lost) exceeds `n_max`.
    fn enforce_budget(&mut self) {
        let n_max = self.n_max;
        for (lost, branch) in self.branches.iter_mut() {
            branch.retain(|occ, a| Self::generated(lost, occ) <= n_max && a.norm_sqr() > 0.0);
        }
        self.branches.retain(|_, b| !b.is_empty());
    }

    /// `exp((ξ/2)a†²) (1-|ξ|²)^{(n+½)/2} exp(-(ξ*/2)a²)`, the disentangled single-mode squeezer.
    pub fn squeeze(&mut self, mode: Mode, xi: C64) -> Result<()> {
        if !(xi.norm() < 1.0) {
            return Err(Error::InvalidParameter(format!("squeezing parameter |{xi}| must be below 1")));
        }
        let damp = 1.0 - xi.norm_sqr();
        self.map_mode(mode, |n, room| {
            let mut out = Vec::new();
            for k in 0..=n / 2 {
                let n1 = n - 2 * k;
                let lower = (-xi.conj() / 2.0).powu(k) / factorial(k) * sqrt_factorial_ratio(n, n1);
                let mid = damp.powf((n1 as f64 + 0.5) / 2.0);
                let mut l = 0;
                while n1 + 2 * l <= room {
                    let n2 = n1 + 2 * l;
                    let raise = (xi / 2.0).powu(l) / factorial(l) * sqrt_factorial_ratio(n2, n1);
                    out.push((n2, lower * mid * raise));
                    l += 1;
                }
            }
            out
        });
        Ok(())
    }

    /// `e^{-|α|²/2} e^{α a†} e^{-α* a}`.
    pub fn displace(&mut self, mode: Mode, alpha: C64) {
        let pre = (-alpha.norm_sqr() / 2.0).exp();
        self.map_mode(mode, |n, room| {
            let mut out = Vec::new();
            for k in 0..=n {
                let n1 = n - k;
                let lower = (-alpha.conj()).powu(k) / factorial(k) * sqrt_factorial_ratio(n, n1);
                for n2 in n1..=room.max(n1) {
                    if n2 > room {
                        break;
                    }
                    let l = n2 - n1;
                    let raise = alpha.powu(l) / factorial(l) * sqrt_factorial_ratio(n2, n1);
                    out.push((n2, lower * raise * pre));
                }
            }
            out
        });
    }

    /// `exp(μ a†b†) (1-|μ|²)^{(n_a+n_b+1)/2} exp(-μ* ab)`.
    pub fn two_mode_squeeze(&mut self, a: Mode, b: Mode, mu: C64) -> Result<()> {
        if a == b {
            return Err(Error::InvalidParameter("two-mode squeezing needs distinct modes".into()));
        }
        if !(mu.norm() < 1.0) {
            return Err(Error::InvalidParameter(format!("squeezing parameter |{mu}| must be below 1")));
        }
        let damp = 1.0 - mu.norm_sqr();
        self.map_two_modes(a, b, |na, nb, room| {
            let mut out = Vec::new();
            for k in 0..=na.min(nb) {
                let (a1, b1) = (na - k, nb - k);
                let lower = (-mu.conj()).powu(k) / factorial(k)
                    * sqrt_factorial_ratio(na, a1)
                    * sqrt_factorial_ratio(nb, b1);
                let mid = damp.powf((a1 + b1 + 1) as f64 / 2.0);
                let mut l = 0;
                while a1 + b1 + 2 * l <= room {
                    let raise = mu.powu(l) / factorial(l)
                        * sqrt_factorial_ratio(a1 + l, a1)
                        * sqrt_factorial_ratio(b1 + l, b1);
                    out.push((a1 + l, b1 + l, lower * mid * raise));
                    l += 1;
                }
            }
            out
        });
        Ok(())
    }

    /// Linear mixing of two modes: `a† → u00 a† + u10 b†`, `b† → u01 a† + u11 b†`.
    /// `u` must be unitary.
    pub fn mix_modes(&mut self, a: Mode, b: Mode, u: [[C64; 2]; 2]) -> Result<()> {
        if a == b {
            return Err(Error::InvalidParameter("mode mixing needs distinct modes".into()));
        }
        let m = CMatrix::from_row_slice(2, 2, &[u[0][0], u[0][1], u[1][0], u[1][1]]);
        if (m.adjoint() * &m - CMatrix::identity(2, 2)).camax() > 1e-12 {
            return Err(Error::InvalidParameter("mode-mixing matrix is not unitary".into()));
        }
        self.map_two_modes(a, b, |na, nb, _| {
            // expand (u00 x + u10 y)^na (u01 x + u11 y)^nb / sqrt(na! nb!)
            let total = na + nb;
            let mut coeff = vec![c(0.0, 0.0); total as usize + 1];
            for i in 0..=na {
                let ci = u[0][0].powu(i) * u[1][0].powu(na - i) * binomial(na, i);
                for j in 0..=nb {
                    let cj = u[0][1].powu(j) * u[1][1].powu(nb - j) * binomial(nb, j);
                    coeff[(i + j) as usize] += ci * cj;
                }
            }
            let norm = (factorial(na) * factorial(nb)).sqrt();
            (0..=total)
                .map(|p| {
                    let w = coeff[p as usize] * (factorial(p) * factorial(total - p)).sqrt() / norm;
                    (p, total - p, w)
                })
                .filter(|(_, _, w)| w.norm_sqr() > 0.0)
                .collect()
        });
        Ok(())
    }

    /// Beamsplitter to an environment mode: each photon survives with probability
    /// `transmission`; lost photons are recorded at `site`.
    pub fn loss(&mut self, mode: Mode, transmission: f64, site: LossSite) -> Result<()> {
        if !(0.0..=1.0).contains(&transmission) {
            return Err(Error::InvalidParameter(format!("transmission {transmission} outside [0, 1]")));
        }
        let m = mode as usize;
        let mut next: BTreeMap<LossRecord, BTreeMap<Occupation, C64>> = BTreeMap::new();
        for (lost, branch) in &self.branches {
            for (occ, amp) in branch {
                let n = occ[m] as u32;
                for k in 0..=n {
                    let w = (binomial(n, k) * transmission.powi((n - k) as i32) * (1.0 - transmission).powi(k as i32)).sqrt();
                    if w == 0.0 {
                        continue;
                    }
                    let mut o = *occ;
                    o[m] = (n - k) as u8;
                    let mut l = *lost;
                    l[site as usize] += k as u8;
                    *next.entry(l).or_default().entry(o).or_insert(c(0.0, 0.0)) += amp * w;
                }
            }
        }
        self.branches = next;
        Ok(())
    }

    /// Traces out `mode`, recording its photons at `site`.
    pub fn trace_into(&mut self, mode: Mode, site: LossSite) {
        let m = mode as usize;
        let mut next: BTreeMap<LossRecord, BTreeMap<Occupation, C64>> = BTreeMap::new();
        for (lost, branch) in &self.branches {
            for (occ, amp) in branch {
                let mut o = *occ;
                let mut l = *lost;
                l[site as usize] += o[m];
                o[m] = 0;
                *next.entry(l).or_default().entry(o).or_insert(c(0.0, 0.0)) += amp;
            }
        }
        self.branches = next;
    }
}

/// Jones matrix of a half-wave plate with its fast axis at `angle` from `H`.
pub fn half_wave_plate(angle: f64) -> [[C64; 2]; 2] {
    let (s, co) = (2.0 * angle).sin_cos();
    [[c(co, 0.0), c(s, 0.0)], [c(s, 0.0), c(-co, 0.0)]]
}

/// The polarization rotation forming the three-photon N00N state.
pub fn noon_rotation() -> [[C64; 2]; 2] {
    let r = FRAC_1_SQRT_2;
    [[c(r, 0.0), c(r, 0.0)], [c(-r, 0.0), c(r, 0.0)]]
}

/// The Sagnac network on `(H, Signal)`: second output port is the discard.
pub fn sagnac_network() -> [[C64; 2]; 2] {
    let r = FRAC_1_SQRT_2;
    [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]]
}

fn default_n_max() -> u32 {
    8
}

/// Source parameters. `alpha` defaults to `√(2ηt)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    pub eta: f64,
    pub mu: f64,
    pub t: f64,
    pub tau: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    #[serde(default)]
    pub epsilon: f64,
}

impl Default for SourceParams {
    fn default() -> Self {
        Self::measured()
    }
}

impl SourceParams {
    /// Measured laboratory values `η = 0.078, μ = 0.14, t = 0.16, τ = 0.12`.
    pub fn measured() -> Self {
        Self { eta: 0.078, mu: 0.14, t: 0.16, tau: 0.12, alpha: None, n_max: 8, epsilon: 0.0 }
    }

    /// Near-ideal source: no loss, weak squeezing.
    pub fn ideal(eta: f64, mu: f64) -> Self {
        Self { eta, mu, t: 1.0, tau: 1.0, alpha: None, n_max: 8, epsilon: 0.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or_else(|| (2.0 * self.eta * self.t).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(0.0..=1.0).contains(&self.t) || !(0.0..=1.0).contains(&self.tau) {
            return bad(format!("transmissions t = {}, tau = {} must lie in [0, 1]", self.t, self.tau));
        }
        if !(self.eta >= 0.0 && 2.0 * self.eta < 1.0) {
            return bad(format!("eta = {} must satisfy 0 <= eta < 1/2", self.eta));
        }
        if !(self.mu >= 0.0 && self.mu < 1.0) {
            return bad(format!("mu = {} must satisfy 0 <= mu < 1", self.mu));
        }
        if !(self.alpha() >= 0.0 && self.alpha().is_finite()) {
            return bad(format!("alpha = {} must be finite and nonnegative", self.alpha()));
        }
        if self.n_max < MIN_N_MAX {
            return bad(format!("n_max = {} is below the minimum {MIN_N_MAX}", self.n_max));
        }
        if self.n_max > 40 {
            return bad(format!("n_max = {} is above the supported 40", self.n_max));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon = {} must lie in [0, 1]", self.epsilon));
        }
        Ok(())
    }

    /// `(1-4η²)^{1/2} e^{-α²} (1-μ²)`, the vacuum normalization shared by all events.
    pub fn vacuum_weight(&self) -> f64 {
        (1.0 - 4.0 * self.eta * self.eta).sqrt() * (-self.alpha().powi(2)).exp() * (1.0 - self.mu * self.mu)
    }

    fn alpha_is_default(&self) -> bool {
        (self.alpha() - (2.0 * self.eta * self.t).sqrt()).abs() <= 1e-12
    }
}

/// Post-selected event class: photons lost at each site and pairs from the
/// heralding source (detected plus lost herald photons).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventClass {
    pub collinear_lost: u8,
    pub signal_lost: u8,
    pub discard_lost: u8,
    pub pairs: u8,
}

impl EventClass {
    pub const DESIRED: EventClass = EventClass { collinear_lost: 0, signal_lost: 0, discard_lost: 0, pairs: 1 };
    pub const COLLINEAR_LOSS: EventClass = EventClass { collinear_lost: 1, signal_lost: 0, discard_lost: 0, pairs: 1 };
    pub const SIGNAL_LOSS: EventClass = EventClass { collinear_lost: 0, signal_lost: 1, discard_lost: 0, pairs: 1 };
    pub const DISCARD_LOSS: EventClass = EventClass { collinear_lost: 0, signal_lost: 0, discard_lost: 1, pairs: 1 };

    pub fn label(&self) -> String {
        format!("c{}_s{}_d{}_p{}", self.collinear_lost, self.signal_lost, self.discard_lost, self.pairs)
    }

    /// Leading-order weight as a monomial (without the vacuum factor), when known.
    pub fn analytic(&self, p: &SourceParams) -> Option<(&'static str, f64)> {
        let (e, m, t, u) = (p.eta, p.mu, p.t, p.tau);
        match *self {
            Self::DESIRED => Some(("2 eta^3 t^3 mu^2 tau^2", 2.0 * e.powi(3) * t.powi(3) * m * m * u * u)),
            Self::COLLINEAR_LOSS => Some((
                "(25/2) eta^4 t^3 (1-t) mu^2 tau^2",
                12.5 * e.powi(4) * t.powi(3) * (1.0 - t) * m * m * u * u,
            )),
            Self::SIGNAL_LOSS => Some((
                "(163/32) eta^4 t^4 mu^2 tau (1-tau)",
                163.0 / 32.0 * e.powi(4) * t.powi(4) * m * m * u * (1.0 - u),
            )),
            Self::DISCARD_LOSS => Some((
                "(227/64) eta^4 t^4 mu^2 tau^2",
                227.0 / 64.0 * e.powi(4) * t.powi(4) * m * m * u * u,
            )),
            _ => None,
        }
    }
}

impl fmt::Display for EventClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// One row of the event ledger.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub class: EventClass,
    pub label: String,
    /// Probability of this post-selected class in the simulation.
    pub simulated: f64,
    pub monomial: Option<String>,
    /// Leading-order prediction, monomial times the vacuum weight.
    pub analytic: Option<f64>,
}

impl LedgerEntry {
    pub fn relative_error(&self) -> Option<f64> {
        self.analytic.map(|a| (self.simulated - a).abs() / a.abs().max(f64::MIN_POSITIVE))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventLedger {
    pub entries: Vec<LedgerEntry>,
}

impl EventLedger {
    pub fn get(&self, class: EventClass) -> Option<&LedgerEntry> {
        self.entries.iter().find(|e| e.class == class)
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    /// Conditional four-photon state, spin-2 block plus the optional leakage.
    pub state: BlockDensityMatrix,
    /// Probability of a five-fold event (herald click and four photons in `H + V`).
    pub success_probability: f64,
    pub ledger: EventLedger,
    /// Probability dropped at the photon-number truncation.
    pub truncation_residual: f64,
}

/// Runs the source model and post-selects five-fold events.
pub fn run_pipeline(p: &SourceParams) -> Result<PipelineOutput> {
    p.validate()?;
    let mut reg = FockRegister::vacuum(p.n_max);
    // pair term η a†² means ξ = 2η
    reg.squeeze(Mode::H, c(2.0 * p.eta, 0.0))?;
    reg.loss(Mode::H, p.t, LossSite::Collinear)?;
    reg.displace(Mode::V, c(p.alpha(), 0.0));
    reg.mix_modes(Mode::H, Mode::V, noon_rotation())?;
    reg.two_mode_squeeze(Mode::Signal, Mode::Herald, c(p.mu, 0.0))?;
    reg.loss(Mode::Signal, p.tau, LossSite::Signal)?;
    reg.loss(Mode::Herald, p.tau, LossSite::Herald)?;
    reg.mix_modes(Mode::H, Mode::Signal, sagnac_network())?;
    reg.trace_into(Mode::Signal, LossSite::Discard);
    let truncation_residual = reg.truncation_residual();

    let mut groups: BTreeMap<(LossRecord, u8), nalgebra::DVector<C64>> = BTreeMap::new();
    let mut classes: BTreeMap<EventClass, f64> = BTreeMap::new();
    for (lost, occ, amp) in reg.components() {
        let (h, v, herald) = (occ[Mode::H as usize], occ[Mode::V as usize], occ[Mode::Herald as usize]);
        if h as u32 + v as u32 != 4 || herald == 0 {
            continue;
        }
        let vec = groups.entry((*lost, herald)).or_insert_with(|| nalgebra::DVector::zeros(5));
        vec[v as usize] += amp;
        let class = EventClass {
            collinear_lost: lost[LossSite::Collinear as usize],
            signal_lost: lost[LossSite::Signal as usize],
            discard_lost: lost[LossSite::Discard as usize],
            pairs: herald + lost[LossSite::Herald as usize],
        };
        *classes.entry(class).or_insert(0.0) += amp.norm_sqr();
    }
    let mut block = CMatrix::zeros(5, 5);
    for v in groups.values() {
        block += v * v.adjoint();
    }
    let success_probability = block.trace().re;
    if !(success_probability > 0.0) {
        return Err(Error::InvalidParameter("parameters give no five-fold events".into()));
    }
    block /= c(success_probability, 0.0);
    let spin2 = BlockDensityMatrix::new(vec![Sector::new(Spin::from_twice(4), 1, block)])?;
    let state = leakage_channel(&spin2, p.epsilon)?;

    let vw = p.vacuum_weight();
    let mut entries: Vec<LedgerEntry> = classes
        .into_iter()
        .map(|(class, simulated)| {
            let analytic = class.analytic(p).filter(|_| p.alpha_is_default());
            LedgerEntry {
                class,
                label: class.label(),
                simulated,
                monomial: analytic.map(|(m, _)| m.to_string()),
                analytic: analytic.map(|(_, v)| v * vw),
            }
        })
        .collect();
    entries.sort_by(|a, b| b.simulated.total_cmp(&a.simulated));
    Ok(PipelineOutput { state, success_probability, ledger: EventLedger { entries }, truncation_residual })
}

/// `(1-ε)ρ` plus weight `ε` spread uniformly over the three spin-1 copies,
/// a stand-in for photons that are not fully indistinguishable.
pub fn leakage_channel(rho: &BlockDensityMatrix, epsilon: f64) -> Result<BlockDensityMatrix> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must lie in [0, 1]")));
    }
    let spin1 = Spin::from_twice(2);
    let mut sectors: Vec<Sector> = rho
        .sectors()
        .iter()
        .map(|s| Sector::new(s.spin, s.multiplicity, &s.block * c(1.0 - epsilon, 0.0)))
        .collect();
    let extra = CMatrix::identity(3, 3) * c(epsilon / 9.0, 0.0);
    match sectors.iter_mut().find(|s| s.spin == spin1) {
        Some(s) => {
            if s.multiplicity != 3 {
                return Err(Error::InvalidDensity(format!("spin-1 multiplicity {} is not 3", s.multiplicity)));
            }
            s.block += extra;
        }
        None => sectors.push(Sector::new(spin1, 3, extra)),
    }
    sectors.sort_by(|a, b| b.spin.cmp(&a.spin));
    BlockDensityMatrix::new(sectors)
}
