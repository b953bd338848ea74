//! Command-line front end: `state`, `qcrb`, `simulate`, `tomo`, `figures`.
//!
//! Every command writes plain data files into the output directory and returns
//! a summary that the binary prints as JSON.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::io;
use crate::metrology::{self, Strategy, StrategyReport, UnpolarizedDiagnostics};
use crate::phase_space::{self, SphericalGrid};
use crate::source::{self, EventLedger, SourceParams};
use crate::spin::{BlockDensityMatrix, PureSpinState, Spin};
use crate::tomography::{self, BasisSetting, CountRecord, McErrors, MleOptions, Stat};

#[derive(Debug, Parser)]
#[command(name = "spinmetro", version, about = "SU(2) rotation metrology with four-photon polarization states")]
pub struct Cli {
    /// Seed for every stochastic step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML (or JSON) run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Photon-number truncation of the source simulation.
    #[arg(long, global = true)]
    pub nmax: Option<u32>,
    /// Convergence tolerance of the likelihood maximization.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a named state (or one built from a constellation file) with its diagnostics.
    State {
        /// tetrahedron, noonN, coherentN or horizontalN.
        name: Option<String>,
        #[arg(long, conflicts_with = "name")]
        constellation: Option<PathBuf>,
    },
    /// Strategy bounds over a range of photon numbers, plus evaluated states.
    Qcrb {
        #[arg(long)]
        n_min: Option<u32>,
        #[arg(long)]
        n_max: Option<u32>,
        /// State or density files to evaluate.
        #[arg(long)]
        state: Vec<PathBuf>,
        /// Counts CSV to reconstruct and evaluate with Monte-Carlo errors.
        #[arg(long)]
        counts: Option<PathBuf>,
        #[arg(long)]
        resamples: Option<usize>,
    },
    /// Run the source model.
    Simulate {
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Simulate counts from a state, reconstruct, align, estimate errors.
    Tomo {
        /// State or density file; the tetrahedron when absent.
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long)]
        events: Option<u64>,
        #[arg(long)]
        resamples: Option<usize>,
        /// Reconstruct this counts file instead of simulating.
        #[arg(long, conflicts_with = "state")]
        counts: Option<PathBuf>,
    },
    /// Data behind the figure analogues.
    Figures {
        which: Figure,
        /// State or density file; the tetrahedron when absent.
        #[arg(long)]
        state: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig3,
    Fig4,
    Fig5,
}

fn default_seed() -> u64 {
    1
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomoConfig {
    pub events: u64,
    pub resamples: usize,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for TomoConfig {
    fn default() -> Self {
        let m = MleOptions::default();
        Self { events: 2434, resamples: 50, tol: m.tol, max_iterations: m.max_iterations }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QcrbConfig {
    pub n_min: u32,
    pub n_max: u32,
}

impl Default for QcrbConfig {
    fn default() -> Self {
        Self { n_min: 1, n_max: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FigureConfig {
    pub n_theta: usize,
    pub n_phi: usize,
    pub scan_points: usize,
}

impl Default for FigureConfig {
    fn default() -> Self {
        Self { n_theta: 91, n_phi: 180, scan_points: 720 }
    }
}

/// Parameters of a run; file values are overridden by command-line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub source: SourceParams,
    #[serde(default)]
    pub tomo: TomoConfig,
    #[serde(default)]
    pub qcrb: QcrbConfig,
    #[serde(default)]
    pub figures: FigureConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            out: default_out(),
            source: SourceParams::default(),
            tomo: TomoConfig::default(),
            qcrb: QcrbConfig::default(),
            figures: FigureConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let mut cfg: RunConfig = match &cli.config {
            Some(p) => io::read_config(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        if let Some(o) = &cli.out {
            cfg.out = o.clone();
        }
        if let Some(n) = cli.nmax {
            cfg.source.n_max = n;
        }
        if let Some(t) = cli.tol {
            cfg.tomo.tol = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tomo.tol > 0.0 && self.tomo.tol.is_finite()) {
            return Err(Error::InvalidParameter(format!("tolerance {} must be positive", self.tomo.tol)));
        }
        if self.qcrb.n_min == 0 || self.qcrb.n_min > self.qcrb.n_max {
            return Err(Error::InvalidParameter(format!(
                "photon range {}..={} is empty or starts at 0",
                self.qcrb.n_min, self.qcrb.n_max
            )));
        }
        if self.figures.n_theta < 3 || self.figures.n_phi < 3 || self.figures.scan_points < 3 {
            return Err(Error::InvalidParameter("figure grids need at least 3 points per axis".into()));
        }
        Ok(())
    }

    fn mle_options(&self) -> MleOptions {
        MleOptions { tol: self.tomo.tol, max_iterations: self.tomo.max_iterations, ..MleOptions::default() }
    }

    fn path(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }
}

/// Builds a state from `tetrahedron`, `noonN`, `coherentN` or `horizontalN`.
pub fn named_state(name: &str) -> Result<PureSpinState> {
    let unknown = || Error::InvalidParameter(format!("unknown state name {name:?}"));
    if name == "tetrahedron" {
        return Ok(PureSpinState::tetrahedron());
    }
    let split = name.find(|ch: char| ch.is_ascii_digit()).ok_or_else(unknown)?;
    let n: u32 = name[split..].parse().map_err(|_| unknown())?;
    match &name[..split] {
        "noon" => PureSpinState::noon(n),
        "coherent" | "horizontal" => {
            if n == 0 {
                return Err(unknown());
            }
            Ok(PureSpinState::horizontal(n))
        }
        _ => Err(unknown()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StateReport {
    pub label: String,
    pub photons: u32,
    pub moments: Vec<f64>,
    pub unpolarized: DiagnosticsReport,
    pub sqcrb: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsReport {
    pub mean: [f64; 3],
    pub second_moments_re: [[f64; 3]; 3],
    pub target: f64,
    pub residual: f64,
    pub passed: bool,
}

impl From<&UnpolarizedDiagnostics> for DiagnosticsReport {
    fn from(d: &UnpolarizedDiagnostics) -> Self {
        Self {
            mean: [d.mean.x, d.mean.y, d.mean.z],
            second_moments_re: d.second_moments.map(|r| r.map(|z| z.re)),
            target: d.target,
            residual: d.residual(),
            passed: d.passed,
        }
    }
}

/// Writes `state.json`, `constellation.json` and `report.json`.
pub fn cmd_state(cfg: &RunConfig, name: Option<&str>, constellation: Option<&Path>) -> Result<StateReport> {
    let (label, psi) = match (name, constellation) {
        (_, Some(p)) => {
            let c: Constellation = io::read_json(p)?;
            (p.display().to_string(), c.to_state()?)
        }
        (Some(n), None) => (n.to_string(), named_state(n)?),
        (None, None) => return Err(Error::InvalidParameter("give a state name or --constellation".into())),
    };
    let stars = Constellation::from_state(&psi)?;
    let rho = psi.to_density();
    let report = StateReport {
        label,
        photons: psi.photons(),
        moments: metrology::multipole_moments(&rho, psi.spin())?,
        unpolarized: DiagnosticsReport::from(&metrology::is_second_order_unpolarized(&psi, 1e-12)),
        sqcrb: metrology::sqcrb(&rho),
    };
    io::write_state(&cfg.path("state.json")?, &psi)?;
    io::write_json(&cfg.path("constellation.json")?, &stars)?;
    io::write_json(&cfg.path("report.json")?, &report)?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct QcrbPoint {
    pub label: String,
    pub photons: u32,
    pub sqcrb: f64,
    /// Monte-Carlo spread when the point comes from counts.
    pub sqcrb_mc: Option<Stat>,
    pub fidelity: f64,
    pub fidelity_mc: Option<Stat>,
    /// Bound of the largest-weight eigenvector alone.
    pub dominant_sqcrb: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QcrbOutput {
    pub reports: Vec<StrategyReport>,
    pub points: Vec<QcrbPoint>,
}

fn point_for(label: String, rho: &BlockDensityMatrix) -> Result<QcrbPoint> {
    let tet = PureSpinState::tetrahedron();
    let photons = rho.sectors().iter().map(|s| s.spin.twice()).max().unwrap_or(0);
    let fidelity = if photons == 4 { tomography::align_phase(rho, &tet)?.1.fidelity(&tet)? } else { f64::NAN };
    let dominant_sqcrb = rho
        .dominant_eigenstate()
        .map(|(_, psi)| metrology::sqcrb(&psi.to_density()))
        .unwrap_or(f64::INFINITY);
    Ok(QcrbPoint {
        label,
        photons,
        sqcrb: metrology::sqcrb(rho),
        sqcrb_mc: None,
        fidelity,
        fidelity_mc: None,
        dominant_sqcrb,
    })
}

/// Writes `strategies.csv` and, with states or counts, `points.json`.
pub fn cmd_qcrb(cfg: &RunConfig, states: &[PathBuf], counts: Option<&Path>) -> Result<QcrbOutput> {
    let reports = (cfg.qcrb.n_min..=cfg.qcrb.n_max).map(metrology::strategy_report).collect::<Result<Vec<_>>>()?;
    io::write_strategies(&cfg.path("strategies.csv")?, &reports)?;
    let mut points = Vec::new();
    for p in states {
        points.push(point_for(p.display().to_string(), &io::read_density(p)?)?);
    }
    if let Some(p) = counts {
        let (rec, bases) = io::read_counts(p)?;
        let (result, mc) = reconstruct(cfg, &rec, &bases)?;
        let mut point = point_for(p.display().to_string(), &result.aligned_state())?;
        point.sqcrb_mc = Some(mc.sqcrb);
        point.fidelity_mc = Some(mc.fidelity);
        points.push(point);
    }
    if !points.is_empty() {
        io::write_json(&cfg.path("points.json")?, &points)?;
    }
    Ok(QcrbOutput { reports, points })
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulateOutput {
    pub params: SourceParams,
    pub success_probability: f64,
    pub fidelity: f64,
    pub symmetric_population: f64,
    pub truncation_residual: f64,
    pub ledger: EventLedger,
}

/// Writes `density.json`, `ledger.csv` and `summary.json`.
pub fn cmd_simulate(cfg: &RunConfig, epsilon: Option<f64>) -> Result<SimulateOutput> {
    let mut params = cfg.source.clone();
    if let Some(e) = epsilon {
        params.epsilon = e;
    }
    let out = source::run_pipeline(&params)?;
    let summary = SimulateOutput {
        fidelity: out.state.fidelity(&PureSpinState::tetrahedron())?,
        symmetric_population: out.state.symmetric_population(),
        success_probability: out.success_probability,
        truncation_residual: out.truncation_residual,
        ledger: out.ledger,
        params,
    };
    io::write_density(&cfg.path("density.json")?, &out.state)?;
    io::write_ledger(&cfg.path("ledger.csv")?, &summary.ledger)?;
    io::write_json(&cfg.path("summary.json")?, &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct TomoOutput {
    pub detected_events: u64,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub phi: f64,
    pub fidelity: f64,
    pub sqcrb: f64,
    pub symmetric_population: f64,
    pub mc: McErrors,
}

#[derive(Serialize)]
struct ReconstructionFile<'a> {
    density: io::DensityFile,
    aligned: io::DensityFile,
    metadata: &'a TomoOutput,
}

fn reconstruct(cfg: &RunConfig, rec: &CountRecord, bases: &[BasisSetting]) -> Result<(tomography::ReconstructionResult, McErrors)> {
    let tet = PureSpinState::tetrahedron();
    let mut result = tomography::mle_reconstruct_with(rec, bases, cfg.mle_options(), |_, _| {})?;
    result.align(&tet)?;
    let mc = tomography::monte_carlo_errors(rec, bases, cfg.tomo.resamples, cfg.seed.wrapping_add(1), &tet)?;
    result.mc_errors = Some(mc.clone());
    Ok((result, mc))
}

/// Writes `counts.csv` (+ sidecar) and `reconstruction.json`.
pub fn cmd_tomo(cfg: &RunConfig, state: Option<&Path>, counts: Option<&Path>) -> Result<TomoOutput> {
    let (rec, bases) = match counts {
        Some(p) => io::read_counts(p)?,
        None => {
            let rho = match state {
                Some(p) => io::read_density(p)?,
                None => PureSpinState::tetrahedron().to_density(),
            };
            let bases = tomography::default_bases();
            let rec = tomography::simulate_counts(&rho, &bases, cfg.tomo.events, cfg.seed)?;
            io::write_counts(&cfg.path("counts.csv")?, &rec, &bases)?;
            (rec, bases)
        }
    };
    let (result, mc) = reconstruct(cfg, &rec, &bases)?;
    let aligned = result.aligned_state();
    let out = TomoOutput {
        detected_events: rec.total_events(),
        log_likelihood: result.log_likelihood,
        iterations: result.iterations,
        phi: result.phi,
        fidelity: aligned.fidelity(&PureSpinState::tetrahedron())?,
        sqcrb: metrology::sqcrb(&aligned),
        symmetric_population: aligned.symmetric_population(),
        mc,
    };
    let file = ReconstructionFile {
        density: io::DensityFile::from(&result.rho_hat),
        aligned: io::DensityFile::from(&aligned),
        metadata: &out,
    };
    io::write_json(&cfg.path("reconstruction.json")?, &file)?;
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct FigureOutput {
    pub files: Vec<PathBuf>,
    /// fig3: largest pairwise difference of the vertex maps.
    pub max_vertex_difference: Option<f64>,
    /// fig4: local maxima per turn about x, y, z.
    pub maxima: Option<[usize; 3]>,
}

fn figure_state(state: Option<&Path>) -> Result<BlockDensityMatrix> {
    match state {
        Some(p) => io::read_density(p),
        None => Ok(PureSpinState::tetrahedron().to_density()),
    }
}

/// Columns of the photon-number figure: the strategies with finite bounds.
pub const FIG5_STRATEGIES: [Strategy; 4] =
    [Strategy::CoherentSequential, Strategy::NoonSimultaneous, Strategy::NoonSequential, Strategy::Platonic];

pub fn cmd_figures(cfg: &RunConfig, which: Figure, state: Option<&Path>) -> Result<FigureOutput> {
    let f = &cfg.figures;
    match which {
        Figure::Fig3 => {
            let rho = figure_state(state)?;
            let spin = Spin::of_photons(4);
            let maps: Vec<SphericalGrid> = phase_space::vertex_projections(&rho, spin, f.n_theta, f.n_phi)?;
            let mut files = Vec::new();
            let full = phase_space::wigner_grid(rho.block(spin)?, spin, f.n_theta, f.n_phi)?;
            let p = cfg.path("fig3_map.csv")?;
            io::write_grid(&p, &full, spin.twice(), "longitude-latitude map")?;
            files.push(p);
            for (i, g) in maps.iter().enumerate() {
                let p = cfg.path(&format!("fig3_vertex{i}.csv"))?;
                io::write_grid(&p, g, spin.twice(), &format!("centred on vertex {i}"))?;
                files.push(p);
            }
            let mut worst = 0.0f64;
            for i in 0..maps.len() {
                for j in i + 1..maps.len() {
                    worst = worst.max(maps[i].max_abs_difference(&maps[j]));
                }
            }
            Ok(FigureOutput { files, max_vertex_difference: Some(worst), maxima: None })
        }
        Figure::Fig4 => {
            let rho = figure_state(state)?;
            let thetas = metrology::angle_grid(f.scan_points);
            let axes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            let curves = axes.iter().map(|&a| metrology::rotation_scan(&rho, a, &thetas)).collect::<Result<Vec<_>>>()?;
            let rows: Vec<Vec<f64>> = thetas
                .iter()
                .enumerate()
                .map(|(i, &t)| vec![t, curves[0][i], curves[1][i], curves[2][i]])
                .collect();
            let p = cfg.path("fig4_scan.csv")?;
            io::write_table(&p, &["theta", "x", "y", "z"], &rows)?;
            let maxima = [0, 1, 2].map(|k| metrology::count_periodic_maxima(&curves[k]));
            Ok(FigureOutput { files: vec![p], max_vertex_difference: None, maxima: Some(maxima) })
        }
        Figure::Fig5 => {
            let rows: Vec<Vec<f64>> = (cfg.qcrb.n_min..=cfg.qcrb.n_max)
                .map(|n| {
                    let r = metrology::strategy_report(n)?;
                    let mut row = vec![n as f64];
                    row.extend(FIG5_STRATEGIES.iter().map(|&s| r.get(s).unwrap_or(f64::NAN)));
                    Ok(row)
                })
                .collect::<Result<_>>()?;
            let mut header = vec!["N"];
            header.extend(FIG5_STRATEGIES.iter().map(|s| s.name()));
            let p = cfg.path("fig5_strategies.csv")?;
            io::write_table(&p, &header, &rows)?;
            Ok(FigureOutput { files: vec![p], max_vertex_difference: None, maxima: None })
        }
    }
}

/// Runs the parsed command and returns its JSON summary.
pub fn run(cli: &Cli) -> Result<serde_json::Value> {
    let cfg = RunConfig::from_cli(cli)?;
    let value = match &cli.command {
        Command::State { name, constellation } => serde_json::to_value(cmd_state(&cfg, name.as_deref(), constellation.as_deref())?)?,
        Command::Qcrb { n_min, n_max, state, counts, resamples } => {
            let mut cfg = cfg;
            if let Some(r) = resamples {
                cfg.tomo.resamples = *r;
            }
            if let Some(n) = n_min {
                cfg.qcrb.n_min = *n;
            }
            if let Some(n) = n_max {
                cfg.qcrb.n_max = *n;
            }
            cfg.validate()?;
            serde_json::to_value(cmd_qcrb(&cfg, state, counts.as_deref())?)?
        }
        Command::Simulate { epsilon } => serde_json::to_value(cmd_simulate(&cfg, *epsilon)?)?,
        Command::Tomo { state, events, resamples, counts } => {
            let mut cfg = cfg;
            if let Some(e) = events {
                cfg.tomo.events = *e;
            }
            if let Some(r) = resamples {
                cfg.tomo.resamples = *r;
            }
            serde_json::to_value(cmd_tomo(&cfg, state.as_deref(), counts.as_deref())?)?
        }
        Command::Figures { which, state } => serde_json::to_value(cmd_figures(&cfg, *which, state.as_deref())?)?,
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dir: &Path) -> RunConfig {
        RunConfig { out: dir.to_path_buf(), ..RunConfig::default() }
    }

    #[test]
    fn state_examples() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(dir.path());
        cmd_state(&c, Some("tetrahedron"), None).unwrap();
        let psi = io::read_state(&dir.path().join("state.json")).unwrap();
        let expect = [(1.0f64 / 3.0).sqrt(), 0.0, 0.0, (2.0f64 / 3.0).sqrt(), 0.0];
        for (a, e) in psi.amplitudes().iter().zip(expect) {
            assert!((a.re - e).abs() < 1e-15 && a.im == 0.0);
        }
        cmd_state(&c, Some("noon4"), None).unwrap();
        let stars: Constellation = io::read_json(&dir.path().join("constellation.json")).unwrap();
        assert!(stars.points.iter().all(|p| (p.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-9));
        let r = cmd_state(&c, Some("coherent4"), None).unwrap();
        assert!((r.moments[1] - 0.4).abs() < 1e-12);
        assert!(matches!(cmd_state(&c, Some("pentagon"), None), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn qcrb_examples() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_qcrb(&cfg(dir.path()), &[], None).unwrap();
        assert!((out.reports[3].get(Strategy::Platonic).unwrap() - 0.375).abs() < 1e-15);
        assert!((out.reports[11].get(Strategy::NoonSequential).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn simulate_rejects_small_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(dir.path());
        c.source.n_max = 4;
        let err = cmd_simulate(&c, None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn tomo_rejects_malformed_counts() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "basis_index,n_T,count\n0,1,3\n").unwrap();
        fs::write(dir.path().join("bad.json"), "{\"bases\": [[0,0,1]], \"exposure\": [1.0], \"total_events\": 9}").unwrap();
        let err = cmd_tomo(&cfg(dir.path()), None, Some(&p)).unwrap_err();
        assert!(matches!(err, Error::Parse(_)), "{err:?}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn figure_examples() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(dir.path());
        c.figures = FigureConfig { n_theta: 19, n_phi: 36, scan_points: 360 };
        let f4 = cmd_figures(&c, Figure::Fig4, None).unwrap();
        assert_eq!(f4.maxima, Some([3, 3, 3]));
        let f3 = cmd_figures(&c, Figure::Fig3, None).unwrap();
        assert!(f3.max_vertex_difference.unwrap() < 1e-9);
        cmd_figures(&c, Figure::Fig5, None).unwrap();
        let text = fs::read_to_string(dir.path().join("fig5_strategies.csv")).unwrap();
        assert_eq!(text.lines().count(), 21);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 5);
    }

    #[test]
    fn outputs_are_byte_identical_on_rerun() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(dir.path());
        c.tomo.events = 3000;
        c.tomo.resamples = 4;
        cmd_tomo(&c, None, None).unwrap();
        let first = fs::read(dir.path().join("reconstruction.json")).unwrap();
        cmd_tomo(&c, None, None).unwrap();
        assert_eq!(first, fs::read(dir.path().join("reconstruction.json")).unwrap());
    }

    #[test]
    fn config_parses_and_flags_override() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        fs::write(&p, "seed = 7\n[source]\neta = 0.001\nmu = 0.001\nt = 1.0\ntau = 1.0\n[tomo]\nevents = 100\n").unwrap();
        let cli = Cli::try_parse_from(["spinmetro", "--config", p.to_str().unwrap(), "--nmax", "10", "simulate"]).unwrap();
        let c = RunConfig::from_cli(&cli).unwrap();
        assert_eq!((c.seed, c.source.n_max, c.tomo.events), (7, 10, 100));
        fs::write(&p, "sed = 7\n").unwrap();
        let cli = Cli::try_parse_from(["spinmetro", "--config", p.to_str().unwrap(), "simulate"]).unwrap();
        assert!(RunConfig::from_cli(&cli).is_err());
    }
}
