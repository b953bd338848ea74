//! JSON, CSV and TOML file formats.

use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrology::{Strategy, StrategyReport};
use crate::phase_space::{SphericalGrid, KERNEL_DESCRIPTION};
use crate::source::EventLedger;
use crate::spin::{c, BlockDensityMatrix, CMatrix, CVector, PureSpinState, Sector, Spin};
use crate::tomography::{BasisSetting, CountRecord, DETECTABLE};

/// `{"two_j": 4, "amps": [[re, im], ...]}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub two_j: u32,
    pub amps: Vec<[f64; 2]>,
}

impl From<&PureSpinState> for StateFile {
    fn from(psi: &PureSpinState) -> Self {
        Self { two_j: psi.spin().twice(), amps: psi.amplitudes().iter().map(|a| [a.re, a.im]).collect() }
    }
}

impl StateFile {
    pub fn to_state(&self) -> Result<PureSpinState> {
        let spin = Spin::from_twice(self.two_j);
        if self.amps.len() != spin.dim() {
            return Err(Error::DimensionMismatch { expected: spin.dim(), found: self.amps.len() });
        }
        PureSpinState::new(spin, CVector::from_iterator(self.amps.len(), self.amps.iter().map(|a| c(a[0], a[1]))))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorFile {
    pub two_j: u32,
    pub mult: u32,
    /// Row-major `[[re, im], ...]` rows.
    pub block: Vec<Vec<[f64; 2]>>,
}

/// `{"sectors": [{"two_j", "mult", "block"}]}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityFile {
    pub sectors: Vec<SectorFile>,
}

impl From<&BlockDensityMatrix> for DensityFile {
    fn from(rho: &BlockDensityMatrix) -> Self {
        Self {
            sectors: rho
                .sectors()
                .iter()
                .map(|s| SectorFile {
                    two_j: s.spin.twice(),
                    mult: s.multiplicity,
                    block: s.block.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect(),
                })
                .collect(),
        }
    }
}

impl DensityFile {
    pub fn to_density(&self) -> Result<BlockDensityMatrix> {
        let mut sectors = Vec::with_capacity(self.sectors.len());
        for s in &self.sectors {
            let spin = Spin::from_twice(s.two_j);
            let d = spin.dim();
            if s.block.len() != d || s.block.iter().any(|r| r.len() != d) {
                return Err(Error::DimensionMismatch { expected: d, found: s.block.len() });
            }
            let block = CMatrix::from_fn(d, d, |i, j| c(s.block[i][j][0], s.block[i][j][1]));
            sectors.push(Sector::new(spin, s.mult, block));
        }
        BlockDensityMatrix::new(sectors)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads a TOML or JSON file, by extension.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        Ok(serde_json::from_str(&text)?)
    } else {
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

pub fn write_state(path: &Path, psi: &PureSpinState) -> Result<()> {
    write_json(path, &StateFile::from(psi))
}

pub fn read_state(path: &Path) -> Result<PureSpinState> {
    read_json::<StateFile>(path)?.to_state()
}

pub fn write_density(path: &Path, rho: &BlockDensityMatrix) -> Result<()> {
    write_json(path, &DensityFile::from(rho))
}

/// Reads a density file, or a pure-state file promoted to a density matrix.
pub fn read_density(path: &Path) -> Result<BlockDensityMatrix> {
    let value: serde_json::Value = read_json(path)?;
    if value.get("sectors").is_some() {
        serde_json::from_value::<DensityFile>(value)?.to_density()
    } else if value.get("amps").is_some() {
        Ok(serde_json::from_value::<StateFile>(value)?.to_state()?.to_density())
    } else {
        Err(Error::Parse(format!("{}: neither a state nor a density file", path.display())))
    }
}

/// Sidecar of a counts CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountsSidecar {
    pub bases: Vec<BasisSetting>,
    pub exposure: Vec<f64>,
    pub total_events: u64,
}

/// Path of the JSON sidecar next to a counts CSV.
pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("json")
}

/// Writes `basis_index,n_T,count` rows and the basis sidecar.
pub fn write_counts(path: &Path, rec: &CountRecord, bases: &[BasisSetting]) -> Result<()> {
    rec.validate(bases.len())?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["basis_index", "n_T", "count"])?;
    for (b, row) in rec.counts.iter().enumerate() {
        for (j, &k) in DETECTABLE.iter().enumerate() {
            w.serialize((b, k, row[j]))?;
        }
    }
    w.flush()?;
    let side = CountsSidecar { bases: bases.to_vec(), exposure: rec.exposure.clone(), total_events: rec.total_events() };
    write_json(&sidecar_path(path), &side)
}

pub fn read_counts(path: &Path) -> Result<(CountRecord, Vec<BasisSetting>)> {
    let side: CountsSidecar = read_json(&sidecar_path(path))?;
    let n = side.bases.len();
    let mut counts = vec![[0u64; 3]; n];
    let mut seen = vec![[false; 3]; n];
    let mut r = csv::ReaderBuilder::new().from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["basis_index", "n_T", "count"] {
        return Err(Error::Parse(format!("{}: expected header basis_index,n_T,count", path.display())));
    }
    for row in r.records() {
        let row = row?;
        let parse = |i: usize| -> Result<u64> {
            row.get(i)
                .and_then(|v| v.trim().parse::<u64>().ok())
                .ok_or_else(|| Error::Parse(format!("{}: bad field {} in {:?}", path.display(), i, row)))
        };
        let (b, k, n_k) = (parse(0)? as usize, parse(1)? as usize, parse(2)?);
        let j = DETECTABLE
            .iter()
            .position(|&d| d == k)
            .ok_or_else(|| Error::Parse(format!("{}: n_T = {k} is not a detectable outcome", path.display())))?;
        if b >= n {
            return Err(Error::Parse(format!("{}: basis index {b} out of range", path.display())));
        }
        if seen[b][j] {
            return Err(Error::Parse(format!("{}: duplicate row for basis {b}, n_T = {k}", path.display())));
        }
        seen[b][j] = true;
        counts[b][j] = n_k;
    }
    let rec = CountRecord { counts, exposure: side.exposure };
    rec.validate(n)?;
    if rec.total_events() != side.total_events {
        return Err(Error::Parse(format!(
            "{}: counts sum to {} but the sidecar records {}",
            path.display(),
            rec.total_events(),
            side.total_events
        )));
    }
    Ok((rec, side.bases))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub kernel: String,
    pub two_j: u32,
    pub n_theta: usize,
    pub n_phi: usize,
    pub label: String,
}

/// `theta,phi,W` rows plus a JSON header next to the CSV.
pub fn write_grid(path: &Path, grid: &SphericalGrid, two_j: u32, label: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["theta", "phi", "W"])?;
    for i in 0..grid.n_theta {
        for j in 0..grid.n_phi {
            w.serialize((grid.theta(i), grid.phi(j), grid.get(i, j)))?;
        }
    }
    w.flush()?;
    let header = GridHeader {
        kernel: KERNEL_DESCRIPTION.to_string(),
        two_j,
        n_theta: grid.n_theta,
        n_phi: grid.n_phi,
        label: label.to_string(),
    };
    write_json(&path.with_extension("json"), &header)
}

/// One row per photon number, one column per strategy (empty when undefined).
pub fn write_strategies(path: &Path, reports: &[StrategyReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["N".to_string()];
    header.extend(Strategy::ALL.iter().map(|s| s.name().to_string()));
    header.push("platonic_state_exists".into());
    w.write_record(&header)?;
    for r in reports {
        let mut row = vec![r.n.to_string()];
        row.extend(Strategy::ALL.iter().map(|&s| r.get(s).map(|v| v.to_string()).unwrap_or_default()));
        row.push(r.platonic_state_exists.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ledger(path: &Path, ledger: &EventLedger) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["class", "simulated", "monomial", "analytic", "relative_error"])?;
    for e in &ledger.entries {
        w.write_record([
            e.label.clone(),
            e.simulated.to_string(),
            e.monomial.clone().unwrap_or_default(),
            e.analytic.map(|v| v.to_string()).unwrap_or_default(),
            e.relative_error().map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Generic numeric table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(Error::DimensionMismatch { expected: header.len(), found: r.len() });
        }
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
