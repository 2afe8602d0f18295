//! File formats for chains, prediction reports, grids and diagnostics.
//!
//! Chains are headerless CSV, one iteration per row, every value written
//! with 17 significant digits so that files round-trip exactly. Each chain
//! has a JSON sidecar with its sampler, seed, burn-in and runtime.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictive::{PredictionReport, PredictiveGrid};
use crate::samplers::{Chain, ChainStats, SamplerKind};

/// Scientific notation with 17 significant digits.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

/// `hours:minutes:seconds`, seconds rounded to the nearest integer.
pub fn format_hms(seconds: f64) -> String {
    let total = seconds.max(0.0).round() as u64;
    format!("{}:{:02}:{:02}", total / 3600, total / 60 % 60, total % 60)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_rows<'a>(path: &Path, rows: impl Iterator<Item = &'a [f64]>) -> Result<()> {
    let mut out = create(path)?;
    let mut line = String::new();
    for row in rows {
        line.clear();
        for (j, x) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format_value(*x));
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Headerless numeric matrix, one row per slice.
pub fn write_matrix_csv<'a>(path: impl AsRef<Path>, rows: impl IntoIterator<Item = &'a [f64]>) -> Result<()> {
    write_rows(path.as_ref(), rows.into_iter())
}

/// Writes every iteration of `chain`, burn-in included.
pub fn write_chain_csv(path: impl AsRef<Path>, chain: &Chain) -> Result<()> {
    write_rows(path.as_ref(), chain.rows())
}

/// Reads a headerless numeric CSV matrix; returns the row-major values and
/// the row width.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<(Vec<f64>, usize)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    let mut width = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for field in line.split(',') {
            let x: f64 = field.trim().parse().map_err(|_| Error::Data {
                line: i + 1,
                message: format!("{}: cannot parse {field:?} as a number", path.display()),
            })?;
            values.push(x);
        }
        let w = values.len() - before;
        match width {
            None => width = Some(w),
            Some(expected) if expected != w => {
                return Err(Error::Data {
                    line: i + 1,
                    message: format!("{}: row has {w} values, expected {expected}", path.display()),
                })
            }
            _ => {}
        }
    }
    let width = width.ok_or_else(|| Error::Data {
        line: 0,
        message: format!("{}: no rows", path.display()),
    })?;
    Ok((values, width))
}

/// Sidecar metadata stored next to each chain file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMetadata {
    pub sampler: SamplerKind,
    pub seed: u64,
    pub burnin: usize,
    pub iterations: usize,
    pub dim: usize,
    pub accepted: usize,
    pub acceptance_rate: f64,
    #[serde(default)]
    pub stats: ChainStats,
    pub runtime_seconds: f64,
    pub runtime: String,
    /// Experiment configuration that produced the chain.
    pub config: serde_json::Value,
}

impl ChainMetadata {
    pub fn describe(chain: &Chain, config: serde_json::Value) -> Self {
        Self {
            sampler: chain.sampler,
            seed: chain.seed,
            burnin: chain.burnin(),
            iterations: chain.len(),
            dim: chain.dim(),
            accepted: chain.accepted,
            acceptance_rate: chain.acceptance_rate(),
            stats: chain.stats.clone(),
            runtime_seconds: chain.runtime_seconds,
            runtime: format_hms(chain.runtime_seconds),
            config,
        }
    }
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Chain CSV plus `<stem>.json` sidecar.
pub fn save_chain(csv_path: impl AsRef<Path>, chain: &Chain, config: serde_json::Value) -> Result<()> {
    let csv_path = csv_path.as_ref();
    write_chain_csv(csv_path, chain)?;
    write_json(csv_path.with_extension("json"), &ChainMetadata::describe(chain, config))
}

/// Loads a chain CSV. The sidecar, when present, restores sampler, seed,
/// burn-in and counters; `burnin` overrides the stored burn-in.
pub fn load_chain(csv_path: impl AsRef<Path>, burnin: Option<usize>) -> Result<Chain> {
    let csv_path = csv_path.as_ref();
    let (values, dim) = read_matrix_csv(csv_path)?;
    let sidecar = csv_path.with_extension("json");
    let meta: Option<ChainMetadata> = if sidecar.exists() {
        Some(read_json(&sidecar)?)
    } else {
        None
    };
    let mut chain = match &meta {
        Some(m) => {
            let mut c = Chain::new(values, dim, m.sampler, m.seed)?;
            c.accepted = m.accepted;
            c.runtime_seconds = m.runtime_seconds;
            c.stats = m.stats.clone();
            c
        }
        None => Chain::new(values, dim, SamplerKind::Mh, 0)?,
    };
    let burnin = burnin.or(meta.map(|m| m.burnin)).unwrap_or(0);
    chain.set_burnin(burnin)?;
    Ok(chain)
}

/// Per-point predictions: `index,true_label,predicted,prob_predicted,prob_true`.
pub fn write_predictions_csv(path: impl AsRef<Path>, report: &PredictionReport) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let mut text = String::from("index,true_label,predicted,prob_predicted,prob_true\n");
    for p in &report.points {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            p.index,
            p.true_label,
            p.predicted,
            format_value(p.prob_predicted),
            format_value(p.prob_true)
        ));
    }
    out.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Grid matrix without header; row `r` holds increasing `x1` at the `r`-th
/// smallest `x2`.
pub fn write_grid_csv(path: impl AsRef<Path>, grid: &PredictiveGrid) -> Result<()> {
    write_rows(path.as_ref(), grid.values.iter().map(Vec::as_slice))
}
