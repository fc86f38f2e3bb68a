//! Sweep rows, fitted slopes, and their CSV/JSON emission.

use serde::Serialize;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use crate::config::ExperimentConfig;
use crate::ExperimentError;

pub const CSV_HEADER: [&str; 15] = [
    "experiment",
    "n",
    "G",
    "N",
    "symbol",
    "m",
    "rho",
    "delta",
    "beta",
    "p",
    "sigma",
    "statistic",
    "value",
    "tolerance",
    "pass",
];

/// One measured statistic. Rows carrying a tolerance are asserted and pass iff
/// `value <= tolerance`; rows without one are informational.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub experiment: String,
    pub n: usize,
    #[serde(rename = "G")]
    pub grid_points: usize,
    #[serde(rename = "N")]
    pub band: usize,
    pub symbol: String,
    pub m: f64,
    pub rho: f64,
    pub delta: f64,
    pub beta: f64,
    pub p: f64,
    pub sigma: Option<f64>,
    pub statistic: String,
    pub value: f64,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

impl SweepRow {
    pub fn is_asserted(&self) -> bool {
        self.tolerance.is_some()
    }

    /// Pass flag recomputed from `value` and `tolerance`.
    pub fn recompute_pass(&self) -> Option<bool> {
        self.tolerance.map(|t| self.value <= t)
    }

    fn record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        vec![
            self.experiment.clone(),
            self.n.to_string(),
            self.grid_points.to_string(),
            self.band.to_string(),
            self.symbol.clone(),
            self.m.to_string(),
            self.rho.to_string(),
            self.delta.to_string(),
            self.beta.to_string(),
            self.p.to_string(),
            opt(self.sigma),
            self.statistic.clone(),
            self.value.to_string(),
            opt(self.tolerance),
            self.pass.map_or(String::new(), |b| b.to_string()),
        ]
    }
}

/// A least-squares slope reported alongside the rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRecord {
    pub label: String,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub points: usize,
    pub target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub n: usize,
    #[serde(rename = "G")]
    pub grid_points: usize,
    #[serde(rename = "N")]
    pub band: usize,
    pub seed: u64,
    /// Not serialized, so that output files depend only on config and seed.
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub metadata: RunMetadata,
    pub rows: Vec<SweepRow>,
    pub fits: Vec<FitRecord>,
    pub notes: Vec<String>,
    /// Experiment-specific payload, e.g. a decomposition summary.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl SweepResult {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            experiment: config.experiment.name().to_string(),
            config: config.clone(),
            metadata: RunMetadata {
                n: config.n,
                grid_points: config.grid_points,
                band: config.band,
                seed: config.seed,
                wall_time: Duration::ZERO,
            },
            rows: Vec::new(),
            fits: Vec::new(),
            notes: Vec::new(),
            details: None,
        }
    }

    pub fn asserted(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.is_asserted())
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.asserted().filter(|r| r.pass != Some(true))
    }

    pub fn all_pass(&self) -> bool {
        self.failures().next().is_none()
    }

    /// 0 when every asserted row passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }

    /// First row with the given statistic (and sigma, if given).
    pub fn find(&self, statistic: &str, sigma: Option<f64>) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.statistic == statistic && (sigma.is_none() || r.sigma == sigma))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ExperimentError> {
        let ser = |e: csv::Error| ExperimentError::Serialize(e.to_string());
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER).map_err(ser)?;
        for row in &self.rows {
            w.write_record(row.record()).map_err(ser)?;
        }
        w.flush().map_err(|e| ExperimentError::Serialize(e.to_string()))
    }

    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<(), ExperimentError> {
        serde_json::to_writer_pretty(&mut writer, self).map_err(|e| ExperimentError::Serialize(e.to_string()))?;
        writeln!(writer).map_err(|e| ExperimentError::Serialize(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(ExperimentError::Config(format!(
                "unknown format `{s}` (expected csv or json)"
            ))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

/// Writes `result` to `out`, or to stdout when `out` is `None`.
pub fn emit(result: &SweepResult, format: OutputFormat, out: Option<&Path>) -> Result<(), ExperimentError> {
    let write = |w: &mut dyn Write| match format {
        OutputFormat::Csv => result.write_csv(w),
        OutputFormat::Json => result.write_json(w),
    };
    match out {
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)
        }
        Some(path) => {
            let io = |e: std::io::Error| ExperimentError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            };
            let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
            write(&mut file).map_err(|e| match e {
                ExperimentError::Serialize(message) => ExperimentError::Io {
                    path: path.display().to_string(),
                    message,
                },
                other => other,
            })?;
            file.flush().map_err(io)
        }
    }
}
