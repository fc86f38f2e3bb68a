//! Experiment harness for periodic pseudo-differential operators: kernel
//! decay fits, `H^p -> L^p` threshold sweeps, molecule pipelines, sharp
//! maximal comparisons and symbol-class checks, emitted as CSV or JSON.

pub mod config;
pub mod result;
mod runners;
mod sampling;

pub use config::{ConfigOverrides, Experiment, ExperimentConfig, ToleranceOverrides, Tolerances};
pub use result::{emit, FitRecord, OutputFormat, RunMetadata, SweepResult, SweepRow, CSV_HEADER};
pub use runners::{
    run, run_hp_pipeline, run_kernel_decay, run_molecule_decompose, run_sharp_maximal_check, run_threshold_sweep,
    run_verify_symbol,
};
pub use sampling::{cell_rng, draw_atoms, random_trig_polynomial, SeededAtom};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] torus_pdo::Error),
    #[error("precondition: {0}")]
    Precondition(String),
    /// The `T*(1) = 0` hypothesis fails, so the `H^p` pipeline refuses to run.
    #[error("refusing to run: T*(1) = 0 in BMO is required, but the measured BMO norm {bmo:e} exceeds {tolerance:e}")]
    Gate { bmo: f64, tolerance: f64 },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("serialization: {0}")]
    Serialize(String),
}

impl ExperimentError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
