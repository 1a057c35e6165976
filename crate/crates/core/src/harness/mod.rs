//! Experiment orchestration and file I/O for the `recur` CLI.
//!
//! Campaigns mirror the simulation studies the estimators were designed
//! around: a convergence sweep over the initial burden, detection
//! thresholds, single-parameter stability sweeps, carrying-capacity
//! robustness with a Welch t-test report, and bootstrap refinement.
//! Replicates fan out over a worker pool with per-replicate RNG streams;
//! outputs (`rows.csv`, `summary.csv`, `config-echo.json`) depend only
//! on `(config, base_seed)`, never on scheduling.

pub mod config;
pub mod ingest;
pub mod row;
pub mod runner;

pub use config::{
    BootstrapConfig, ExperimentConfig, ExperimentKind, FieldSpec, ParamSpec, ResolvedConfig,
    StabilitySweep, CONFIG_VERSION,
};
pub use ingest::{ingest_observation, IngestedObservation};
pub use row::{summarize, ResultRow, SummaryRow};
pub use runner::{run_experiment, write_artifacts, RunArtifacts};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("bad config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
}
