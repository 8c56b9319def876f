//! Experiment plumbing: configuration, the training pipeline, model
//! archives, the repeated-split benchmark and cross-study comparison.

pub mod archive;
pub mod benchmark;
pub mod commands;
pub mod compare;
pub mod config;
pub mod pipeline;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dataio::DataError;
use crate::learners::LearnError;
use crate::metrics::MetricError;
use crate::stacking::StackError;
use crate::tuning::TuneError;

pub use archive::{ModelArchive, FORMAT_VERSION};
pub use benchmark::{run_benchmark, BenchmarkReport};
pub use compare::{compare_studies, ConcordanceReport};
pub use config::{load_experiment, Experiment, ExperimentConfig, PipelineConfig, RosterEntry};
pub use pipeline::{train_pipeline, TrainedPipeline};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config{}: {message}", path.as_ref().map(|p| format!(" {}", p.display())).unwrap_or_default())]
    Config {
        path: Option<PathBuf>,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("archive: {0}")]
    Archive(String),
    #[error("dataio: {0}")]
    Data(#[from] DataError),
    #[error("tuning: {0}")]
    Tune(#[from] TuneError),
    #[error("stacking: {0}")]
    Stack(#[from] StackError),
    #[error("learners: {0}")]
    Learn(#[from] LearnError),
    #[error("metrics: {0}")]
    Metric(#[from] MetricError),
    #[error("compare-studies: {0}")]
    Compare(String),
}

impl HarnessError {
    pub(crate) fn with_path(self, p: &Path) -> Self {
        match self {
            HarnessError::Config { path: None, message } => HarnessError::Config {
                path: Some(p.to_path_buf()),
                message,
            },
            other => other,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

/// Clips a raw prediction into the unit interval; applied once, at output.
pub fn clip_score(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}
