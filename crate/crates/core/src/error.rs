use thiserror::Error;

use crate::dataio::DataError;
use crate::encoding::EncodingError;
use crate::harness::HarnessError;
use crate::learners::LearnError;
use crate::losses::LossError;
use crate::metrics::MetricError;
use crate::stacking::StackError;
use crate::tuning::TuneError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Crate-level error; every variant names the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("encoding: {0}")]
    Encoding(#[from] EncodingError),
    #[error("dataio: {0}")]
    Data(#[from] DataError),
    #[error("losses: {0}")]
    Loss(#[from] LossError),
    #[error("learners: {0}")]
    Learn(#[from] LearnError),
    #[error("tuning: {0}")]
    Tune(#[from] TuneError),
    #[error("stacking: {0}")]
    Stack(#[from] StackError),
    #[error("metrics: {0}")]
    Metric(#[from] MetricError),
    #[error("harness: {0}")]
    Harness(#[from] HarnessError),
}
