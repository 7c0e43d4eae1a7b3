//! Exit-code discipline: 0 success, 1 usage error, 2 input error,
//! 3 internal invariant violation.

use polygate_core::dataset::DatasetError;
use polygate_core::outlier::OutlierError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::BadSplitConfig { .. } | DatasetError::UnknownFold { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<polygate_core::geometry::GeometryError> for CliError {
    fn from(e: polygate_core::geometry::GeometryError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<OutlierError> for CliError {
    fn from(e: OutlierError) -> Self {
        match e {
            OutlierError::InvalidContamination(_) | OutlierError::ZeroK
            | OutlierError::SideTooSmall(_) => CliError::Usage(e.to_string()),
            OutlierError::TooFewPoints { n, k } => CliError::Input(format!(
                "LOF needs more samples than neighbors: got {n} samples with k = {k}; \
                 rerun with --k smaller than the fold's train+val size"
            )),
            _ => CliError::Input(e.to_string()),
        }
    }
}
