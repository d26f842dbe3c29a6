use std::fmt;

use darkwann_core::dataset::DatasetError;
use darkwann_core::metrics::MetricsError;
use darkwann_core::pps::PpsError;
use darkwann_core::reservoir::ReservoirError;
use darkwann_core::search::SearchError;
use darkwann_core::shapley::ShapleyError;

/// A failed command. The variant picks the process exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration (exit 2).
    Usage(String),
    /// Unreadable or invalid input data, missing artifacts, or a refusal to
    /// overwrite existing files (exit 3).
    Data(String),
    /// A computation failed (exit 4).
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Compute(_) => 4,
        }
    }

    pub fn context(self, what: impl fmt::Display) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{what}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{what}: {m}")),
            CliError::Compute(m) => CliError::Compute(format!("{what}: {m}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Compute(m) => write!(f, "computation error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::InvalidFractions(_) | DatasetError::InvalidSynthSpec(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<PpsError> for CliError {
    fn from(e: PpsError) -> Self {
        match e {
            PpsError::Csv(_) | PpsError::Io(_) | PpsError::UnknownColumn(_) => CliError::Data(e.to_string()),
            PpsError::InvalidFolds => CliError::Usage(e.to_string()),
            PpsError::EmptySelection { .. } => CliError::Compute(format!(
                "{e}; lower pps.threshold or inspect pps_matrix.csv for the best available scores"
            )),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<ReservoirError> for CliError {
    fn from(e: ReservoirError) -> Self {
        match e {
            ReservoirError::ParseGenome(_) | ReservoirError::InvalidGenome(_) | ReservoirError::InvalidRidge(_) => {
                CliError::Usage(e.to_string())
            }
            ReservoirError::UnsupportedFormatVersion(_) | ReservoirError::Serialization(_) => {
                CliError::Data(e.to_string())
            }
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            SearchError::Reservoir(r) => r.into(),
            SearchError::Csv(_) | SearchError::DatasetMismatch(_) | SearchError::EmptyDataset(_) => {
                CliError::Data(e.to_string())
            }
            SearchError::NoLegalMutation => CliError::Compute(e.to_string()),
        }
    }
}

impl From<ShapleyError> for CliError {
    fn from(e: ShapleyError) -> Self {
        match e {
            ShapleyError::Model(r) => r.into(),
            ShapleyError::Csv(_) | ShapleyError::Io(_) | ShapleyError::DimensionMismatch { .. } => {
                CliError::Data(e.to_string())
            }
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
