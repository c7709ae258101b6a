use std::fmt;

use amh_core::calibrate::CalibrateError;
use amh_core::diagnostics::DiagnosticsError;
use amh_core::ingest::IngestError;
use amh_core::models::ModelError;
use amh_core::simulate::SimulateError;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DiagnosticsError> for CliError {
    fn from(e: DiagnosticsError) -> Self {
        match e {
            DiagnosticsError::InvalidWindow { .. } | DiagnosticsError::InvalidAlpha(_) | DiagnosticsError::LagOutOfRange { .. } => {
                CliError::Usage(e.to_string())
            }
            DiagnosticsError::DegenerateWindow => CliError::Data(e.to_string()),
        }
    }
}

impl From<CalibrateError> for CliError {
    fn from(e: CalibrateError) -> Self {
        match e {
            CalibrateError::TooShort { .. } | CalibrateError::NotMeanAdjusted => CliError::Data(e.to_string()),
            CalibrateError::SpecMismatch { .. } => CliError::Usage(e.to_string()),
            CalibrateError::Model(ModelError::TooShort { .. }) => CliError::Data(e.to_string()),
            CalibrateError::FitFailed(_) | CalibrateError::Model(_) | CalibrateError::StateSpace(_) => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SimulateError> for CliError {
    fn from(e: SimulateError) -> Self {
        CliError::Usage(e.to_string())
    }
}
