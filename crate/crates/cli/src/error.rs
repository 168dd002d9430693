use branchlink::bounds::BoundsError;
use branchlink::distributions::DistributionError;
use branchlink::equivalence::EquivalenceError;
use branchlink::estimator::EstimatorError;
use branchlink::matching::MatchingError;
use branchlink::KernelError;
use std::io;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}, column {column}: expected {expected}, found {found}")]
    Parse { line: usize, column: usize, expected: String, found: String },
    #[error("line {line}: `{key}`: {message}")]
    Validation { line: usize, key: String, message: String },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{0}")]
    Failure(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } => 2,
            CliError::Numeric(_) => 3,
            CliError::Failure(_) | CliError::Io(_) => 1,
        }
    }

    pub(crate) fn missing(key: &str, line: usize) -> Self {
        CliError::Validation { line, key: key.into(), message: "required by this command".into() }
    }
}

impl From<DistributionError> for CliError {
    fn from(e: DistributionError) -> Self {
        match e {
            DistributionError::SupportOverflow { .. } | DistributionError::NonFiniteMoment(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::Distribution(d) => d.into(),
            other => CliError::Failure(other.to_string()),
        }
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::Kernel(k) => k.into(),
            EstimatorError::LikelihoodUnderflow { .. } => CliError::Numeric(e.to_string()),
            EstimatorError::InvalidArgument(m) => CliError::Failure(m),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Kernel(k) => k.into(),
            other => CliError::Failure(other.to_string()),
        }
    }
}

impl From<MatchingError> for CliError {
    fn from(e: MatchingError) -> Self {
        match e {
            MatchingError::Kernel(k) => k.into(),
            other => CliError::Failure(other.to_string()),
        }
    }
}

impl From<EquivalenceError> for CliError {
    fn from(e: EquivalenceError) -> Self {
        match e {
            EquivalenceError::Kernel(k) => k.into(),
            other => CliError::Failure(other.to_string()),
        }
    }
}
