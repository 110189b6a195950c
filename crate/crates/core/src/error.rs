use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("ties present in sample (values at positions {first} and {second} are equal)")]
    TiesPresent { first: usize, second: usize },
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("not a permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid dependence graph: {0}")]
    InvalidGraph(String),
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("enumeration too large: {0}")]
    EnumerationTooLarge(String),
    #[error("invalid data matrix: {0}")]
    InvalidData(String),
    #[error("column {0} has zero variance")]
    DegenerateColumn(usize),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("eigenvalue iteration failed: {0}")]
    EigenFailure(String),
    #[error("argument out of supported range: {0}")]
    RangeExceeded(String),
    #[error("null calibration needs at least 100 replications, got {0}")]
    CalibrationTooSmall(usize),
    #[error("statistic {0} is not distribution-free under the null")]
    NotDistributionFree(String),
    #[error("no asymptotic null law for {0}; supply a variance override or use Monte-Carlo calibration")]
    NoAsymptoticNull(String),
    #[error("matrix is not positive semi-definite (pivot {0:e})")]
    NotPsd(f64),
    #[error("models with paired halves need an even dimension, got p = {0}")]
    OddDimension(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
