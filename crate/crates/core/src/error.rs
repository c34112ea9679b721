use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("infeasible scale: {0}")]
    InvalidScale(String),
    #[error("F_k overflow: {0}")]
    Overflow(String),
    #[error("position {position} is not a member of the interval starting at {start} (width {width}, modulus {modulus})")]
    NotMember {
        position: u64,
        start: u64,
        width: u64,
        modulus: u64,
    },
    #[error("decomposition gap: {0}")]
    DecompositionGap(String),
    #[error("infeasible promise: {0}")]
    InfeasiblePromise(String),
    #[error("assembly incomplete: {0}")]
    AssemblyIncomplete(String),
    #[error("invalid segment boundaries: {0}")]
    InvalidBoundaries(String),
    #[error("malformed estimator state: {0}")]
    MalformedState(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
