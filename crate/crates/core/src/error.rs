use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin length `{0}`")]
    InvalidSpin(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("site {site} out of range for a system of {n} sites")]
    SiteOutOfRange { site: usize, n: usize },

    #[error("term does not conserve total Sz; sector restriction is not allowed")]
    SectorNotConserved,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("field applied to interior site {site}; only boundary sites may carry fields")]
    InteriorField { site: usize },

    #[error("operator is not Hermitian at entry ({row}, {col})")]
    NotHermitian { row: usize, col: usize },

    #[error("eigensolver did not converge after {restarts} restarts (residual {residual:e})")]
    NoConvergence { restarts: usize, residual: f64 },

    #[error("dimension {dim} exceeds the dense limit {limit}; solve sector by sector")]
    DenseLimit { dim: usize, limit: usize },

    #[error("degenerate eigenspace exceeds cap of {cap} states")]
    DegeneracyCap { cap: usize },

    #[error("no self-consistent branch converged for arc (offset {offset}, length {length})")]
    ScfFailed {
        offset: usize,
        length: usize,
        histories: Vec<Vec<crate::scf::ScfStep>>,
    },

    #[error("no thermal crossing: {0}")]
    NoCrossing(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
