use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("subsystem {index} is out of range for {count} subsystems")]
    UnknownSubsystem { index: usize, count: usize },

    #[error("invalid local dimension {0} (must be at least 2)")]
    InvalidDimension(usize),

    #[error("Hilbert-space dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: String, cap: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("basis is not orthonormal (Gram deviation {0:.3e})")]
    NonOrthonormal(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("no correlated component: C = {0:.3e}")]
    NoCorrelatedComponent(f64),

    #[error("correlations are imperfect (off-assignment weight {0:.3e}); truncate to the perfectly correlated part first")]
    ImperfectCorrelation(f64),

    #[error("membership check failed: max marginal deviation {deviation:.3e} on hyperedge {hyperedge:?}")]
    MembershipFailed { hyperedge: Vec<usize>, deviation: f64 },

    #[error("code subspace agreement is not certified for this topology")]
    AgreementNotCertified,

    #[error("error set is empty")]
    EmptyErrorSet,

    #[error("eigensolver failed on a {dim}x{dim} matrix: {detail}")]
    Eigensolver { dim: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
