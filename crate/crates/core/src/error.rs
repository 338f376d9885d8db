use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector {index} has norm below the zero cutoff")]
    ZeroVector { index: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector {index} is off the unit sphere (norm {norm})")]
    OffSphere { index: usize, norm: f64 },

    #[error("malformed file {path}: {reason} (byte offset {offset})", path = .path.display())]
    MalformedFile {
        path: PathBuf,
        offset: u64,
        reason: String,
    },

    #[error("duplicate id `{0}`")]
    IdCollision(String),

    #[error("unknown id `{0}`")]
    UnknownId(String),

    #[error("invalid correspondence: {0}")]
    InvalidCorrespondence(String),

    #[error("cross-covariance is rank deficient (rank {rank} of {dim})")]
    DegenerateCovariance { rank: usize, dim: usize },

    #[error("no threshold reaches {required} edges; only {available} distinct-point pairs exist")]
    Unsatisfiable { required: usize, available: usize },

    #[error("only {available} classes have at least {k_shot} labeled images; {n_way} required")]
    InsufficientClasses {
        n_way: usize,
        k_shot: usize,
        available: usize,
    },

    #[error("length mismatch: {left} predictions vs {right} ground-truth entries")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid modification: {0}")]
    InvalidModification(String),

    #[error("could not find {wanted} unique modifications after {attempts} attempts")]
    ExhaustedRetries { wanted: usize, attempts: usize },

    #[error("embedding dimension {dim} is smaller than the attribute encoding width {required}")]
    DimensionTooSmall { dim: usize, required: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable variant name, used by the CLI when reporting failures.
    pub fn name(&self) -> &'static str {
        match self {
            Error::ZeroVector { .. } => "ZeroVector",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::OffSphere { .. } => "OffSphere",
            Error::MalformedFile { .. } => "MalformedFile",
            Error::IdCollision(_) => "IdCollision",
            Error::UnknownId(_) => "UnknownId",
            Error::InvalidCorrespondence(_) => "InvalidCorrespondence",
            Error::DegenerateCovariance { .. } => "DegenerateCovariance",
            Error::Unsatisfiable { .. } => "Unsatisfiable",
            Error::InsufficientClasses { .. } => "InsufficientClasses",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::InvalidModification(_) => "InvalidModification",
            Error::ExhaustedRetries { .. } => "ExhaustedRetries",
            Error::DimensionTooSmall { .. } => "DimensionTooSmall",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Io(_) => "Io",
        }
    }
}
