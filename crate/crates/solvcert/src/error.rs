use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Every violation found in the input, not just the first.
    #[error("invalid network:\n{}", .reasons.join("\n"))]
    InvalidNetwork { reasons: Vec<String> },

    #[error("malformed JSON at line {line}, column {column}: {msg}")]
    MalformedJson {
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e}, norm {norm:.3e})")]
    NotPsd { min_eig: f64, norm: f64 },

    #[error("{0}")]
    Invalid(String),

    #[error("cross-validation failed:\n{}", .mismatches.join("\n"))]
    CrossValidation { mismatches: Vec<String> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
