use alloc::string::String;
use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("not a density matrix: {0}")]
    InvalidState(String),
    #[error("state is not faithful (minimum eigenvalue {min_eigenvalue:e})")]
    NotFaithful { min_eigenvalue: f64 },
    #[error("support of the first state is not contained in the support of the second")]
    SupportViolation,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("function is not finite on the spectrum")]
    NonFiniteFunction,
    #[error("numeric overflow in {0}")]
    Overflow(&'static str),
    #[error("dimension {dim} exceeds the limit {limit}")]
    ResourceLimit { dim: usize, limit: usize },
    #[error("not admissible: {0}")]
    Inadmissible(String),
    #[error("family is not certified for {0} factorization")]
    Uncertified(&'static str),
    #[error("product state is singular; no finite factorization constant")]
    SingularProduct,
    #[error("no convergence after {iterations} iterations (gap {gap:e})")]
    NoConvergence { iterations: usize, gap: f64 },
    #[error("certificate disagreement: pencil {pencil}, direct {direct}")]
    CertificateMismatch { pencil: f64, direct: f64 },
}

/// Coarse classification, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Domain,
    Resource,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::ResourceLimit { .. } => ErrorKind::Resource,
            _ => ErrorKind::Domain,
        }
    }

    /// Stable machine-readable tag.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "not_square",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidState(_) => "invalid_state",
            Error::NotFaithful { .. } => "not_faithful",
            Error::SupportViolation => "support_violation",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::NonFiniteFunction => "non_finite_function",
            Error::Overflow(_) => "overflow",
            Error::ResourceLimit { .. } => "resource_limit",
            Error::Inadmissible(_) => "inadmissible",
            Error::Uncertified(_) => "uncertified",
            Error::SingularProduct => "singular_product",
            Error::NoConvergence { .. } => "no_convergence",
            Error::CertificateMismatch { .. } => "certificate_mismatch",
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
