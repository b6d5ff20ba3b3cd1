use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric (relative deviation {deviation:e})")]
    NotSymmetric { deviation: f64 },

    #[error("matrix is not positive semi-definite (pivot {index} has value {value:e})")]
    NotPsd { index: usize, value: f64 },

    #[error("Cholesky factorization failed at pivot {index} (value {value:e}); system is ill-conditioned")]
    Factorization { index: usize, value: f64 },

    #[error("low-rank inner system is ill-conditioned; loosen the factorization tolerance")]
    IllConditioned,

    #[error("eigen-solver did not converge")]
    NoConvergence,

    #[error("columns are not orthonormal (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("degenerate data: {0}")]
    Degenerate(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// True for failures of the numerical routines themselves, as opposed to
    /// bad inputs or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPsd { .. }
                | Error::Factorization { .. }
                | Error::IllConditioned
                | Error::NoConvergence
                | Error::NotSymmetric { .. }
                | Error::Degenerate(_)
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive { name, value })
    }
}
