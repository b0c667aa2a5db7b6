use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A domain type was constructed with a violated invariant.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("{what} = {value} is outside the domain [{lo}, {hi}]")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The local-linear normal matrix is (numerically) singular at `x0`.
    #[error(
        "singular local-linear design at warped point {x0} with bandwidth {bandwidth}{}",
        match min_bandwidth {
            Some(b) => format!("; a bandwidth above {b} would capture two distinct support points"),
            None => String::from("; fewer than two distinct support points exist"),
        }
    )]
    SingularDesign {
        x0: f64,
        bandwidth: f64,
        min_bandwidth: Option<f64>,
    },

    #[error("spectral density matrix at omega = {omega} has condition number {cond:e} above the limit {threshold:e}")]
    IllConditioned { omega: f64, cond: f64, threshold: f64 },

    #[error("filter quadrature left imaginary part {max_imag:e} (real scale {max_real:e}); frequency response is not conjugate symmetric")]
    ResidualImaginary { max_imag: f64, max_real: f64 },

    #[error("total sum of squares is zero; R^2 is undefined for a constant panel")]
    DegenerateTotal,

    #[error("VAR coefficient matrix has spectral radius {0} >= 1")]
    NonStationary(f64),

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed input or configuration, as opposed
    /// to numerical failures during estimation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. }
                | Error::OutOfDomain { .. }
                | Error::DimensionMismatch(_)
                | Error::NonStationary(_)
                | Error::Parse { .. }
        )
    }
}
