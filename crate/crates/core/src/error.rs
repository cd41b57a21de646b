use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// No saddle point could be certified inside the search box.
    #[error("no certified saddle point in box: {0}")]
    NoSaddle(String),

    /// Several distinct certified saddle points were found.
    #[error("complex minimum is multivalued ({} values)", .values.len())]
    MultivaluedMin {
        argmins: Vec<Vec<Complex64>>,
        values: Vec<Complex64>,
    },

    /// The wavefunction vanishes (relative to its peak) at the probe.
    #[error("wavefunction node at x = {x}")]
    Node { x: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Short machine-readable tag for reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DomainError",
            Error::NoSaddle(_) => "NoSaddle",
            Error::MultivaluedMin { .. } => "MultivaluedMin",
            Error::Node { .. } => "NodeError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
