use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the library. Each variant belongs to one of two families,
/// input errors (bad documents, bad arguments) and numerical errors (singular
/// systems, degenerate experiments), see [`Error::is_numerical`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("invalid circuit at {path}: {message}")]
    InvalidCircuit { path: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("ill-conditioned eigenbasis (condition number {cond:.3e} > {limit:.0e}); regularize the model")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("non-physical spectrum: {0}")]
    Spectrum(String),

    #[error("degenerate experiment: {0}")]
    Degenerate(String),

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("infeasible design: {0}")]
    Infeasible(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidCircuit {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_)
                | Error::IllConditioned { .. }
                | Error::Spectrum(_)
                | Error::Degenerate(_)
                | Error::NoRoot(_)
                | Error::Infeasible(_)
        )
    }
}
