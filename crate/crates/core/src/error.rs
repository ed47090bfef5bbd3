use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid initial density: {0}")]
    Density(String),

    #[error("invalid scheme parameters: {0}")]
    Params(String),

    /// A solver invariant was breached; the run cannot continue.
    #[error("solver failure at t = {t}: {reason}")]
    Solver { t: f64, reason: String },

    #[error("invalid reference profile: {0}")]
    Reference(String),

    #[error("metrics: {0}")]
    Metrics(String),

    /// Schema or semantic error in a scenario document, with a JSON-pointer path.
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn solver(t: f64, reason: impl Into<String>) -> Self {
        Error::Solver {
            t,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn is_solver(&self) -> bool {
        matches!(self, Error::Solver { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
