use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("time {t} s outside irradiance coverage [{first}, {last}]")]
    Coverage { t: f64, first: f64, last: f64 },

    #[error("move {action} from cell ({row}, {col}) is blocked: {reason}")]
    Blocked {
        row: usize,
        col: usize,
        action: &'static str,
        reason: &'static str,
    },

    #[error("value iteration did not converge after {iterations} sweeps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("no start state inside the risk band after {attempts} attempts")]
    EmptyBand { attempts: usize },

    #[error("rollout exceeded {0} steps")]
    StepLimit(usize),

    #[error("artifact was built for scenario {expected}, found {found}")]
    HashMismatch { expected: String, found: String },

    #[error("malformed artifact: {0}")]
    Artifact(String),

    #[error("config: {0}")]
    Config(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
