use std::path::PathBuf;

use heatlab::HeatError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("experiment `{experiment}` produced untrusted results: {detail}")]
    Trust { experiment: String, detail: String },
    #[error("numerical guard tripped in `{experiment}`: {detail}")]
    Guard { experiment: String, detail: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("plot error: {0}")]
    Plot(String),
    #[error("refusing to overwrite golden files without --force")]
    GoldenLocked,
    #[error("{} check(s) failed: {}", failed.len(), failed.join(", "))]
    ChecksFailed { failed: Vec<String> },
    #[error("experiment `{experiment}` failed: {source}")]
    Numerical {
        experiment: String,
        #[source]
        source: HeatError,
    },
}

impl CliError {
    /// Process exit status; each failure path has its own code.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Trust { .. } => 3,
            CliError::Guard { .. } => 4,
            CliError::Io { .. } => 5,
            CliError::Parse { .. } => 6,
            CliError::Plot(_) => 7,
            CliError::GoldenLocked => 8,
            CliError::ChecksFailed { .. } => 9,
        }
    }

    /// Classify a core error raised while running `experiment`.
    pub fn from_heat(experiment: &str, e: HeatError) -> CliError {
        let experiment = experiment.to_string();
        match e {
            HeatError::SubcriticalExponent { .. } => CliError::Config(format!("{experiment}: SubcriticalExponent: {e}")),
            HeatError::InvalidArgument(_) | HeatError::UnknownBackend(_) => CliError::Config(format!("{experiment}: {e}")),
            HeatError::DecayViolation { .. } => CliError::Guard {
                experiment,
                detail: e.to_string(),
            },
            HeatError::TailUntrusted { .. } => CliError::Trust {
                experiment,
                detail: e.to_string(),
            },
            source => CliError::Numerical { experiment, source },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Attach the experiment name to core errors.
pub trait HeatContext<T> {
    fn within(self, experiment: &str) -> CliResult<T>;
}

impl<T> HeatContext<T> for heatlab::Result<T> {
    fn within(self, experiment: &str) -> CliResult<T> {
        self.map_err(|e| CliError::from_heat(experiment, e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
