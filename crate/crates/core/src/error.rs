use thiserror::Error;

/// Errors raised by simulation, estimation and experiment orchestration.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("simulation blew up at step {step}: {reason}")]
    SimulationBlowup { step: u64, reason: String },

    #[error("estimator `{estimator}` diverged at step {step}")]
    EstimatorDivergence { estimator: String, step: u64 },

    #[error("validation failed for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("run failed: {0}")]
    Runtime(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { field: field.into(), message: message.into() }
    }

    /// Machine-readable kind tag, used by the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidInput(_) => "invalid_input",
            Error::Infeasible(_) => "infeasible",
            Error::SimulationBlowup { .. } => "simulation_blowup",
            Error::EstimatorDivergence { .. } => "estimator_divergence",
            Error::Validation { .. } => "validation",
            Error::Parse { .. } => "parse",
            Error::Runtime(_) => "runtime",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for errors caused by a bad configuration rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::InvalidInput(_)
                | Error::Infeasible(_)
                | Error::Validation { .. }
                | Error::Parse { .. }
        )
    }
}
