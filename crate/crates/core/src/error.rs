use thiserror::Error;

/// Errors surfaced by solvers, distributions, and scenario pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular matrix: pivot {pivot:.3e} below tolerance at step {step}")]
    SingularMatrix { step: usize, pivot: f64 },

    #[error("infeasible problem: {0}")]
    InfeasibleProblem(String),

    #[error("infeasible tightening: {0}")]
    InfeasibleTightening(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("unsupported distribution: {0}")]
    UnsupportedDistribution(String),

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
