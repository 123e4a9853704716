use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("geometry too coarse: {cells:.2} cells across the obstacle diameter (need at least 4)")]
    GeometryTooCoarse { cells: f64 },

    #[error("time {t} is outside the motion horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },

    #[error("negative density {0}")]
    NegativeDensity(f64),

    #[error("vacuum: density {value:.3e} at cell {cell}")]
    Vacuum { cell: usize, value: f64 },

    #[error("time step {dt:.3e} violates the stability bound {limit:.3e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("non-finite value detected in {0}")]
    NanDetected(&'static str),

    #[error("fluid region is disconnected ({components} components)")]
    DisconnectedDomain { components: usize },

    #[error("poisson solve did not converge: residual {residual:.3e} after {iterations} iterations")]
    PoissonFailure { iterations: usize, residual: f64 },

    #[error("eigensolver failure: {0}")]
    EigensolverFailure(String),

    #[error("negative power {power} applied to a field with kernel component {component:.3e}")]
    KernelSingularity { power: f64, component: f64 },

    #[error("quadrature step {step:.3e} does not resolve the fastest oscillation (need <= {limit:.3e})")]
    UnresolvedOscillation { step: f64, limit: f64 },

    #[error("snapshot schedules differ: {0}")]
    ScheduleMismatch(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config validation failed:\n  - {}", .0.join("\n  - "))]
    ConfigValidation(Vec<String>),

    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("run directory {} is incomplete", .0.display())]
    IncompleteRun(PathBuf),

    #[error("malformed artifact {}: {message}", path.display())]
    MalformedArtifact { path: PathBuf, message: String },

    #[error("eps = {eps}, step {step}: {source}")]
    InRun {
        eps: f64,
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Strips run tags to expose the underlying failure.
    pub fn root(&self) -> &Error {
        match self {
            Error::InRun { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_config_error(&self) -> bool {
        matches!(
            self.root(),
            Error::ConfigParse { .. } | Error::ConfigValidation(_)
        )
    }

    pub(crate) fn tagged(self, eps: f64, step: usize) -> Error {
        match self {
            e @ Error::InRun { .. } => e,
            e => Error::InRun {
                eps,
                step,
                source: Box::new(e),
            },
        }
    }
}
