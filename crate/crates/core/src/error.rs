use crate::flow::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix is numerically singular (pivot {pivot:.3e} below tolerance)")]
    NumericallySingular { pivot: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("auxiliary problem found no strictly interior point (delta = {delta:.3e})")]
    EmptyInterior { delta: f64 },

    #[error("vertex coordinate {index} is not strictly positive ({value:.3e})")]
    DegenerateVertex { index: usize, value: f64 },

    #[error("partition is not optimal: rate {index} is {value:.3e}")]
    NotOptimalPartition { index: usize, value: f64 },

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("integration reached t_max = {t_max} before convergence")]
    Timeout { t_max: f64, partial: Box<Trajectory> },

    #[error("step size fell below {min_step:.1e} at t = {t:.6e}")]
    StiffnessFailure { t: f64, min_step: f64 },

    #[error("need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("empirical CDF needs at least one finite sample")]
    EmptySample,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_trial(self, trial: u64) -> Error {
        match self {
            e @ Error::Trial { .. } => e,
            e => Error::Trial { trial, source: Box::new(e) },
        }
    }

    /// True for failures that come from floating point trouble rather than
    /// from bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NumericallySingular { .. }
            | Error::Numerical(_)
            | Error::StiffnessFailure { .. }
            | Error::Timeout { .. }
            | Error::EmptyInterior { .. }
            | Error::DegenerateVertex { .. }
            | Error::NotOptimalPartition { .. } => true,
            Error::Trial { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
