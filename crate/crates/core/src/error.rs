use thiserror::Error;

pub type Result<T, E = DacdError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DacdError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("covariance matrix is not positive definite (jitter reached {jitter:e})")]
    Factorization { jitter: f64 },

    #[error("all {restarts} hyperparameter restarts failed")]
    AllRestartsFailed { restarts: usize },

    #[error("index set is empty")]
    EmptyIndexSet,

    #[error("query budget exhausted: every grid index has been sampled")]
    BudgetExhausted,

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<DacdError>,
    },

    #[error("window A={window} too large for series of length {len} (need len >= 2A+1)")]
    WindowTooLarge { window: usize, len: usize },

    #[error("cannot place {requested} change-points; only {found} fit after suppression")]
    InfeasibleK { requested: usize, found: usize },

    #[error("degenerate neighbourhood around sample {index}: design matrix is rank-deficient")]
    DegenerateNeighborhood { index: usize },

    #[error("grid of {grid} points is too small for {needed} initial samples")]
    GridTooSmall { grid: usize, needed: usize },

    #[error("jump process rejected {attempts} times without meeting the jump constraint")]
    RejectionLimit { attempts: usize },

    #[error("non-finite state at step {step}")]
    NonFiniteState { step: usize },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("too many failed runs: {failed} of {total}")]
    TooManyFailures { failed: usize, total: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DacdError {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        DacdError::Iteration {
            iteration,
            source: Box::new(self),
        }
    }
}
