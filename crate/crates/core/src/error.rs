use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch at {layer}: expected {expected}, got {got}")]
    DimensionMismatch {
        layer: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("hinge loss requires labels in {{-1, +1}}, got {0}")]
    InvalidLabel(f64),

    #[error("empty batch")]
    EmptyBatch,

    #[error("clipping threshold tau must be > 0, got {0}")]
    InvalidTau(f64),

    #[error("penalty weight lambda must be >= 0, got {0}")]
    InvalidLambda(f64),

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Divergence { epoch: usize },

    #[error("simulation produced a non-finite value at step {step}")]
    NonFiniteSimulation { step: usize },

    #[error("{kind} is a {task} process; operation requires a {required} process")]
    WrongTask {
        kind: String,
        task: &'static str,
        required: &'static str,
    },

    #[error("invalid schedule exponents: {0}")]
    ScheduleCondition(String),

    #[error("tau too large for this epsilon: inner denominator {denominator} <= 0")]
    TauTooLarge { denominator: f64 },

    #[error("every grid point failed to train")]
    AllGridPointsFailed,

    #[error("{failed} of {total} replications failed (limit is 10%)")]
    TooManyFailures { failed: usize, total: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
