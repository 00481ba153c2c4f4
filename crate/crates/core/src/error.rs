use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("transition row at (h={h}, s={s}, a={a}) is not a probability vector (sum {sum})")]
    NonStochasticRow { h: usize, s: usize, a: usize, sum: f64 },

    #[error("reward at (h={h}, s={s}, a={a}) is {value}, outside [0, 1]")]
    RewardOutOfRange { h: usize, s: usize, a: usize, value: f64 },

    #[error("malformed model: {0}")]
    Shape(String),

    #[error("invalid delta {delta} (epsilon {epsilon}): need 0 < delta < 1/2 and delta + epsilon <= 1")]
    InvalidDelta { delta: f64, epsilon: f64 },

    #[error("invalid epsilon {epsilon}: need 0 <= epsilon <= {max}")]
    InvalidEpsilon { epsilon: f64, max: f64 },

    #[error("visit count {n} outside schedule range 1..={n_max}")]
    OutOfRange { n: u64, n_max: u64 },

    #[error("(h={h}, s={s}, a={a}) is not at a stage end (n={n}, intra-stage {n_stage})")]
    NotAtStageEnd { h: usize, s: usize, a: usize, n: u64, n_stage: u64 },

    #[error("accumulator ordering violated: {0}")]
    OrderingViolation(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid constant: {0}")]
    InvalidConstant(String),

    #[error("trajectory budget {0} is below one episode")]
    BudgetTooSmall(f64),

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownName { kind: &'static str, name: String, known: String },

    #[error("{origin}: line {line}: {msg}")]
    Parse { origin: String, line: usize, msg: String },

    #[error("config field `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("invariant breached: {0}")]
    Invariant(String),

    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
