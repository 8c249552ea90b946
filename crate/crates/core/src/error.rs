use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("horizon exceeded: level {level} + depth {depth} > horizon {horizon} + 1")]
    HorizonExceeded { level: usize, depth: usize, horizon: usize },

    #[error("exact mode refused: {ground} ground elements exceed budget {budget}")]
    BudgetExceeded { ground: usize, budget: usize },

    #[error("empty subset where a non-empty one is required")]
    EmptySubset,

    #[error("conjugacy commutation fails at level {level}, point {point}")]
    CommutationFailure { level: usize, point: usize },

    #[error("potential level mismatch: {0}")]
    LevelMismatch(String),

    #[error("infeasible schedule: {0}")]
    InfeasibleSchedule(String),

    #[error("value function is not non-increasing in s near s={0}")]
    NonMonotoneValue(f64),

    #[error("cover atom pool too large ({size} atoms, cap {cap})")]
    PoolTooLarge { size: usize, cap: usize },

    #[error("set not coverable from the available atom pool")]
    NotCoverable,

    #[error("config error: {0}")]
    Config(String),
}
