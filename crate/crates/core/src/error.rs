use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state space would exceed the cap of {cap} states")]
    CapExceeded { cap: usize },

    #[error("empty state space")]
    EmptyStateSpace,

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("({from}, {to}) is not a transition of the chain")]
    NotATransition { from: usize, to: usize },

    #[error("dimension mismatch: kernel has {kernel} states, other input has {other}")]
    DimensionMismatch { kernel: usize, other: usize },

    #[error("detailed balance fails at ({0}, {1})")]
    NotReversible(usize, usize),

    #[error("chain is not irreducible on its state space")]
    NotIrreducible,

    #[error("state {state} has no self-loop")]
    MissingSelfLoop { state: usize },

    #[error("invalid odd walk for state {state}: {reason}")]
    InvalidWalk { state: usize, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("eigensolver residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
