use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Fibonacci index {n} out of range 0..={max}")]
    IndexOutOfRange { n: i64, max: u32 },

    #[error("smoothness order {r} out of range 1..={max}")]
    InvalidOrder { r: u32, max: u32 },

    #[error("base width must be positive and finite, got {u}")]
    InvalidWidth { u: f64 },

    #[error("box violates periodic admissibility on axis {axis}: r*u = {width} > 1")]
    NotPeriodicAdmissible { axis: usize, width: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("infeasible volume {v}: need 0 < v <= 1")]
    InfeasibleVolume { v: f64 },

    #[error("no admissible study rows: every (n, v) pair was rejected")]
    EmptyStudyGrid,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
