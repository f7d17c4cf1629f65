use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("oscillatory transform did not converge after {segments} segments (last correction {last_correction:e})")]
    HankelNonConvergence { segments: usize, last_correction: f64 },

    #[error("step size underflow at t = {t} (step {step:e})")]
    StepUnderflow { t: f64, step: f64 },

    #[error("norm drift {drift:e} exceeds tolerance {tolerance:e}")]
    NormDrift { drift: f64, tolerance: f64 },

    #[error("mass parameter m = {m} gives complex roots (quasi-local regime requires 0 < m < 1/4)")]
    ComplexRoots { m: f64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: String, reason: String },

    #[error("degenerate Bloch vector at k = ({kx}, {ky})")]
    DegenerateBlochVector { kx: f64, ky: f64 },

    #[error("gap ratio {worst} for eliminated level {level} is below threshold {threshold}")]
    GapRatio { worst: f64, level: usize, threshold: f64 },

    #[error("expansion parameter {value} exceeds limit {limit}")]
    ExpansionParameter { value: f64, limit: f64 },

    #[error("Rabi constraint violated at entry {entry}: deviation {deviation:e}")]
    Constraint { entry: String, deviation: f64 },

    #[error("site ({x1}, {x2}) lies outside the domain: {reason}")]
    Domain { x1: i64, x2: i64, reason: String },

    #[error("fit window is invalid: {0}")]
    FitWindow(String),

    #[error("no laser parameters satisfy the assumptions; binding constraint: {constraint} (margin {margin})")]
    Infeasible { constraint: String, margin: f64 },

    #[error("target spinor is not normalized (|P|^2 + |Q|^2 = {norm})")]
    UnreachableTarget { norm: f64 },

    #[error("residual bus population {population:e} after pulse pair at k index {index}")]
    BusPopulation { population: f64, index: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParams { field: field.into(), reason: reason.into() }
    }
}
