use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs at least {min} cells per side, got {got}")]
    GridTooCoarse { got: usize, min: usize },

    #[error("unknown case `{name}` (registered: {})", .registered.join(", "))]
    UnknownCase {
        name: String,
        registered: Vec<String>,
    },

    #[error("case `{name}` is {actual}, but a {expected} solver was requested")]
    CaseKind {
        name: String,
        expected: &'static str,
        actual: &'static str,
    },

    #[error("non-finite value {value} sampled at node ({i}, {j})")]
    NonFiniteSample { i: usize, j: usize, value: f64 },

    #[error("derivative order {0} is outside 1..=5")]
    DerivativeOrder(usize),

    #[error("mixed derivative ({m}, {n}) exceeds total order 5")]
    MixedOrder { m: usize, n: usize },

    #[error("fields live on different grids ({0} vs {1} cells)")]
    GridMismatch(usize, usize),

    #[error("diffusion coefficient {value} is not positive at node ({i}, {j})")]
    NonPositiveKappa { i: usize, j: usize, value: f64 },

    #[error("time-step ratio must be positive and finite, got {0}")]
    InvalidRatio(f64),

    #[error("step count 1/(r h) = {0} is not an integer")]
    NonIntegerSteps(f64),

    #[error("{0}")]
    ModeMismatch(String),

    #[error("equal-coefficient stencil needs a = b, but |a - b| = {diff:e} at node ({i}, {j})")]
    CoefficientsNotEqual { i: usize, j: usize, diff: f64 },

    #[error("reduction of u^({p},{q}) is outside the supported index set (total order 2..={cap})")]
    ReductionRange { p: usize, q: usize, cap: usize },

    #[error("stencil matching failed at node ({i}, {j}): relative residual {residual:e}")]
    StencilDerivation { i: usize, j: usize, residual: f64 },

    #[error("stencil field has {got} entries, expected {expected}")]
    MissingStencil { got: usize, expected: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("BiCGStab stopped after {iterations} iterations at relative residual {residual:e}")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("iterate diverged (non-finite values) at step {step}, iteration {iteration}")]
    Divergence { step: usize, iteration: usize },

    #[error("invalid levels: {0}")]
    InvalidLevels(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
