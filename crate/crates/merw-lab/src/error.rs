//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Structural problem with a graph or kernel (reducible support,
    /// dangling vertex, inconsistent dimensions, ...).
    #[error("structural error: {0}")]
    Structural(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Power iteration ran out of iterations before reaching the tolerance.
    #[error("power iteration did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// An eigenpair was handed to a consumer that requires a tighter residual.
    #[error("eigenpair residual {residual:.3e} exceeds accepted tolerance {tol:.3e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    /// Entropy rate requested on a kernel without an invariant measure.
    #[error("kernel carries no invariant measure; solve for the stationary distribution first")]
    MissingInvariantMeasure,

    /// A simulation would exceed the configured step budget.
    #[error("simulation requires {required} steps but the budget allows {budget}")]
    BudgetExceeded { required: u64, budget: u64 },

    /// A recorded trajectory contains a transition of probability zero.
    #[error("ensemble corrupted: zero-probability transition {from} -> {to}")]
    ZeroProbabilityTransition { from: u64, to: u64 },

    /// Rejection sampling gave up before collecting the requested paths.
    #[error("acceptance starvation: {accepted}/{target} paths after {attempts} attempts; raise the attempt budget or lower the horizon")]
    AcceptanceStarvation { accepted: u64, target: u64, attempts: u64 },

    /// Euler step size too coarse for the requested horizon.
    #[error("step size {dt:.3e} too coarse; need dt <= {max_dt:.3e}")]
    StepTooCoarse { dt: f64, max_dt: f64 },

    /// Adaptive quadrature failed to reach its tolerance.
    #[error("quadrature did not converge (residual {residual:.3e})")]
    QuadratureFailure { residual: f64 },

    /// Optimization did not reach the stopping criterion.
    #[error("optimizer stopped after {iterations} iterations with gradient norm {gradient_norm:.3e}")]
    OptimizerStalled { iterations: usize, gradient_norm: f64 },

    /// Malformed sample data (NaN values, empty input, ...).
    #[error("data error: {0}")]
    Data(String),

    /// Malformed text or JSON input.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
