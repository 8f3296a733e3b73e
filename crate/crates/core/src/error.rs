use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The sample does not support an estimate (γ ≤ 0 regime, ties, constant data).
    #[error("estimation failure: {0}")]
    EstimationFailure(String),

    /// Zero is not interior to the convex hull of the estimating-function values.
    #[error("EL point infeasible: zero outside the convex hull of g values")]
    Infeasible,

    #[error("numerical failure after {iterations} iterations (residual {residual:e}): {what}")]
    Numerical {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("singular matrix")]
    Singular,

    /// Every σ evaluated while profiling was infeasible.
    #[error("profile failure at gamma = {gamma}")]
    ProfileFailure { gamma: f64 },
}
