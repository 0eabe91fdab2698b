use thiserror::Error;

use crate::coefficients::Violation;

pub type Result<T, E = LqError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LqError {
    #[error("shape mismatch for {field}: expected {expected}, got {got}")]
    Shape {
        field: String,
        expected: String,
        got: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("control weight R is numerically singular at t = {t} (condition number {cond:.3e})")]
    SingularWeight { t: f64, cond: f64 },

    #[error("problem data failed validation with {} violation(s)", .0.len())]
    InvalidProblem(Vec<Violation>),

    #[error("step size underflow at t = {t} (h = {h:.3e}); the system may be stiff")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("at least {needed} samples are required, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("matrix sign iteration did not converge after {iterations} iterations")]
    SignIteration { iterations: usize },

    #[error("B(t0) at t0 = {t0} is rank deficient (smallest singular value ratio {ratio:.3e})")]
    RankDeficientControl { t0: f64, ratio: f64 },

    #[error("no Weyl matrix for the regularized problem at epsilon = {epsilon:.3e}: {reason}")]
    WeylExtraction { epsilon: f64, reason: String },

    #[error(
        "Weyl matrices not monotone between epsilon = {larger:.3e} and {smaller:.3e} (smallest eigenvalue {min_eig:.3e})"
    )]
    Monotonicity {
        larger: f64,
        smaller: f64,
        min_eig: f64,
    },

    #[error("trajectory grows from norm {initial:.3e} to {final_norm:.3e}; initial data is not in the stable plane")]
    TrajectoryGrowth { initial: f64, final_norm: f64 },

    #[error("rotation estimate is not converged (indicator {indicator:.3e})")]
    Unconverged { indicator: f64 },

    #[error("argument of det(U1 - iU2) is undefined at t = {t}")]
    SingularDeterminant { t: f64 },

    #[error("cross-check failed: {0}")]
    CrossCheckMismatch(String),
}
