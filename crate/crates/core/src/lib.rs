//! Partial solvability of the infinite-horizon linear-quadratic minimization
//! problem.
//!
//! Given a control system `x' = A(t)x + B(t)u` and a (possibly indefinite)
//! quadratic supply rate, the crate decides for which initial states an
//! admissible (square-integrable) pair exists, computes the minimum value and
//! a minimizing pair from the stable Lagrange plane of the associated linear
//! Hamiltonian system, and cross-checks the answer through a regularized family
//! of problems with square nonsingular control matrices.
//!
//! Module map:
//!
//! - [`coefficients`]: time-varying coefficient data and the translation flow.
//! - [`hamiltonian`]: the Hamiltonian matrix, supply rate and feedback rule.
//! - [`dynamics`]: propagation of fundamental matrices and frames.
//! - [`dichotomy`]: stable/unstable Lagrange planes and Weyl matrices.
//! - [`rotation`]: rotation number estimation by argument unwrapping.
//! - [`lq_solver`]: the end-to-end pipeline and its cross-checks.
//! - [`cli`]: problem-spec files, reports and the command-line driver.

pub mod cli;
pub mod coefficients;
pub mod dichotomy;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod lq_solver;
pub mod rotation;

pub use coefficients::{CoefficientFn, CoefficientKind, Periodicity, ProblemData, TrigTerm};
pub use dichotomy::{DichotomyConfig, DichotomyMethod, DichotomyReport, LagrangeFrame, Verdict};
pub use dynamics::{FundamentalSolution, Method, PropagationConfig};
pub use error::{LqError, Result};
pub use hamiltonian::HamiltonianFamily;
pub use lq_solver::{solve, SolveOptions, SolveReport};
pub use rotation::{RotationConfig, RotationEstimate};
