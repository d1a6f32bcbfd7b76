//! Deferred-correction time stepping for systems of ODEs `u' = F(t, u)`.
//!
//! The trapezoidal family DC2, DC4, ..., DC(2j+2) starts from the modified
//! trapezoidal rule and raises the order by two per correction stage while
//! staying A-stable. The Euler family raises the order by one per stage,
//! starting from forward or backward Euler. Every stage is self-starting:
//! values left of the initial time come from marching that stage backward.
//!
//! Modules:
//! * [`operators`]: difference and averaging operators on uniform grids;
//! * [`coefficients`]: exact-rational correction coefficients;
//! * [`newton`]: damped Newton for the implicit step relations;
//! * [`dc_trapezoid`] and [`dc_euler`]: the two hierarchies;
//! * [`stream`]: bounded-memory marching of a whole hierarchy;
//! * [`stability`]: amplification sequences and stability scans;
//! * [`problems`] and [`harness`]: benchmark problems, error norms,
//!   convergence studies and reference solutions.

pub mod coefficients;
pub mod dc_euler;
pub mod dc_trapezoid;
pub mod harness;
pub mod newton;
pub mod operators;
pub mod problem;
pub mod problems;
pub mod scalar;
pub mod scheme;
pub mod stability;
pub mod stage;
pub mod stream;
pub mod trajectory;

pub use newton::{NewtonConfig, NewtonReport};
pub use problem::OdeProblem;
pub use scalar::Scalar;
pub use scheme::{Family, SchemeSpec};
pub use stage::{DcError, GridRange};
pub use trajectory::Trajectory;

/// Solves `problem` with any scheme family, keeping every state on `[0, N]`.
pub fn solve<S: Scalar>(
    problem: &OdeProblem<S>,
    spec: &SchemeSpec,
    k: f64,
    newton: &NewtonConfig,
) -> Result<Trajectory<S>, DcError> {
    stage::solve_staged(problem, spec, k, newton)
}
