//! Deferred correction built on the Euler rules, one order per stage.
//!
//! Stage `j+1` of the forward variant solves
//! `(u^{n+1} - u^n)/k - C = F(t_n, u^n)` with
//! `C = Σ_{i=1}^{j} a_{i+1} k^i D-^{r_i}(D+D-)^{m_i} u^{j,n}`.
//! The backward variant evaluates `F` at `(t_{n+1}, u^{n+1})` and uses the
//! time reflection of the same expansion, anchored at `n+1`.

use serde::{Deserialize, Serialize};

use crate::newton::NewtonConfig;
use crate::problem::OdeProblem;
use crate::scalar::Scalar;
use crate::scheme::{Family, SchemeSpec, StageRule};
use crate::stage::{run_rule, solve_staged, DcError, GridRange};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EulerVariant {
    Forward,
    Backward,
}

impl EulerVariant {
    fn is_backward(self) -> bool {
        self == EulerVariant::Backward
    }
}

/// Stage `j+1` of the Euler hierarchy over `range`: the plain Euler rule for
/// `j = 0`, otherwise a correction of the order-`j` trajectory `lower`.
pub fn euler_stage_run<S: Scalar>(
    problem: &OdeProblem<S>,
    lower: Option<&Trajectory<S>>,
    j: u32,
    variant: EulerVariant,
    k: f64,
    range: GridRange,
    newton: &NewtonConfig,
) -> Result<Trajectory<S>, DcError> {
    let rule = if j == 0 {
        StageRule::euler_base(variant.is_backward())
    } else {
        let lower = lower.ok_or(DcError::StageOrderMismatch { expected: j, got: 0 })?;
        if lower.stage_order() != j {
            return Err(DcError::StageOrderMismatch {
                expected: j,
                got: lower.stage_order(),
            });
        }
        StageRule::euler_correction(j, variant.is_backward())
    };
    run_rule(problem, &rule, j as usize, lower, k, range, newton)
}

/// Full Euler deferred-correction solve; returns the final stage on `[0, N]`.
pub fn euler_dc_solve<S: Scalar>(
    problem: &OdeProblem<S>,
    spec: &SchemeSpec,
    k: f64,
    newton: &NewtonConfig,
) -> Result<Trajectory<S>, DcError> {
    if spec.family() == Family::Trapezoid {
        return Err(DcError::WrongFamily {
            operation: "euler_dc_solve",
            expected: "Euler",
            got: spec.family(),
        });
    }
    solve_staged(problem, spec, k, newton)
}
