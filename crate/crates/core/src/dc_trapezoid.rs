//! The modified trapezoidal rule DC2 and its corrections DC(2j+2).
//!
//! Stage `j` solves, for every grid pair,
//! `(u^{n+1} - u^n)/k - Λ = F(t_{n+1/2}, (u^{n+1} + u^n)/2 - Γ)`
//! where `Λ` and `Γ` are central-difference corrections of the stage below.
//! Values left of the origin are produced by marching each stage backward
//! from `u0`, so the hierarchy starts itself.

use crate::harness::least_squares_slope;
use crate::newton::NewtonConfig;
use crate::problem::OdeProblem;
use crate::scalar::{max_norm, Scalar};
use crate::scheme::{Family, SchemeSpec, StageRule};
use crate::stage::{run_rule, solve_staged, DcError, GridRange, Stepper};
use crate::trajectory::Trajectory;

/// DC2: `(u^{n+1} - u^n)/k = F(t_{n+1/2}, (u^{n+1} + u^n)/2)` over `range`.
pub fn dc2_run<S: Scalar>(
    problem: &OdeProblem<S>,
    k: f64,
    range: GridRange,
    newton: &NewtonConfig,
) -> Result<Trajectory<S>, DcError> {
    run_rule(problem, &StageRule::trapezoid_base(), 0, None, k, range, newton)
}

/// The correction terms `(Λ, Γ)` that stage `j` adds on the pair `(n, n+1)`.
pub fn correction_terms<S: Scalar>(lower: &Trajectory<S>, j: u32, n: i64) -> Result<(Vec<S>, Vec<S>), DcError> {
    if j == 0 {
        return Err(DcError::StageOrderMismatch { expected: 2, got: 0 });
    }
    let rule = StageRule::trapezoid_correction(j);
    let d = lower.dim();
    let mut lambda = vec![S::zero(); d];
    let mut gamma = vec![S::zero(); d];
    let stage = j as usize;
    Stepper::<S>::combine(&rule.increment, lower.states(), n, stage, &mut lambda)?;
    Stepper::<S>::combine(&rule.average, lower.states(), n, stage, &mut gamma)?;
    // the stencil carries k Λ
    let inv_k = S::from_real(1.0 / lower.step());
    for x in &mut lambda {
        *x *= inv_k;
    }
    Ok((lambda, gamma))
}

/// Stage DC(2j+2) built on the DC(2j) trajectory `lower`, over `range`.
pub fn dc_stage_run<S: Scalar>(
    problem: &OdeProblem<S>,
    lower: &Trajectory<S>,
    j: u32,
    range: GridRange,
    newton: &NewtonConfig,
) -> Result<Trajectory<S>, DcError> {
    if j == 0 || lower.stage_order() != 2 * j {
        return Err(DcError::StageOrderMismatch {
            expected: 2 * j,
            got: lower.stage_order(),
        });
    }
    let rule = StageRule::trapezoid_correction(j);
    run_rule(problem, &rule, j as usize, Some(lower), lower.step(), range, newton)
}

/// Full DC(order) solve; returns the final stage on `[0, N]`.
pub fn dc_solve<S: Scalar>(
    problem: &OdeProblem<S>,
    spec: &SchemeSpec,
    k: f64,
    newton: &NewtonConfig,
) -> Result<Trajectory<S>, DcError> {
    if spec.family() != Family::Trapezoid {
        return Err(DcError::WrongFamily {
            operation: "dc_solve",
            expected: "trapezoid",
            got: spec.family(),
        });
    }
    solve_staged(problem, spec, k, newton)
}

/// Residuals of the deferred correction condition for one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct DccReport {
    pub step: f64,
    /// Order of the stage the residuals were measured on.
    pub order: u32,
    /// `‖D(D+D-)(u - u_ref)‖` at `n + 1/2`, for `n = 1 ..= N-2`.
    pub r1: Vec<f64>,
    /// `‖D+D-(u - u_ref)‖` at `n + 1`, for `n = 1 ..= N-2`.
    pub r2: Vec<f64>,
    /// `max(r1, r2) / k^order`, the constant of a single-step bound.
    pub bound_estimate: f64,
}

impl DccReport {
    pub fn max_r1(&self) -> f64 {
        self.r1.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_r2(&self) -> f64 {
        self.r2.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.max_r1().max(self.max_r2())
    }
}

/// Measures the deferred correction condition of `stage` against a more
/// accurate `reference` on the same grid.
pub fn dcc_residual<S: Scalar>(stage: &Trajectory<S>, reference: &Trajectory<S>) -> Result<DccReport, DcError> {
    let k = stage.step();
    if (reference.step() - k).abs() > 1e-12 * k || reference.dim() != stage.dim() {
        return Err(DcError::GridMismatch(format!(
            "stage step {k} dim {}, reference step {} dim {}",
            stage.dim(),
            reference.step(),
            reference.dim()
        )));
    }
    let n = stage.n_steps();
    if reference.states().first_index() > 0 || reference.states().last_index() < n {
        return Err(DcError::GridMismatch(format!("reference does not cover [0, {n}]")));
    }
    let d = stage.dim();
    let err = |i: i64| -> Result<Vec<S>, DcError> {
        let a = stage.state(i)?;
        let b = reference.state(i)?;
        Ok(a.iter().zip(b).map(|(&x, &y)| x - y).collect())
    };
    let mut r1 = Vec::new();
    let mut r2 = Vec::new();
    let (k2, k3) = (k * k, k * k * k);
    let mut diff = vec![S::zero(); d];
    for m in 1..=n - 2 {
        let e = [err(m - 1)?, err(m)?, err(m + 1)?, err(m + 2)?];
        let three = S::from_real(3.0);
        for i in 0..d {
            diff[i] = e[3][i] - three * e[2][i] + three * e[1][i] - e[0][i];
        }
        r1.push(max_norm(&diff) / k3);
        let two = S::from_real(2.0);
        for i in 0..d {
            diff[i] = e[3][i] - two * e[2][i] + e[1][i];
        }
        r2.push(max_norm(&diff) / k2);
    }
    let order = stage.stage_order();
    let mut report = DccReport {
        step: k,
        order,
        r1,
        r2,
        bound_estimate: 0.0,
    };
    report.bound_estimate = report.max_residual() / k.powi(order as i32);
    Ok(report)
}

/// Least-squares summary of the residuals over a sweep of step sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DccFit {
    /// Observed slope of `log max r1` against `log k`.
    pub slope_r1: f64,
    /// Observed slope of `log max r2` against `log k`.
    pub slope_r2: f64,
    /// `C` in `max residual ≈ C k^order`, fitted with the order held fixed.
    pub constant: f64,
}

pub fn dcc_sweep_fit(reports: &[DccReport]) -> Option<DccFit> {
    if reports.len() < 2 {
        return None;
    }
    let logk: Vec<f64> = reports.iter().map(|r| r.step.ln()).collect();
    let l1: Vec<f64> = reports.iter().map(|r| r.max_r1().ln()).collect();
    let l2: Vec<f64> = reports.iter().map(|r| r.max_r2().ln()).collect();
    let order = reports[0].order as f64;
    let log_c = reports
        .iter()
        .map(|r| r.max_residual().ln() - order * r.step.ln())
        .sum::<f64>()
        / reports.len() as f64;
    Some(DccFit {
        slope_r1: least_squares_slope(&logk, &l1)?,
        slope_r2: least_squares_slope(&logk, &l2)?,
        constant: log_c.exp(),
    })
}
