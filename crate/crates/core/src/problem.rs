//! Initial value problems `u' = F(t, u)`, `u(0) = u0` on `[0, T]`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::{all_finite, Scalar};

/// Right-hand side `F(t, u)`, written into the output slice.
pub type RhsFn<S> = dyn Fn(f64, &[S], &mut [S]) + Send + Sync;

/// Jacobian `∂F/∂u (t, u)`, written row-major into a `dim * dim` slice.
pub type JacobianFn<S> = dyn Fn(f64, &[S], &mut [S]) + Send + Sync;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("final time must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("problem dimension must be positive")]
    EmptyState,
    #[error("F(0, u0) is not finite")]
    NonFiniteInitialSlope,
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
}

#[derive(Clone)]
pub struct OdeProblem<S: Scalar = f64> {
    name: String,
    rhs: Arc<RhsFn<S>>,
    jacobian: Option<Arc<JacobianFn<S>>>,
    u0: Vec<S>,
    t_end: f64,
}

impl<S: Scalar> fmt::Debug for OdeProblem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeProblem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("u0", &self.u0)
            .field("t_end", &self.t_end)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl<S: Scalar> OdeProblem<S> {
    pub fn new<F>(name: impl Into<String>, u0: Vec<S>, t_end: f64, rhs: F) -> Result<Self, ProblemError>
    where
        F: Fn(f64, &[S], &mut [S]) + Send + Sync + 'static,
    {
        if u0.is_empty() {
            return Err(ProblemError::EmptyState);
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(ProblemError::BadHorizon(t_end));
        }
        let problem = Self {
            name: name.into(),
            rhs: Arc::new(rhs),
            jacobian: None,
            u0,
            t_end,
        };
        let mut f0 = vec![S::zero(); problem.dim()];
        problem.rhs(0.0, &problem.u0, &mut f0);
        if !all_finite(&f0) {
            return Err(ProblemError::NonFiniteInitialSlope);
        }
        Ok(problem)
    }

    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(f64, &[S], &mut [S]) + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    /// Drops the analytic Jacobian so that Newton falls back to finite differences.
    pub fn without_jacobian(mut self) -> Self {
        self.jacobian = None;
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Result<Self, ProblemError> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(ProblemError::BadHorizon(t_end));
        }
        self.t_end = t_end;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.u0.len()
    }

    pub fn u0(&self) -> &[S] {
        &self.u0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    #[inline]
    pub fn rhs(&self, t: f64, u: &[S], out: &mut [S]) {
        (self.rhs)(t, u, out)
    }

    /// Writes the analytic Jacobian; returns `false` when none was supplied.
    #[inline]
    pub fn jacobian(&self, t: f64, u: &[S], out: &mut [S]) -> bool {
        match &self.jacobian {
            Some(j) => {
                j(t, u, out);
                true
            }
            None => false,
        }
    }

    /// Number of steps of size `k` covering `[0, T]`: `T / k` when that is an
    /// integer up to rounding, its ceiling otherwise.
    pub fn n_steps(&self, k: f64) -> Result<i64, ProblemError> {
        steps_for_horizon(self.t_end, k)
    }
}

pub fn steps_for_horizon(t_end: f64, k: f64) -> Result<i64, ProblemError> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(ProblemError::BadStep(k));
    }
    let ratio = t_end / k;
    let nearest = ratio.round();
    let n = if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    };
    Ok((n as i64).max(1))
}
