//! Damped Newton iteration for the per-step implicit equations.

// the dense linear algebra below reads best with explicit indices
#![allow(clippy::needless_range_loop)]

use thiserror::Error;

use crate::scalar::{all_finite, max_norm, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Absolute residual tolerance, in state units.
    pub abs_tol: f64,
    /// Residual tolerance relative to the max-norm of the iterate.
    pub rel_tol: f64,
    pub max_iters: usize,
    /// Multiplier of the finite-difference perturbation `(1 + |v_i|) sqrt(eps)`.
    pub fd_jacobian_scale: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            max_iters: 50,
            fd_jacobian_scale: 1.0,
        }
    }
}

impl NewtonConfig {
    /// Default tolerances scaled to an initial state.
    pub fn for_initial_state<S: Scalar>(u0: &[S]) -> Self {
        Self {
            abs_tol: 1e-14 * (1.0 + max_norm(u0)),
            ..Self::default()
        }
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), NewtonError> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol >= 0.0) || self.max_iters == 0 {
            return Err(NewtonError::BadConfig(*self));
        }
        Ok(())
    }

    fn tolerance(&self, scale: f64) -> f64 {
        self.abs_tol + self.rel_tol * scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub converged: bool,
    /// Why the iteration stopped early, when it did not converge.
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NewtonError {
    #[error("non-finite residual at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("invalid Newton configuration {0:?}")]
    BadConfig(NewtonConfig),
}

/// Row-major dense LU factorisation with partial pivoting, in place.
/// Returns `false` when a pivot vanishes.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub(crate) fn lu_factor<S: Scalar>(a: &mut [S], n: usize, perm: &mut [usize]) -> bool {
    for (i, p) in perm.iter_mut().enumerate() {
        *p = i;
    }
    for col in 0..n {
        let mut best = col;
        let mut best_mod = a[col * n + col].modulus();
        for row in col + 1..n {
            let m = a[row * n + col].modulus();
            if m > best_mod {
                best = row;
                best_mod = m;
            }
        }
        if !(best_mod > 0.0) || !best_mod.is_finite() {
            return false;
        }
        if best != col {
            for c in 0..n {
                a.swap(col * n + c, best * n + c);
            }
            perm.swap(col, best);
        }
        let pivot = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / pivot;
            a[row * n + col] = factor;
            for c in col + 1..n {
                let v = a[col * n + c];
                a[row * n + c] -= factor * v;
            }
        }
    }
    true
}

/// Solves `LU x = P b` for a factorisation produced by [`lu_factor`].
pub(crate) fn lu_solve<S: Scalar>(lu: &[S], n: usize, perm: &[usize], b: &[S], x: &mut [S]) {
    for i in 0..n {
        let mut acc = b[perm[i]];
        for j in 0..i {
            acc -= lu[i * n + j] * x[j];
        }
        x[i] = acc;
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= lu[i * n + j] * x[j];
        }
        x[i] = acc / lu[i * n + i];
    }
}

/// Reusable buffers for repeated solves of one dimension.
#[derive(Debug, Clone)]
pub struct NewtonWorkspace<S> {
    dim: usize,
    residual: Vec<S>,
    trial_residual: Vec<S>,
    trial: Vec<S>,
    delta: Vec<S>,
    jac: Vec<S>,
    perm: Vec<usize>,
    fd_shift: Vec<S>,
    fd_eval: Vec<S>,
}

impl<S: Scalar> NewtonWorkspace<S> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            residual: vec![S::zero(); dim],
            trial_residual: vec![S::zero(); dim],
            trial: vec![S::zero(); dim],
            delta: vec![S::zero(); dim],
            jac: vec![S::zero(); dim * dim],
            perm: vec![0; dim],
            fd_shift: vec![S::zero(); dim],
            fd_eval: vec![S::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `residual(x) = 0` starting from the contents of `x`, which is
    /// overwritten with the final iterate.
    ///
    /// `jacobian` writes the row-major Jacobian of the residual; when it is
    /// `None` a one-sided finite-difference Jacobian is used.
    pub fn solve<R, J>(
        &mut self,
        mut residual: R,
        mut jacobian: Option<J>,
        x: &mut [S],
        cfg: &NewtonConfig,
    ) -> Result<NewtonReport, NewtonError>
    where
        R: FnMut(&[S], &mut [S]),
        J: FnMut(&[S], &mut [S]),
    {
        cfg.validate()?;
        let n = self.dim;
        debug_assert_eq!(x.len(), n);

        residual(x, &mut self.residual);
        if !all_finite(&self.residual) {
            return Err(NewtonError::NonFinite { iteration: 0 });
        }
        let mut res_norm = max_norm(&self.residual);
        let mut iterations = 0;

        loop {
            if res_norm <= cfg.tolerance(max_norm(x)) {
                if iterations > 0 && res_norm > 0.0 {
                    res_norm = self.polish(&mut residual, x, cfg, res_norm);
                }
                return Ok(NewtonReport {
                    iterations,
                    final_residual_norm: res_norm,
                    converged: true,
                    diagnostic: None,
                });
            }
            if iterations >= cfg.max_iters {
                return Ok(NewtonReport {
                    iterations,
                    final_residual_norm: res_norm,
                    converged: false,
                    diagnostic: Some(format!("no convergence after {iterations} iterations")),
                });
            }

            match jacobian.as_mut() {
                Some(jac) => jac(x, &mut self.jac),
                None => self.fd_jacobian(&mut residual, x, cfg.fd_jacobian_scale),
            }
            if !lu_factor(&mut self.jac, n, &mut self.perm) {
                return Ok(NewtonReport {
                    iterations,
                    final_residual_norm: res_norm,
                    converged: false,
                    diagnostic: Some("singular Jacobian".to_string()),
                });
            }
            lu_solve(&self.jac, n, &self.perm, &self.residual, &mut self.delta);
            iterations += 1;

            // residual-halving damping
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..=10 {
                let l = S::from_real(lambda);
                for i in 0..n {
                    self.trial[i] = x[i] - l * self.delta[i];
                }
                residual(&self.trial, &mut self.trial_residual);
                if !all_finite(&self.trial_residual) {
                    if lambda == 1.0 && !all_finite(&self.trial) {
                        return Err(NewtonError::NonFinite { iteration: iterations });
                    }
                    lambda *= 0.5;
                    continue;
                }
                let trial_norm = max_norm(&self.trial_residual);
                if trial_norm < res_norm || trial_norm <= cfg.tolerance(max_norm(&self.trial)) {
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            // otherwise keep the most damped step; the iteration cap bounds the loop
            if !accepted && !all_finite(&self.trial_residual) {
                return Err(NewtonError::NonFinite { iteration: iterations });
            }
            x.copy_from_slice(&self.trial);
            std::mem::swap(&mut self.residual, &mut self.trial_residual);
            res_norm = max_norm(&self.residual);
        }
    }

    /// One extra correction with the last factorisation once the tolerance is
    /// met. Stopping at the tolerance leaves a solve error of the size of the
    /// tolerance in every step, and over millions of steps that bias builds
    /// up well above rounding. The correction is kept only if it stays
    /// within the tolerance.
    fn polish<R>(&mut self, residual: &mut R, x: &mut [S], cfg: &NewtonConfig, res_norm: f64) -> f64
    where
        R: FnMut(&[S], &mut [S]),
    {
        let n = self.dim;
        lu_solve(&self.jac, n, &self.perm, &self.residual, &mut self.delta);
        for i in 0..n {
            self.trial[i] = x[i] - self.delta[i];
        }
        residual(&self.trial, &mut self.trial_residual);
        if !all_finite(&self.trial_residual) {
            return res_norm;
        }
        let trial_norm = max_norm(&self.trial_residual);
        if trial_norm > cfg.tolerance(max_norm(&self.trial)) {
            return res_norm;
        }
        x.copy_from_slice(&self.trial);
        std::mem::swap(&mut self.residual, &mut self.trial_residual);
        trial_norm
    }

    fn fd_jacobian<R>(&mut self, residual: &mut R, x: &[S], scale: f64)
    where
        R: FnMut(&[S], &mut [S]),
    {
        let n = self.dim;
        let sqrt_eps = f64::EPSILON.sqrt();
        self.fd_shift.copy_from_slice(x);
        for col in 0..n {
            let h = scale * (1.0 + x[col].modulus()) * sqrt_eps;
            self.fd_shift[col] = x[col] + S::from_real(h);
            // the actually representable perturbation
            let h_eff = self.fd_shift[col] - x[col];
            residual(&self.fd_shift, &mut self.fd_eval);
            for row in 0..n {
                self.jac[row * n + col] = (self.fd_eval[row] - self.residual[row]) / h_eff;
            }
            self.fd_shift[col] = x[col];
        }
    }
}

/// One-shot Newton solve.
///
/// Returns the final iterate and a report; a non-converged report (for
/// example after a singular Jacobian) is not an error, a non-finite residual
/// is.
pub fn newton_solve<S, R, J>(
    residual: R,
    jacobian: Option<J>,
    guess: &[S],
    cfg: &NewtonConfig,
) -> Result<(Vec<S>, NewtonReport), NewtonError>
where
    S: Scalar,
    R: FnMut(&[S], &mut [S]),
    J: FnMut(&[S], &mut [S]),
{
    let mut x = guess.to_vec();
    let mut ws = NewtonWorkspace::new(guess.len());
    let report = ws.solve(residual, jacobian, &mut x, cfg)?;
    Ok((x, report))
}

/// Forward-difference Jacobian of `f` at `x`, row-major.
pub fn fd_jacobian<S, F>(mut f: F, x: &[S], scale: f64) -> Vec<S>
where
    S: Scalar,
    F: FnMut(&[S], &mut [S]),
{
    let n = x.len();
    let mut ws = NewtonWorkspace::new(n);
    f(x, &mut ws.residual);
    ws.fd_jacobian(&mut f, x, scale);
    ws.jac
}
