//! One step of one stage: the relation shared by the staged solvers and the
//! streaming marcher, so both produce bit-identical trajectories.

use thiserror::Error;

use crate::newton::{NewtonConfig, NewtonError, NewtonReport, NewtonWorkspace};
use crate::operators::{GridSeq, OperatorError};
use crate::problem::{OdeProblem, ProblemError};
use crate::scalar::{all_finite, Scalar};
use crate::scheme::{SchemeError, SchemeSpec, StageKind, StageRule, Stencil};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DcError {
    #[error("Newton failed at stage {stage}, step {index} -> {target} (t = {time}): {report:?}")]
    NewtonFailure {
        stage: usize,
        index: i64,
        target: i64,
        time: f64,
        report: NewtonReport,
    },
    #[error("non-finite state at stage {stage}, index {index} (t = {time})")]
    NonFinite { stage: usize, index: i64, time: f64 },
    #[error("stage {stage} needs lower-stage index {index}, which is not available")]
    GhostCoverage { stage: usize, index: i64 },
    #[error("lower trajectory has order {got}, stage needs {expected}")]
    StageOrderMismatch { expected: u32, got: u32 },
    #[error("range [{first}, {last}] must contain 0")]
    BadRange { first: i64, last: i64 },
    #[error("{operation} needs a {expected} scheme, got {got}")]
    WrongFamily {
        operation: &'static str,
        expected: &'static str,
        got: crate::scheme::Family,
    },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Newton(#[from] NewtonError),
}

/// Read access to lower-stage states by grid index.
pub(crate) trait StateSource<S> {
    fn state_at(&self, index: i64) -> Option<&[S]>;
}

impl<S: Scalar> StateSource<S> for GridSeq<S> {
    fn state_at(&self, index: i64) -> Option<&[S]> {
        self.get(index).ok()
    }
}

/// Placeholder source for stages without a lower trajectory.
pub(crate) struct NoLower;

impl<S> StateSource<S> for NoLower {
    fn state_at(&self, _index: i64) -> Option<&[S]> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    /// Known `u^n`, unknown `u^{n+1}`.
    Forward,
    /// Known `u^{n+1}`, unknown `u^n` (ghost values left of the origin).
    Backward,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub implicit_solves: u64,
    pub newton_iterations: u64,
    pub max_newton_iterations: usize,
}

impl StepStats {
    pub fn merge(&mut self, other: &StepStats) {
        self.implicit_solves += other.implicit_solves;
        self.newton_iterations += other.newton_iterations;
        self.max_newton_iterations = self.max_newton_iterations.max(other.max_newton_iterations);
    }
}

pub(crate) struct Stepper<S: Scalar> {
    problem: OdeProblem<S>,
    k: f64,
    newton: NewtonConfig,
    ws: NewtonWorkspace<S>,
    increment: Vec<S>,
    average: Vec<S>,
    arg: Vec<S>,
    jarg: Vec<S>,
    fval: Vec<S>,
    jf: Vec<S>,
    pub stats: StepStats,
}

impl<S: Scalar> Stepper<S> {
    pub fn new(problem: &OdeProblem<S>, k: f64, newton: NewtonConfig) -> Result<Self, DcError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(ProblemError::BadStep(k).into());
        }
        newton.validate()?;
        let d = problem.dim();
        Ok(Self {
            problem: problem.clone(),
            k,
            newton,
            ws: NewtonWorkspace::new(d),
            increment: vec![S::zero(); d],
            average: vec![S::zero(); d],
            arg: vec![S::zero(); d],
            jarg: vec![S::zero(); d],
            fval: vec![S::zero(); d],
            jf: vec![S::zero(); d * d],
            stats: StepStats::default(),
        })
    }

    pub(crate) fn combine<L: StateSource<S>>(
        stencil: &Stencil,
        lower: &L,
        n: i64,
        stage: usize,
        out: &mut [S],
    ) -> Result<(), DcError> {
        for o in out.iter_mut() {
            *o = S::zero();
        }
        for &(offset, w) in &stencil.taps {
            let index = n + offset;
            let u = lower
                .state_at(index)
                .ok_or(DcError::GhostCoverage { stage, index })?;
            let w = S::from_real(w);
            for (o, &x) in out.iter_mut().zip(u) {
                *o += w * x;
            }
        }
        Ok(())
    }

    /// Solves the stage relation on the pair `(n, n+1)`, writing the unknown
    /// end into `out`.
    #[allow(clippy::too_many_arguments)]
    pub fn step<L: StateSource<S>>(
        &mut self,
        rule: &StageRule,
        stage: usize,
        n: i64,
        dir: Direction,
        known: &[S],
        lower: &L,
        out: &mut [S],
    ) -> Result<(), DcError> {
        let k = self.k;
        let d = known.len();
        Self::combine(&rule.increment, lower, n, stage, &mut self.increment)?;
        Self::combine(&rule.average, lower, n, stage, &mut self.average)?;

        let target = match dir {
            Direction::Forward => n + 1,
            Direction::Backward => n,
        };
        // sign of the increment as it appears in "unknown = known ± (...)"
        let sgn = match dir {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        };
        let ks = S::from_real(sgn * k);
        let s = S::from_real(sgn);

        let explicit_at = match (rule.kind, dir) {
            (StageKind::EulerForward, Direction::Forward) => Some(n as f64 * k),
            (StageKind::EulerBackward, Direction::Backward) => Some((n + 1) as f64 * k),
            _ => None,
        };

        if let Some(t) = explicit_at {
            self.problem.rhs(t, known, &mut self.fval);
            for i in 0..d {
                out[i] = known[i] + s * self.increment[i] + ks * self.fval[i];
            }
        } else {
            out.copy_from_slice(known);
            let problem = &self.problem;
            let increment = &self.increment;
            let average = &self.average;
            let arg = &mut self.arg;
            let fval = &mut self.fval;
            let jf = &mut self.jf;
            let kind = rule.kind;
            let (t, half) = match kind {
                StageKind::Trapezoid => ((n as f64 + 0.5) * k, true),
                StageKind::EulerForward => (n as f64 * k, false),
                StageKind::EulerBackward => ((n + 1) as f64 * k, false),
            };
            let half_s = S::from_real(0.5);

            let residual = |v: &[S], r: &mut [S]| {
                let arg_ref: &[S] = if half {
                    for i in 0..d {
                        arg[i] = half_s * (v[i] + known[i]) - average[i];
                    }
                    arg
                } else {
                    v
                };
                problem.rhs(t, arg_ref, fval);
                for i in 0..d {
                    r[i] = v[i] - known[i] - s * increment[i] - ks * fval[i];
                }
            };

            let report = if problem.has_jacobian() {
                // separate scratch, since `arg` is borrowed by the residual
                let targ = &mut self.jarg;
                let jacobian = |v: &[S], j: &mut [S]| {
                    if half {
                        for i in 0..d {
                            targ[i] = half_s * (v[i] + known[i]) - average[i];
                        }
                        problem.jacobian(t, targ, jf);
                    } else {
                        problem.jacobian(t, v, jf);
                    }
                    let scale = if half { ks * half_s } else { ks };
                    for r in 0..d {
                        for c in 0..d {
                            let id = if r == c { S::one() } else { S::zero() };
                            j[r * d + c] = id - scale * jf[r * d + c];
                        }
                    }
                };
                self.ws.solve(residual, Some(jacobian), out, &self.newton)
            } else {
                self.ws
                    .solve(residual, None::<fn(&[S], &mut [S])>, out, &self.newton)
            }
            .map_err(|e| match e {
                NewtonError::NonFinite { .. } => DcError::NonFinite {
                    stage,
                    index: target,
                    time: target as f64 * k,
                },
                other => DcError::Newton(other),
            })?;

            self.stats.implicit_solves += 1;
            self.stats.newton_iterations += report.iterations as u64;
            self.stats.max_newton_iterations = self.stats.max_newton_iterations.max(report.iterations);
            if !report.converged {
                return Err(DcError::NewtonFailure {
                    stage,
                    index: n,
                    target,
                    time: target as f64 * k,
                    report,
                });
            }
        }

        if !all_finite(out) {
            return Err(DcError::NonFinite {
                stage,
                index: target,
                time: target as f64 * k,
            });
        }
        Ok(())
    }
}

/// Runs one stage over `first ..= last` (which must contain 0), marching
/// forward from `u0` for positive indices and backward for negative ones.
pub(crate) fn run_stage<S: Scalar, L: StateSource<S>>(
    stepper: &mut Stepper<S>,
    rule: &StageRule,
    stage: usize,
    u0: &[S],
    lower: &L,
    first: i64,
    last: i64,
) -> Result<GridSeq<S>, DcError> {
    if first > 0 || last < 0 {
        return Err(DcError::BadRange { first, last });
    }
    let d = u0.len();
    let len = (last - first + 1) as usize;
    let mut values = GridSeq::from_fn(d, stepper.k, first, last, |_| vec![S::zero(); d])?;
    debug_assert_eq!(values.len(), len);
    values.get_mut(0)?.copy_from_slice(u0);
    let mut out = vec![S::zero(); d];
    let mut known = u0.to_vec();
    for n in 0..last {
        stepper.step(rule, stage, n, Direction::Forward, &known, lower, &mut out)?;
        values.get_mut(n + 1)?.copy_from_slice(&out);
        known.copy_from_slice(&out);
    }
    known.copy_from_slice(u0);
    for n in (first..0).rev() {
        stepper.step(rule, stage, n, Direction::Backward, &known, lower, &mut out)?;
        values.get_mut(n)?.copy_from_slice(&out);
        known.copy_from_slice(&out);
    }
    Ok(values)
}

/// Index range `-ghost_left ..= n_steps + ghost_right` of one stage run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridRange {
    pub n_steps: i64,
    pub ghost_left: i64,
    pub ghost_right: i64,
}

impl GridRange {
    pub fn new(n_steps: i64, ghost_left: i64, ghost_right: i64) -> Self {
        Self {
            n_steps,
            ghost_left,
            ghost_right,
        }
    }

    /// `[0, n_steps]` without ghosts.
    pub fn plain(n_steps: i64) -> Self {
        Self::new(n_steps, 0, 0)
    }

    pub fn first(&self) -> i64 {
        -self.ghost_left
    }

    pub fn last(&self) -> i64 {
        self.n_steps + self.ghost_right
    }

    fn validate(&self) -> Result<(), DcError> {
        if self.n_steps < 0 || self.ghost_left < 0 || self.ghost_right < 0 {
            return Err(DcError::BadRange {
                first: self.first(),
                last: self.last(),
            });
        }
        Ok(())
    }
}

/// Runs a single stage rule over `range`, checking that `lower` covers every
/// stencil the stage reads.
pub(crate) fn run_rule<S: Scalar>(
    problem: &OdeProblem<S>,
    rule: &StageRule,
    stage: usize,
    lower: Option<&Trajectory<S>>,
    k: f64,
    range: GridRange,
    newton: &NewtonConfig,
) -> Result<Trajectory<S>, DcError> {
    range.validate()?;
    let mut stepper = Stepper::new(problem, k, *newton)?;
    let states = match lower {
        Some(lower) if rule.has_lower() => {
            if (lower.step() - k).abs() > 1e-12 * k {
                return Err(DcError::GridMismatch(format!(
                    "lower trajectory step {} differs from {}",
                    lower.step(),
                    k
                )));
            }
            let need_first = range.first() - rule.reach_left;
            let need_last = range.last() + rule.reach_right;
            let have = lower.states();
            if have.first_index() > need_first {
                return Err(DcError::GhostCoverage { stage, index: need_first });
            }
            if have.last_index() < need_last {
                return Err(DcError::GhostCoverage { stage, index: need_last });
            }
            run_stage(&mut stepper, rule, stage, problem.u0(), have, range.first(), range.last())?
        }
        _ => run_stage(&mut stepper, rule, stage, problem.u0(), &NoLower, range.first(), range.last())?,
    };
    Ok(Trajectory::from_parts(states, range.n_steps, rule.order))
}

/// Computes every stage of `spec` over its whole inflated range, one
/// trajectory after the other, and returns the final stage on `[0, N]`.
pub(crate) fn solve_staged<S: Scalar>(
    problem: &OdeProblem<S>,
    spec: &SchemeSpec,
    k: f64,
    newton: &NewtonConfig,
) -> Result<Trajectory<S>, DcError> {
    let n_steps = problem.n_steps(k)?;
    let inflation = spec.inflation();
    let mut lower: Option<Trajectory<S>> = None;
    for (stage, rule) in spec.stages().iter().enumerate() {
        let (left, right) = inflation[stage];
        let range = GridRange::new(n_steps, left, right);
        let next = run_rule(problem, rule, stage, lower.as_ref(), k, range, newton)?;
        lower = Some(next);
    }
    Ok(lower.expect("a scheme has at least one stage").without_ghosts())
}
