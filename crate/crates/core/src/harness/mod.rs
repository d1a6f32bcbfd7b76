//! Error norms, convergence studies and reference solutions.

mod reference;
mod report;

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::newton::NewtonConfig;
use crate::problem::steps_for_horizon;
use crate::problems::{BenchmarkProblem, ErrorKind};
use crate::scheme::SchemeSpec;
use crate::stage::DcError;
use crate::stream::{march, MarchStats};
use crate::trajectory::Trajectory;

pub use reference::{compute_reference, ReferenceMeta, ReferenceSolution};
pub use report::{format_float, write_report_csv};

/// Default number of evenly spread samples an error norm looks at.
pub const DEFAULT_SAMPLE_CAP: usize = 4_000_000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("relative error undefined: component {component} of the truth is zero at t = {time}")]
    ZeroTruth { component: usize, time: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("dimension mismatch: solution has {solution}, truth has {truth}")]
    DimensionMismatch { solution: usize, truth: usize },
    #[error("problem '{0}' has no exact solution")]
    NoExactSolution(String),
    #[error("reference file: {0}")]
    Format(String),
    #[error("reference digest mismatch: header {expected}, data {actual}")]
    Digest { expected: String, actual: String },
    #[error(transparent)]
    Solver(#[from] DcError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Per-component maximum error over the sampled grid indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorNorm {
    pub kind: ErrorKind,
    pub per_component: Vec<f64>,
    pub sample_cap: usize,
    /// Number of grid indices actually compared.
    pub samples: usize,
}

impl ErrorNorm {
    pub fn max(&self) -> f64 {
        self.per_component.iter().copied().fold(0.0, f64::max)
    }
}

/// What a numerical solution is compared against.
#[derive(Clone, Copy)]
pub enum Truth<'a> {
    Exact(&'a (dyn Fn(f64) -> Vec<f64> + Send + Sync)),
    Reference(&'a ReferenceSolution),
}

impl fmt::Debug for Truth<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Truth::Exact(_) => f.write_str("Truth::Exact"),
            Truth::Reference(r) => write!(f, "Truth::Reference({:?})", r.meta()),
        }
    }
}

/// Stride that spreads at most `cap` samples evenly over `0 ..= n_steps`.
pub fn sample_stride(n_steps: i64, cap: usize) -> i64 {
    let cap = cap.max(1) as i64;
    ((n_steps + 1) + cap - 1) / cap
}

/// Rational approximation `p/q` of `x > 0` by continued fractions.
fn rational_approx(x: f64) -> (i64, i64) {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut y = x;
    for _ in 0..40 {
        let a = y.floor();
        let ai = a as i64;
        let (h2, k2) = (ai.saturating_mul(h1).saturating_add(h0), ai.saturating_mul(k1).saturating_add(k0));
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if ((h1 as f64 / k1 as f64) - x).abs() <= 1e-12 * x || k1 > 1_000_000_000 {
            break;
        }
        let frac = y - a;
        if frac < 1e-15 {
            break;
        }
        y = 1.0 / frac;
    }
    (h1, k1)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Number of stored reference samples an off-grid value is interpolated from.
pub const INTERPOLATION_POINTS: usize = 8;

/// Lagrange interpolation of the reference at fractional sample position
/// `whole + num / den`, from the `INTERPOLATION_POINTS` samples around it.
fn interpolate_reference(r: &ReferenceSolution, whole: usize, num: i128, den: i128, out: &mut [f64]) {
    let len = r.len();
    let half = INTERPOLATION_POINTS / 2;
    let first = (whole + 1).saturating_sub(half).min(len.saturating_sub(INTERPOLATION_POINTS));
    let nodes = INTERPOLATION_POINTS.min(len);
    let x = (whole - first) as f64 + num as f64 / den as f64;
    out.iter_mut().for_each(|o| *o = 0.0);
    for i in 0..nodes {
        let mut w = 1.0;
        for j in 0..nodes {
            if j != i {
                w *= (x - j as f64) / (i as f64 - j as f64);
            }
        }
        let sample = r.sample(first + i).expect("node inside the reference");
        for (o, v) in out.iter_mut().zip(sample) {
            *o += w * v;
        }
    }
}

/// Streaming error accumulator fed with `(n, u^n)` in increasing `n`.
///
/// Against a reference, run times that fall on a stored sample are compared
/// with it directly and all others with a local polynomial interpolant of
/// the stored samples, so the sampled indices do not depend on how the two
/// grids line up.
pub struct ErrorAccumulator<'a> {
    truth: Truth<'a>,
    kind: ErrorKind,
    k: f64,
    /// Only indices that are multiples of `stride` are compared.
    stride: i64,
    /// Reference sample position of run index `n` is `n * ref_num / ref_den`.
    ref_num: i128,
    ref_den: i128,
    cap: usize,
    per_component: Vec<f64>,
    samples: usize,
    interpolated: Vec<f64>,
    /// Last run index inside the reference horizon.
    last_index: i64,
    error: Option<HarnessError>,
}

impl<'a> ErrorAccumulator<'a> {
    pub fn new(
        truth: Truth<'a>,
        kind: ErrorKind,
        k: f64,
        n_steps: i64,
        dim: usize,
        cap: usize,
    ) -> Result<Self, HarnessError> {
        let stride = sample_stride(n_steps, cap);
        let (mut ref_num, mut ref_den) = (0, 1);
        let mut last_index = i64::MAX;
        if let Truth::Reference(r) = truth {
            let meta = r.meta();
            if meta.dim != dim {
                return Err(HarnessError::DimensionMismatch {
                    solution: dim,
                    truth: meta.dim,
                });
            }
            let (p, q) = rational_approx(k / meta.k);
            let s = meta.stride;
            let g = gcd(p, s * q);
            ref_num = i128::from(p / g);
            ref_den = i128::from(s * q / g);
            // the last step of a run may overshoot the horizon by less than a step
            last_index = if p > 0 && r.len() >= 2 {
                ((r.len() as i128 - 1) * ref_den / ref_num).min(i128::from(i64::MAX)) as i64
            } else {
                -1
            };
            if last_index + 1 < n_steps {
                return Err(HarnessError::GridMismatch(format!(
                    "run over {n_steps} steps of {k} reaches past the reference, {} samples {s} steps of {} apart",
                    r.len(),
                    meta.k
                )));
            }
        }
        Ok(Self {
            truth,
            kind,
            k,
            stride,
            ref_num,
            ref_den,
            cap,
            per_component: vec![0.0; dim],
            samples: 0,
            interpolated: vec![0.0; dim],
            last_index,
            error: None,
        })
    }

    pub fn stride(&self) -> i64 {
        self.stride
    }

    pub fn push(&mut self, n: i64, state: &[f64]) {
        if self.error.is_some() || n % self.stride != 0 || n > self.last_index {
            return;
        }
        let t = n as f64 * self.k;
        let owned;
        let truth: &[f64] = match self.truth {
            Truth::Exact(f) => {
                owned = f(t);
                &owned
            }
            Truth::Reference(r) => {
                let pos = i128::from(n) * self.ref_num;
                let whole = (pos / self.ref_den) as usize;
                let rem = pos % self.ref_den;
                if rem == 0 {
                    r.sample(whole).expect("checked against the reference horizon")
                } else {
                    interpolate_reference(r, whole, rem, self.ref_den, &mut self.interpolated);
                    &self.interpolated
                }
            }
        };
        if truth.len() != state.len() {
            self.error = Some(HarnessError::DimensionMismatch {
                solution: state.len(),
                truth: truth.len(),
            });
            return;
        }
        if self.kind == ErrorKind::Relative && n == 0 {
            return;
        }
        for (i, (&u, &v)) in state.iter().zip(truth).enumerate() {
            let mut e = (u - v).abs();
            if self.kind == ErrorKind::Relative {
                if v == 0.0 {
                    self.error = Some(HarnessError::ZeroTruth { component: i, time: t });
                    return;
                }
                e /= v.abs();
            }
            // NaN compares false, so propagate it explicitly
            if e > self.per_component[i] || e.is_nan() {
                self.per_component[i] = e;
            }
        }
        self.samples += 1;
    }

    pub fn finish(self) -> Result<ErrorNorm, HarnessError> {
        if let Some(e) = self.error {
            return Err(e);
        }
        Ok(ErrorNorm {
            kind: self.kind,
            per_component: self.per_component,
            sample_cap: self.cap,
            samples: self.samples,
        })
    }
}

/// Error of a stored trajectory on `[0, N]`.
pub fn error_norm(
    traj: &Trajectory<f64>,
    truth: Truth<'_>,
    kind: ErrorKind,
    cap: usize,
) -> Result<ErrorNorm, HarnessError> {
    let mut acc = ErrorAccumulator::new(truth, kind, traj.step(), traj.n_steps(), traj.dim(), cap)?;
    for n in 0..=traj.n_steps() {
        acc.push(n, traj.state(n).map_err(DcError::from)?);
    }
    acc.finish()
}

/// Runs `spec` on `problem` with step `k` in streaming mode and measures its
/// error against `truth`.
pub fn run_error(
    problem: &BenchmarkProblem,
    spec: &SchemeSpec,
    k: f64,
    truth: Truth<'_>,
    newton: &NewtonConfig,
    cap: usize,
) -> Result<(ErrorNorm, MarchStats), HarnessError> {
    let n_steps = steps_for_horizon(problem.problem.t_end(), k).map_err(DcError::from)?;
    let mut acc = ErrorAccumulator::new(truth, problem.error_kind, k, n_steps, problem.problem.dim(), cap)?;
    let stats = march(&problem.problem, spec, k, newton, |n, u| acc.push(n, u))?;
    Ok((acc.finish()?, stats))
}

/// Least-squares slope of `y` against `x`; `None` for fewer than two points
/// or a degenerate abscissa.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let sxx: f64 = x[..n].iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Fitted convergence order of one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Order {
    /// Least-squares slope over the rows above the floor.
    Fitted(f64),
    /// Every error is zero: the scheme is exact on this problem.
    Exact,
    /// Fewer than two usable rows.
    Insufficient,
}

impl Order {
    pub fn value(&self) -> Option<f64> {
        match self {
            Order::Fitted(q) => Some(*q),
            _ => None,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Fitted(q) => write!(f, "{q:.4}"),
            Order::Exact => f.write_str("exact"),
            Order::Insufficient => f.write_str("n/a"),
        }
    }
}

/// One step size of a convergence study.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub k: f64,
    /// Per-component errors, or the failure that prevented them.
    pub errors: Result<Vec<f64>, String>,
    /// `log(e_prev / e) / log(k_prev / k)` per component; `None` on the first
    /// row or when either error is missing or zero.
    pub pairwise: Vec<Option<f64>>,
    pub samples: usize,
    pub newton_iterations: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub problem: String,
    pub scheme: String,
    pub kind: ErrorKind,
    pub rows: Vec<ConvergenceRow>,
    pub orders: Vec<Order>,
    pub error_floor: f64,
}

impl ConvergenceReport {
    /// Assembles pairwise and fitted orders from per-row results.
    pub fn from_rows(
        problem: &str,
        scheme: &str,
        kind: ErrorKind,
        dim: usize,
        mut rows: Vec<ConvergenceRow>,
        floor: f64,
    ) -> Self {
        for i in 0..rows.len() {
            rows[i].pairwise = vec![None; dim];
            if i == 0 {
                continue;
            }
            if let (Ok(prev), Ok(cur)) = (&rows[i - 1].errors, &rows[i].errors) {
                let ratio_k = (rows[i - 1].k / rows[i].k).ln();
                let pw: Vec<Option<f64>> = (0..dim)
                    .map(|c| {
                        (prev[c] > 0.0 && cur[c] > 0.0 && prev[c].is_finite() && cur[c].is_finite())
                            .then(|| (prev[c] / cur[c]).ln() / ratio_k)
                    })
                    .collect();
                rows[i].pairwise = pw;
            }
        }
        let orders = (0..dim)
            .map(|c| {
                let ok: Vec<(f64, f64)> = rows
                    .iter()
                    .filter_map(|r| r.errors.as_ref().ok().map(|e| (r.k, e[c])))
                    .collect();
                if !ok.is_empty() && ok.iter().all(|&(_, e)| e == 0.0) {
                    return Order::Exact;
                }
                let used: Vec<(f64, f64)> = ok
                    .into_iter()
                    .filter(|&(_, e)| e > floor && e.is_finite())
                    .map(|(k, e)| (k.ln(), e.ln()))
                    .collect();
                let (x, y): (Vec<f64>, Vec<f64>) = used.into_iter().unzip();
                match least_squares_slope(&x, &y) {
                    Some(q) if q.is_finite() => Order::Fitted(q),
                    _ => Order::Insufficient,
                }
            })
            .collect();
        Self {
            problem: problem.to_string(),
            scheme: scheme.to_string(),
            kind,
            rows,
            orders,
            error_floor: floor,
        }
    }

    pub fn errors(&self) -> Vec<Option<&Vec<f64>>> {
        self.rows.iter().map(|r| r.errors.as_ref().ok()).collect()
    }
}

/// Runs `spec` at every step size of `ks` (strictly decreasing), in parallel,
/// and fits the convergence order above `floor`.
pub fn convergence_study(
    problem: &BenchmarkProblem,
    spec: &SchemeSpec,
    ks: &[f64],
    truth: Truth<'_>,
    floor: f64,
    newton: &NewtonConfig,
    cap: usize,
) -> Result<ConvergenceReport, HarnessError> {
    if ks.windows(2).any(|w| w[1] >= w[0]) {
        return Err(HarnessError::GridMismatch("step sizes must be strictly decreasing".into()));
    }
    let rows: Vec<ConvergenceRow> = ks
        .par_iter()
        .map(|&k| match run_error(problem, spec, k, truth, newton, cap) {
            Ok((norm, stats)) => ConvergenceRow {
                k,
                errors: Ok(norm.per_component),
                pairwise: Vec::new(),
                samples: norm.samples,
                newton_iterations: stats.steps.newton_iterations,
            },
            Err(e) => ConvergenceRow {
                k,
                errors: Err(e.to_string()),
                pairwise: Vec::new(),
                samples: 0,
                newton_iterations: 0,
            },
        })
        .collect();
    Ok(ConvergenceReport::from_rows(
        problem.name(),
        &spec.label(),
        problem.error_kind,
        problem.problem.dim(),
        rows,
        floor,
    ))
}
