//! Absolute stability, checked by running the solvers on `u' = λu` with
//! complex arithmetic and `k = 1`, so that `λk = z`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::newton::NewtonConfig;
use crate::problem::OdeProblem;
use crate::scheme::{Family, SchemeSpec};
use crate::stage::DcError;
use crate::stream::march;

/// Distance to a pole below which a sample is skipped.
pub const POLE_EXCLUSION: f64 = 1e-9;

/// Moduli below this have left the range the step relations can resolve
/// (the Newton absolute tolerance sits at 1e-300) and count as decayed.
pub const UNDERFLOW_FLOOR: f64 = 1e-250;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("z = {z} is a pole of the {family} step relation")]
    Pole { z: Complex64, family: Family },
    #[error("need at least {min} steps, got {got}")]
    TooFewSteps { min: usize, got: usize },
    #[error("the polynomial structure check needs Re z < 0, got {0}")]
    NotLeftHalfPlane(Complex64),
    #[error(transparent)]
    Solver(#[from] DcError),
}

/// Values of `z` where one of the step relations of `family` (forward
/// marching, or backward marching for ghost values) cannot be solved.
pub fn poles(family: Family) -> &'static [f64] {
    match family {
        Family::Trapezoid => &[2.0, -2.0],
        Family::EulerForward => &[-1.0],
        Family::EulerBackward => &[1.0],
    }
}

fn near_pole(z: Complex64, family: Family) -> bool {
    poles(family)
        .iter()
        .any(|&p| (z - Complex64::new(p, 0.0)).norm() < POLE_EXCLUSION)
}

/// Newton settings for the linear test problem: one step is exact up to
/// rounding, and the states may shrink towards the underflow threshold.
pub fn linear_newton() -> NewtonConfig {
    NewtonConfig {
        abs_tol: 1e-300,
        rel_tol: 1e-10,
        max_iters: 8,
        fd_jacobian_scale: 1.0,
    }
}

fn dahlquist(z: Complex64, n_steps: usize) -> OdeProblem<Complex64> {
    OdeProblem::new(
        format!("dahlquist({z})"),
        vec![Complex64::new(1.0, 0.0)],
        n_steps as f64,
        move |_t, u: &[Complex64], f: &mut [Complex64]| f[0] = z * u[0],
    )
    .expect("u' = zu is well posed")
    .with_jacobian(move |_t, _u: &[Complex64], j: &mut [Complex64]| j[0] = z)
}

/// `u^0 ..= u^{n_steps}` of `spec` on `u' = zu`, `u(0) = 1`, `k = 1`.
pub fn amplification_sequence(z: Complex64, spec: &SchemeSpec, n_steps: usize) -> Result<Vec<Complex64>, StabilityError> {
    let min = 2 * spec.stage_count() + 4;
    if n_steps < min {
        return Err(StabilityError::TooFewSteps { min, got: n_steps });
    }
    if near_pole(z, spec.family()) {
        return Err(StabilityError::Pole { z, family: spec.family() });
    }
    let problem = dahlquist(z, n_steps);
    let mut out = Vec::with_capacity(n_steps + 1);
    march(&problem, spec, 1.0, &linear_newton(), |_, u| out.push(u[0]))?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilitySample {
    pub re: f64,
    pub im: f64,
    pub order: u32,
    pub family: Family,
    pub n_steps: usize,
    pub decayed: bool,
    pub max_modulus: f64,
    /// `|u^N| / |u^{N/2}|`.
    pub tail_ratio: f64,
}

impl StabilitySample {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Classifies a sequence: decayed when the second half shrinks and the end
/// lies below the value after the start-up transient `u^{2·stages}`, or when
/// the end has sunk below [`UNDERFLOW_FLOOR`].
pub fn classify(z: Complex64, spec: &SchemeSpec, seq: &[Complex64]) -> StabilitySample {
    let n = seq.len() - 1;
    let last = seq[n].norm();
    let mid = seq[n / 2].norm();
    let start = seq[(2 * spec.stage_count()).min(n)].norm();
    let tail_ratio = if mid == 0.0 {
        if last == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        last / mid
    };
    let max_modulus = seq.iter().fold(0.0f64, |m, u| if u.norm().is_nan() { f64::NAN } else { m.max(u.norm()) });
    StabilitySample {
        re: z.re,
        im: z.im,
        order: spec.order(),
        family: spec.family(),
        n_steps: n,
        decayed: (tail_ratio < 1.0 && last < start) || last < UNDERFLOW_FLOOR,
        max_modulus,
        tail_ratio,
    }
}

/// Result of a scan: one sample per grid point except the skipped poles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityScan {
    pub samples: Vec<StabilitySample>,
    pub skipped: Vec<(f64, f64)>,
}

impl StabilityScan {
    pub fn left_half_plane_decay_fraction(&self) -> f64 {
        let lhp: Vec<_> = self.samples.iter().filter(|s| s.re < 0.0).collect();
        if lhp.is_empty() {
            return 1.0;
        }
        lhp.iter().filter(|s| s.decayed).count() as f64 / lhp.len() as f64
    }
}

/// Samples every `z = re + i·im` of the grid, in parallel, ordered by
/// `(re index, im index)`. Runs that overflow count as not decayed.
pub fn stability_scan(spec: &SchemeSpec, re_range: &[f64], im_range: &[f64], n_steps: usize) -> Result<StabilityScan, StabilityError> {
    let min = 2 * spec.stage_count() + 4;
    if n_steps < min {
        return Err(StabilityError::TooFewSteps { min, got: n_steps });
    }
    let grid: Vec<Complex64> = re_range
        .iter()
        .flat_map(|&re| im_range.iter().map(move |&im| Complex64::new(re, im)))
        .collect();
    let results: Vec<Result<StabilitySample, (f64, f64)>> = grid
        .par_iter()
        .map(|&z| match amplification_sequence(z, spec, n_steps) {
            Ok(seq) => Ok(classify(z, spec, &seq)),
            Err(StabilityError::Pole { .. }) => Err((z.re, z.im)),
            Err(_) => Ok(StabilitySample {
                re: z.re,
                im: z.im,
                order: spec.order(),
                family: spec.family(),
                n_steps,
                decayed: false,
                max_modulus: f64::INFINITY,
                tail_ratio: f64::INFINITY,
            }),
        })
        .collect();
    let mut scan = StabilityScan {
        samples: Vec::new(),
        skipped: Vec::new(),
    };
    for r in results {
        match r {
            Ok(s) => scan.samples.push(s),
            Err(z) => scan.skipped.push(z),
        }
    }
    Ok(scan)
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Outcome of the polynomial-structure check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureCheck {
    /// Max modulus of the difference, normalised by `max |q_n|`.
    pub normalized: f64,
    /// Steps actually used (fewer than requested if `|r|^n` would underflow).
    pub n_steps: usize,
}

/// Forms `q_n = u^{2j+2,n} / r^{n-j}` with `r = (2+z)/(2-z)` and returns the
/// normalised `order`-th forward difference of `q`.
pub fn polynomial_difference(z: Complex64, j: u32, n_steps: usize, order: u32) -> Result<StructureCheck, StabilityError> {
    if z.re >= 0.0 {
        return Err(StabilityError::NotLeftHalfPlane(z));
    }
    let min = 4 * j as usize + 8;
    if n_steps < min {
        return Err(StabilityError::TooFewSteps { min, got: n_steps });
    }
    let spec = SchemeSpec::trapezoid(2 * j + 2).expect("even order");
    let r = (2.0 + z) / (2.0 - z);
    // complex division by r^n squares its modulus, so keep |r|^n above
    // e^-300 and the square clear of the underflow threshold
    let mut n_used = n_steps;
    let log_r = r.norm().ln();
    if log_r < 0.0 {
        let limit = (-300.0 / log_r).floor() as usize;
        n_used = n_used.min(limit.max(2 * spec.stage_count() + 4));
    }
    let seq = amplification_sequence(z, &spec, n_used)?;
    let mut q: Vec<Complex64> = seq
        .iter()
        .enumerate()
        .map(|(n, u)| u / r.powi(n as i32 - j as i32))
        .collect();
    let scale = q.iter().fold(0.0f64, |m, x| m.max(x.norm()));
    for _ in 0..order {
        q = q.windows(2).map(|w| w[1] - w[0]).collect();
    }
    let worst = q.iter().fold(0.0f64, |m, x| m.max(x.norm()));
    Ok(StructureCheck {
        normalized: if scale > 0.0 { worst / scale } else { 0.0 },
        n_steps: n_used,
    })
}

/// The `(j+1)`-th difference of the de-geometrised DC(2j+2) sequence, which
/// vanishes when the sequence is `r^{n-j}` times a polynomial of degree `j`.
pub fn polynomial_structure_check(z: Complex64, j: u32, n_steps: usize) -> Result<StructureCheck, StabilityError> {
    polynomial_difference(z, j, n_steps, j + 1)
}
