//! The six benchmark problems: a smooth oscillator and five stiff systems.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::problem::{OdeProblem, ProblemError};

/// Which error norm a problem is reported in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    /// `max_n |u_i^n - u_i(t_n)|`
    Absolute,
    /// `max_{n>=1} |u_i^n - u_i(t_n)| / |u_i(t_n)|`
    Relative,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Absolute => "absolute",
            ErrorKind::Relative => "relative",
        })
    }
}

pub type ExactFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// A benchmark problem with the metadata needed to score solutions.
#[derive(Clone)]
pub struct BenchmarkProblem {
    pub problem: OdeProblem<f64>,
    pub exact: Option<Arc<ExactFn>>,
    /// Step size that resolves the initial transient.
    pub k0: Option<f64>,
    pub error_kind: ErrorKind,
    /// Per-component magnitude annotations.
    pub magnitude_notes: Vec<String>,
}

impl fmt::Debug for BenchmarkProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BenchmarkProblem")
            .field("problem", &self.problem)
            .field("has_exact", &self.exact.is_some())
            .field("k0", &self.k0)
            .field("error_kind", &self.error_kind)
            .finish()
    }
}

impl BenchmarkProblem {
    pub fn name(&self) -> &str {
        self.problem.name()
    }

    pub fn exact_at(&self, t: f64) -> Option<Vec<f64>> {
        self.exact.as_ref().map(|e| e(t))
    }

    /// The same problem on a different horizon.
    pub fn with_t_end(mut self, t_end: f64) -> Result<Self, ProblemError> {
        self.problem = self.problem.with_t_end(t_end)?;
        Ok(self)
    }
}

/// Names accepted by [`by_name`].
pub const PROBLEM_NAMES: [&str; 6] = ["oscillator", "krogh", "robertson", "d6", "oregonator", "vdp"];

/// Looks a problem up by name; `vdp` uses its default parameters.
pub fn by_name(name: &str) -> Option<BenchmarkProblem> {
    match name {
        "oscillator" => Some(make_oscillator()),
        "krogh" => Some(make_krogh()),
        "robertson" => Some(make_robertson()),
        "d6" => Some(make_d6()),
        "oregonator" => Some(make_oregonator()),
        "vdp" => Some(make_vdp(1000.0, 3000.0)),
        _ => None,
    }
}

fn build(
    problem: Result<OdeProblem<f64>, ProblemError>,
    exact: Option<Arc<ExactFn>>,
    k0: Option<f64>,
    error_kind: ErrorKind,
    notes: &[&str],
) -> BenchmarkProblem {
    BenchmarkProblem {
        problem: problem.expect("benchmark problems are well formed"),
        exact,
        k0,
        error_kind,
        magnitude_notes: notes.iter().map(|s| s.to_string()).collect(),
    }
}

/// `u' = 2u cos t`, `u(0) = 1`, `T = 10^6`, exact solution `e^{2 sin t}`.
pub fn make_oscillator() -> BenchmarkProblem {
    let problem = OdeProblem::new("oscillator", vec![1.0], 1e6, |t, u: &[f64], f: &mut [f64]| {
        f[0] = 2.0 * u[0] * t.cos();
    })
    .map(|p| p.with_jacobian(|t, _u: &[f64], j: &mut [f64]| j[0] = 2.0 * t.cos()));
    build(
        problem,
        Some(Arc::new(|t: f64| vec![(2.0 * t.sin()).exp()])),
        None,
        ErrorKind::Absolute,
        &["u in [e^-2, e^2]"],
    )
}

/// The symmetric orthogonal matrix of the Krogh problem (`U = U^T`, `U^2 = I`).
pub const KROGH_U: [[f64; 4]; 4] = [
    [-0.5, 0.5, 0.5, 0.5],
    [0.5, -0.5, 0.5, 0.5],
    [0.5, 0.5, -0.5, 0.5],
    [0.5, 0.5, 0.5, -0.5],
];

const KROGH_CORE: [[f64; 4]; 4] = [
    [-10.0, -10.0, 0.0, 0.0],
    [10.0, -10.0, 0.0, 0.0],
    [0.0, 0.0, 1000.0, 0.0],
    [0.0, 0.0, 0.0, 0.0001],
];

fn mat_mul(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|l| a[i][l] * b[l][j]).sum();
        }
    }
    c
}

fn mat_vec(a: &[[f64; 4]; 4], x: &[f64]) -> [f64; 4] {
    let mut y = [0.0; 4];
    for i in 0..4 {
        y[i] = (0..4).map(|l| a[i][l] * x[l]).sum();
    }
    y
}

/// `B = U · core · U` of the Krogh problem.
pub fn krogh_b() -> [[f64; 4]; 4] {
    mat_mul(&mat_mul(&KROGH_U, &KROGH_CORE), &KROGH_U)
}

/// `y' = -By + U^T g(z)`, `z = Uy`, with
/// `g = (z1²/2 - z2²/2, z1 z2, z3², z3²)`, `y(0) = (0, -2, -1, -1)`, `T = 1000`.
pub fn make_krogh() -> BenchmarkProblem {
    let b = krogh_b();
    let rhs = move |_t: f64, y: &[f64], f: &mut [f64]| {
        let z = mat_vec(&KROGH_U, y);
        let g = [
            0.5 * z[0] * z[0] - 0.5 * z[1] * z[1],
            z[0] * z[1],
            z[2] * z[2],
            z[2] * z[2],
        ];
        let by = mat_vec(&b, y);
        let ug = mat_vec(&KROGH_U, &g);
        for i in 0..4 {
            f[i] = -by[i] + ug[i];
        }
    };
    let jac = move |_t: f64, y: &[f64], j: &mut [f64]| {
        let z = mat_vec(&KROGH_U, y);
        let dg = [
            [z[0], -z[1], 0.0, 0.0],
            [z[1], z[0], 0.0, 0.0],
            [0.0, 0.0, 2.0 * z[2], 0.0],
            [0.0, 0.0, 2.0 * z[2], 0.0],
        ];
        let m = mat_mul(&mat_mul(&KROGH_U, &dg), &KROGH_U);
        for r in 0..4 {
            for c in 0..4 {
                j[r * 4 + c] = -b[r][c] + m[r][c];
            }
        }
    };
    let problem = OdeProblem::new("krogh", vec![0.0, -2.0, -1.0, -1.0], 1000.0, rhs).map(|p| p.with_jacobian(jac));
    build(problem, None, Some(1e-3), ErrorKind::Absolute, &["all components O(1)"])
}

/// Robertson kinetics with rates 0.04, 1e4 and 3e7, `y(0) = (1, 0, 0)`, `T = 10^4`.
pub fn make_robertson() -> BenchmarkProblem {
    let problem = OdeProblem::new("robertson", vec![1.0, 0.0, 0.0], 1e4, |_t, y: &[f64], f: &mut [f64]| {
        let a = 0.04 * y[0];
        let b = 1e4 * y[1] * y[2];
        let c = 3e7 * y[1] * y[1];
        f[0] = -a + b;
        f[1] = a - b - c;
        f[2] = c;
    })
    .map(|p| {
        p.with_jacobian(|_t, y: &[f64], j: &mut [f64]| {
            j.copy_from_slice(&[
                -0.04,
                1e4 * y[2],
                1e4 * y[1],
                0.04,
                -1e4 * y[2] - 6e7 * y[1],
                -1e4 * y[1],
                0.0,
                6e7 * y[1],
                0.0,
            ]);
        })
    });
    build(
        problem,
        None,
        Some(1.12e-4),
        ErrorKind::Relative,
        &["y1 about 1", "y2 up to about 5.78e-5", "y3 up to about 1"],
    )
}

/// Problem D6: `y1' = -y1 + 1e8 y3 (1 - y1)`, `y2' = -10 y2 + 3e7 y3 (1 - y2)`,
/// `y3' = -y1' - y2'`, `y(0) = (1, 0, 0)`, `T = 1`.
pub fn make_d6() -> BenchmarkProblem {
    let problem = OdeProblem::new("d6", vec![1.0, 0.0, 0.0], 1.0, |_t, y: &[f64], f: &mut [f64]| {
        f[0] = -y[0] + 1e8 * y[2] * (1.0 - y[0]);
        f[1] = -10.0 * y[1] + 3e7 * y[2] * (1.0 - y[1]);
        f[2] = -f[0] - f[1];
    })
    .map(|p| {
        p.with_jacobian(|_t, y: &[f64], j: &mut [f64]| {
            let r1 = [-1.0 - 1e8 * y[2], 0.0, 1e8 * (1.0 - y[0])];
            let r2 = [0.0, -10.0 - 3e7 * y[2], 3e7 * (1.0 - y[1])];
            for c in 0..3 {
                j[c] = r1[c];
                j[3 + c] = r2[c];
                j[6 + c] = -r1[c] - r2[c];
            }
        })
    });
    build(
        problem,
        None,
        Some(3.3e-8),
        ErrorKind::Relative,
        &["y1 up to about 1", "y2 up to about 1", "y3 about 1e-8"],
    )
}

const OREGO_S: f64 = 77.27;
const OREGO_Q: f64 = 8.375e-6;
const OREGO_W: f64 = 0.161;

/// The Oregonator, `y(0) = (1, 2, 3)`, `T = 360`.
pub fn make_oregonator() -> BenchmarkProblem {
    let problem = OdeProblem::new("oregonator", vec![1.0, 2.0, 3.0], 360.0, |_t, y: &[f64], f: &mut [f64]| {
        f[0] = OREGO_S * (y[1] + y[0] * (1.0 - OREGO_Q * y[0] - y[1]));
        f[1] = (y[2] - (1.0 + y[0]) * y[1]) / OREGO_S;
        f[2] = OREGO_W * (y[0] - y[2]);
    })
    .map(|p| {
        p.with_jacobian(|_t, y: &[f64], j: &mut [f64]| {
            j.copy_from_slice(&[
                OREGO_S * (1.0 - 2.0 * OREGO_Q * y[0] - y[1]),
                OREGO_S * (1.0 - y[0]),
                0.0,
                -y[1] / OREGO_S,
                -(1.0 + y[0]) / OREGO_S,
                1.0 / OREGO_S,
                OREGO_W,
                0.0,
                -OREGO_W,
            ]);
        })
    });
    build(
        problem,
        None,
        Some(7.33e-6),
        ErrorKind::Absolute,
        &["y1 in [1, 117845.8]", "y2 in [0.003, 1768.7]", "y3 in [1.005, 31263.85]"],
    )
}

/// Van der Pol, `y1' = y2`, `y2' = mu (1 - y1²) y2 - y1`, `y(0) = (2, 0)`.
/// The defaults are `mu = 1000` and `T = 3000`.
pub fn make_vdp(mu: f64, t_end: f64) -> BenchmarkProblem {
    let problem = OdeProblem::new("vdp", vec![2.0, 0.0], t_end, move |_t, y: &[f64], f: &mut [f64]| {
        f[0] = y[1];
        f[1] = mu * (1.0 - y[0] * y[0]) * y[1] - y[0];
    })
    .map(|p| {
        p.with_jacobian(move |_t, y: &[f64], j: &mut [f64]| {
            j.copy_from_slice(&[0.0, 1.0, -2.0 * mu * y[0] * y[1] - 1.0, mu * (1.0 - y[0] * y[0])]);
        })
    });
    build(
        problem,
        None,
        Some(3.33e-4),
        ErrorKind::Absolute,
        &["y1 in [-2, 2.000073]", "y2 in [-1323.04, 1231.35] at mu = 1000"],
    )
}
