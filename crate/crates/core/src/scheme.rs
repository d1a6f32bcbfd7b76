//! Scheme selection and the per-stage correction stencils.
//!
//! Every stage of every hierarchy solves, for the grid pair `(n, n+1)`, one
//! relation between the unknown neighbour and the known one, corrected by
//! fixed linear combinations of the previous stage. The combinations are
//! assembled exactly from the coefficient tables and rounded once here, with
//! the powers of `k` folded in so the weights do not depend on the step:
//!
//! * trapezoid stage `j`: `k Λ = Σ_i c_{2i+1} k^{2i+1} D(D+D-)^i u^{2j}` at `n+1/2`
//!   and `Γ = Σ_i c_{2i} k^{2i} (D+D-)^i E u^{2j}` at `n+1/2`;
//! * forward Euler stage `j+1`: `k C = Σ_i a_{i+1} k^{i+1} D-^{r_i}(D+D-)^{m_i} u^{j}` at `n`;
//! * backward Euler stage `j+1`: the time reflection of the forward
//!   expansion, anchored at `n+1`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefficients::{
    euler_operator_exponents, euler_operator_stencil, generate_euler_coeffs, generate_trapezoid_coeffs, to_f64,
    Rational,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Modified trapezoidal rule and its corrections DC2, DC4, ...
    Trapezoid,
    /// Forward Euler and its corrections.
    EulerForward,
    /// Backward Euler and its corrections.
    EulerBackward,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Trapezoid => "trapezoid",
            Family::EulerForward => "euler-fwd",
            Family::EulerBackward => "euler-bwd",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trapezoid" | "trapezoid-dc" | "trap" => Ok(Family::Trapezoid),
            "euler-fwd" | "euler-forward" | "forward-euler" => Ok(Family::EulerForward),
            "euler-bwd" | "euler-backward" | "backward-euler" => Ok(Family::EulerBackward),
            other => Err(SchemeError::UnknownFamily(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("trapezoid deferred correction needs an even order >= 2, got {0}")]
    BadTrapezoidOrder(u32),
    #[error("Euler deferred correction needs an order >= 1, got {0}")]
    BadEulerOrder(u32),
    #[error("unknown scheme family '{0}'")]
    UnknownFamily(String),
}

/// Floating stencil taps as `(offset, weight)`.
pub type Taps = Vec<(i64, f64)>;

/// Which relation a stage solves on the pair `(n, n+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StageKind {
    /// `(v1 - v0)/k - Λ = F(t_{n+1/2}, (v1 + v0)/2 - Γ)`
    Trapezoid,
    /// `(v1 - v0)/k - C = F(t_n, v0)`
    EulerForward,
    /// `(v1 - v0)/k - C = F(t_{n+1}, v1)`
    EulerBackward,
}

/// Linear combination `Σ w u[n + offset]` of lower-stage states.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Stencil {
    pub taps: Vec<(i64, f64)>,
}

impl Stencil {
    fn from_exact(mut exact: Vec<(i64, Rational)>) -> Self {
        exact.sort_by_key(|(o, _)| *o);
        let mut merged: Vec<(i64, Rational)> = Vec::new();
        for (o, w) in exact {
            match merged.last_mut() {
                Some((lo, lw)) if *lo == o => *lw += w,
                _ => merged.push((o, w)),
            }
        }
        Self {
            taps: merged
                .into_iter()
                .filter(|(_, w)| !w.is_zero())
                .map(|(o, w)| (o, to_f64(&w)))
                .collect(),
        }
    }

    fn min_offset(&self) -> i64 {
        self.taps.iter().map(|t| t.0).min().unwrap_or(0)
    }

    fn max_offset(&self) -> i64 {
        self.taps.iter().map(|t| t.0).max().unwrap_or(1)
    }
}

/// Everything needed to advance one stage across one grid pair.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct StageRule {
    pub kind: StageKind,
    /// Order of accuracy of the trajectory this stage produces.
    pub order: u32,
    /// `k Λ` (trapezoid) or `k C` (Euler), added to the step increment.
    pub increment: Stencil,
    /// `Γ`, subtracted from the averaged state (trapezoid only).
    pub average: Stencil,
    /// Lower-stage states `n - reach_left ..= n + 1 + reach_right` are read
    /// for the pair `(n, n+1)`.
    pub reach_left: i64,
    pub reach_right: i64,
}

impl StageRule {
    fn with_stencils(kind: StageKind, order: u32, increment: Stencil, average: Stencil) -> Self {
        let lowest = increment.min_offset().min(average.min_offset());
        let highest = increment.max_offset().max(average.max_offset());
        Self {
            kind,
            order,
            increment,
            average,
            reach_left: (-lowest).max(0),
            reach_right: (highest - 1).max(0),
        }
    }

    pub fn has_lower(&self) -> bool {
        !self.increment.taps.is_empty() || !self.average.taps.is_empty()
    }

    /// Modified trapezoidal rule (DC2).
    pub fn trapezoid_base() -> Self {
        Self::with_stencils(StageKind::Trapezoid, 2, Stencil::default(), Stencil::default())
    }

    /// Stage DC(2j+2) built on a DC(2j) trajectory.
    pub fn trapezoid_correction(j: u32) -> Self {
        assert!(j >= 1);
        let coeffs = generate_trapezoid_coeffs(j as usize);
        let mut inc = Vec::new();
        let mut avg = Vec::new();
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        for i in 1..=j {
            // k^{2i+1} D(D+D-)^i at n+1/2 = Σ_l (-1)^l C(2i+1, l) u[n+1+i-l]
            let c_odd = coeffs.c(2 * i as usize + 1);
            for (l, b) in signed_binomials(2 * i + 1) {
                inc.push((1 + i as i64 - l as i64, c_odd * b));
            }
            // k^{2i} (D+D-)^i E at n+1/2 = ½ Σ_l (-1)^l C(2i, l) (u[n+1+i-l] + u[n+i-l])
            let c_even = coeffs.c(2 * i as usize) * &half;
            for (l, b) in signed_binomials(2 * i) {
                avg.push((1 + i as i64 - l as i64, &c_even * &b));
                avg.push((i as i64 - l as i64, &c_even * &b));
            }
        }
        Self::with_stencils(
            StageKind::Trapezoid,
            2 * j + 2,
            Stencil::from_exact(inc),
            Stencil::from_exact(avg),
        )
    }

    /// First-order forward or backward Euler.
    pub fn euler_base(backward: bool) -> Self {
        let kind = if backward {
            StageKind::EulerBackward
        } else {
            StageKind::EulerForward
        };
        Self::with_stencils(kind, 1, Stencil::default(), Stencil::default())
    }

    /// Stage of order `j+1` built on an order-`j` trajectory.
    pub fn euler_correction(j: u32, backward: bool) -> Self {
        assert!(j >= 1);
        let coeffs = generate_euler_coeffs(j as usize + 1);
        let mut inc = Vec::new();
        for i in 1..=j {
            let a = coeffs.a(i as usize + 1);
            let (r, _) = euler_operator_exponents(i);
            // anchor and sign of the (reflected) operator
            let (shift, sign) = match (backward, r) {
                (false, _) => (0, 1),
                (true, 0) => (1, -1),
                (true, _) => (2, 1),
            };
            for (o, w) in euler_operator_stencil(i) {
                let w = a * Rational::from_integer(w * sign);
                inc.push((o + shift, w));
            }
        }
        let kind = if backward {
            StageKind::EulerBackward
        } else {
            StageKind::EulerForward
        };
        Self::with_stencils(kind, j + 1, Stencil::from_exact(inc), Stencil::default())
    }
}

fn signed_binomials(width: u32) -> impl Iterator<Item = (u32, Rational)> {
    let mut b = BigInt::one();
    (0..=width).map(move |l| {
        let cur = b.clone();
        b = &b * (width - l) / (l + 1);
        let r = Rational::from_integer(cur);
        (l, if l % 2 == 0 { r } else { -r })
    })
}

/// A scheme family at a target order, with its stage rules materialised.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSpec {
    family: Family,
    order: u32,
    stages: Vec<StageRule>,
}

impl SchemeSpec {
    pub fn new(family: Family, order: u32) -> Result<Self, SchemeError> {
        match family {
            Family::Trapezoid => Self::trapezoid(order),
            Family::EulerForward => Self::euler(order, false),
            Family::EulerBackward => Self::euler(order, true),
        }
    }

    /// DC(order), `order` even.
    pub fn trapezoid(order: u32) -> Result<Self, SchemeError> {
        if order < 2 || !order.is_multiple_of(2) {
            return Err(SchemeError::BadTrapezoidOrder(order));
        }
        let mut stages = vec![StageRule::trapezoid_base()];
        stages.extend((1..order / 2).map(StageRule::trapezoid_correction));
        Ok(Self {
            family: Family::Trapezoid,
            order,
            stages,
        })
    }

    pub fn euler_forward(order: u32) -> Result<Self, SchemeError> {
        Self::euler(order, false)
    }

    pub fn euler_backward(order: u32) -> Result<Self, SchemeError> {
        Self::euler(order, true)
    }

    fn euler(order: u32, backward: bool) -> Result<Self, SchemeError> {
        if order < 1 {
            return Err(SchemeError::BadEulerOrder(order));
        }
        let mut stages = vec![StageRule::euler_base(backward)];
        stages.extend((1..order).map(|j| StageRule::euler_correction(j, backward)));
        Ok(Self {
            family: if backward {
                Family::EulerBackward
            } else {
                Family::EulerForward
            },
            order,
            stages,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Number of trajectories computed (base scheme included).
    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub(crate) fn stages(&self) -> &[StageRule] {
        &self.stages
    }

    /// Left and right index inflation of each stage's range, so that every
    /// stencil of the stage above stays inside it. The last stage is not
    /// inflated.
    pub fn inflation(&self) -> Vec<(i64, i64)> {
        let mut out = vec![(0, 0); self.stages.len()];
        for s in (0..self.stages.len().saturating_sub(1)).rev() {
            let above = &self.stages[s + 1];
            out[s] = (out[s + 1].0 + above.reach_left, out[s + 1].1 + above.reach_right);
        }
        out
    }

    /// Floating snapshot of the correction weights `(offset, weight)` of
    /// stage `stage`: increment stencil then averaging stencil.
    pub fn stage_weights(&self, stage: usize) -> (Taps, Taps) {
        let rule = &self.stages[stage];
        (rule.increment.taps.clone(), rule.average.taps.clone())
    }

    /// Short label, e.g. `DC6` or `euler-bwd3`.
    pub fn label(&self) -> String {
        match self.family {
            Family::Trapezoid => format!("DC{}", self.order),
            other => format!("{}{}", other.as_str(), self.order),
        }
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}
