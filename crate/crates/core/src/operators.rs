//! Difference and averaging operators on uniformly gridded sequences.
//!
//! All composite stencils are evaluated through their binomial closed forms:
//!
//! ```text
//! (D+D-)^m s[n]   = k^{-2m}   Σ_{i=0}^{2m}   (-1)^i C(2m, i)   s[n+m-i]
//! D-(D+D-)^m s[n] = k^{-2m-1} Σ_{i=0}^{2m+1} (-1)^i C(2m+1, i) s[n+m-i]
//! ```
//!
//! Indexing outside the stored range is an error; nothing is ever padded.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("index {index} outside stored range [{first}, {last}]")]
    OutOfRange { index: i64, first: i64, last: i64 },
    #[error("grid step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("state has dimension {got}, sequence holds dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// A sequence of state vectors on the uniform grid `t_n = n k`, stored for the
/// contiguous index range `[base_index, base_index + len - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSeq<S = f64> {
    values: Vec<S>,
    dim: usize,
    step: f64,
    base_index: i64,
}

impl<S: Scalar> GridSeq<S> {
    pub fn new(dim: usize, step: f64, base_index: i64) -> Result<Self, OperatorError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(OperatorError::BadStep(step));
        }
        Ok(Self {
            values: Vec::new(),
            dim,
            step,
            base_index,
        })
    }

    /// Samples `f(n)` for every `n` in `first..=last`.
    pub fn from_fn<F>(dim: usize, step: f64, first: i64, last: i64, mut f: F) -> Result<Self, OperatorError>
    where
        F: FnMut(i64) -> Vec<S>,
    {
        let mut seq = Self::new(dim, step, first)?;
        for n in first..=last {
            seq.push(&f(n))?;
        }
        Ok(seq)
    }

    /// Scalar sequence sampled at the grid times `n k`.
    pub fn from_time_fn<F>(step: f64, first: i64, last: i64, f: F) -> Result<Self, OperatorError>
    where
        F: Fn(f64) -> S,
    {
        Self::from_fn(1, step, first, last, |n| vec![f(n as f64 * step)])
    }

    pub fn push(&mut self, state: &[S]) -> Result<(), OperatorError> {
        if state.len() != self.dim {
            return Err(OperatorError::DimensionMismatch {
                expected: self.dim,
                got: state.len(),
            });
        }
        self.values.extend_from_slice(state);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn first_index(&self) -> i64 {
        self.base_index
    }

    pub fn last_index(&self) -> i64 {
        self.base_index + self.len() as i64 - 1
    }

    pub fn contains(&self, index: i64) -> bool {
        index >= self.first_index() && index <= self.last_index()
    }

    pub fn get(&self, index: i64) -> Result<&[S], OperatorError> {
        if !self.contains(index) {
            return Err(OperatorError::OutOfRange {
                index,
                first: self.first_index(),
                last: self.last_index(),
            });
        }
        let start = (index - self.base_index) as usize * self.dim;
        Ok(&self.values[start..start + self.dim])
    }

    pub(crate) fn get_mut(&mut self, index: i64) -> Result<&mut [S], OperatorError> {
        if !self.contains(index) {
            return Err(OperatorError::OutOfRange {
                index,
                first: self.first_index(),
                last: self.last_index(),
            });
        }
        let start = (index - self.base_index) as usize * self.dim;
        Ok(&mut self.values[start..start + self.dim])
    }

    /// Copy of the sub-sequence `first..=last`.
    pub fn restrict(&self, first: i64, last: i64) -> Result<Self, OperatorError> {
        self.get(first)?;
        self.get(last)?;
        let start = (first - self.base_index) as usize * self.dim;
        let end = (last - self.base_index + 1) as usize * self.dim;
        Ok(Self {
            values: self.values[start..end].to_vec(),
            dim: self.dim,
            step: self.step,
            base_index: first,
        })
    }

    /// Raw storage, ordered by index then component.
    pub fn as_flat(&self) -> &[S] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &[S])> + '_ {
        let base = self.base_index;
        let dim = self.dim.max(1);
        self.values
            .chunks(dim)
            .enumerate()
            .map(move |(i, chunk)| (base + i as i64, chunk))
    }

    fn stencil(&self, top: i64, weights: &[f64], scale: f64) -> Result<Vec<S>, OperatorError> {
        // weights[i] multiplies s[top - i]
        let bottom = top - weights.len() as i64 + 1;
        self.get(bottom)?;
        self.get(top)?;
        let mut out = vec![S::zero(); self.dim];
        for (i, &w) in weights.iter().enumerate() {
            let w = S::from_real(w);
            let v = self.get(top - i as i64)?;
            for (o, &x) in out.iter_mut().zip(v) {
                *o += w * x;
            }
        }
        let scale = S::from_real(scale);
        for o in out.iter_mut() {
            *o *= scale;
        }
        Ok(out)
    }
}

/// Binomial coefficient as a float; exact well beyond the stencil widths used here.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * f64::from(n - i) / f64::from(i + 1);
    }
    acc.round()
}

/// Signed binomial row `(-1)^i C(width, i)`, i = 0..=width.
pub fn alternating_binomials(width: u32) -> Vec<f64> {
    (0..=width)
        .map(|i| if i % 2 == 0 { binomial(width, i) } else { -binomial(width, i) })
        .collect()
}

/// `D+ s[n] = (s[n+1] - s[n]) / k`.
pub fn forward_diff<S: Scalar>(s: &GridSeq<S>, n: i64) -> Result<Vec<S>, OperatorError> {
    s.stencil(n + 1, &[1.0, -1.0], 1.0 / s.step)
}

/// `D- s[n] = (s[n] - s[n-1]) / k`.
pub fn backward_diff<S: Scalar>(s: &GridSeq<S>, n: i64) -> Result<Vec<S>, OperatorError> {
    s.stencil(n, &[1.0, -1.0], 1.0 / s.step)
}

/// `E s[n+1/2] = (s[n+1] + s[n]) / 2`.
pub fn average<S: Scalar>(s: &GridSeq<S>, n: i64) -> Result<Vec<S>, OperatorError> {
    s.stencil(n + 1, &[1.0, 1.0], 0.5)
}

/// `(D+D-)^m s[n]`, stencil `n-m ..= n+m`.
pub fn composite_power<S: Scalar>(s: &GridSeq<S>, n: i64, m: u32) -> Result<Vec<S>, OperatorError> {
    let scale = s.step.powi(-2 * m as i32);
    s.stencil(n + m as i64, &alternating_binomials(2 * m), scale)
}

/// `D-(D+D-)^m s[n]`, stencil `n-m-1 ..= n+m`.
pub fn odd_composite<S: Scalar>(s: &GridSeq<S>, n: i64, m: u32) -> Result<Vec<S>, OperatorError> {
    let scale = s.step.powi(-(2 * m as i32 + 1));
    s.stencil(n + m as i64, &alternating_binomials(2 * m + 1), scale)
}

/// `D(D+D-)^m` evaluated at the half-integer point `n + 1/2`, stencil
/// `n-m ..= n+1+m`. This is `[(D+D-)^m s[n+1] - (D+D-)^m s[n]] / k`, which in
/// closed form is the odd composite anchored at `n + 1`.
pub fn midpoint_centered_diff<S: Scalar>(s: &GridSeq<S>, n: i64, m: u32) -> Result<Vec<S>, OperatorError> {
    odd_composite(s, n + 1, m)
}
