//! Discrete solutions on the uniform grid, ghost indices included.

use crate::operators::{GridSeq, OperatorError};
use crate::scalar::Scalar;

/// States `u^n` for `n` in `-ghost_left ..= n_steps + ghost_right`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S: Scalar = f64> {
    states: GridSeq<S>,
    n_steps: i64,
    stage_order: u32,
}

impl<S: Scalar> Trajectory<S> {
    pub(crate) fn from_parts(states: GridSeq<S>, n_steps: i64, stage_order: u32) -> Self {
        debug_assert!(states.first_index() <= 0);
        Self {
            states,
            n_steps,
            stage_order,
        }
    }

    /// Wraps samples covering at least `[0, n_steps]`, e.g. an exact solution.
    pub fn from_samples(states: GridSeq<S>, n_steps: i64, stage_order: u32) -> Result<Self, OperatorError> {
        states.get(0)?;
        states.get(n_steps)?;
        Ok(Self::from_parts(states, n_steps, stage_order))
    }

    /// Samples `exact(t_n)` on `-ghost ..= n_steps + ghost`.
    pub fn from_exact<F>(dim: usize, step: f64, n_steps: i64, ghost: i64, exact: F) -> Result<Self, OperatorError>
    where
        F: Fn(f64) -> Vec<S>,
    {
        let states = GridSeq::from_fn(dim, step, -ghost, n_steps + ghost, |n| exact(n as f64 * step))?;
        Ok(Self::from_parts(states, n_steps, u32::MAX))
    }

    pub fn step(&self) -> f64 {
        self.states.step()
    }

    pub fn n_steps(&self) -> i64 {
        self.n_steps
    }

    pub fn dim(&self) -> usize {
        self.states.dim()
    }

    pub fn ghost_left(&self) -> i64 {
        -self.states.first_index()
    }

    pub fn ghost_right(&self) -> i64 {
        self.states.last_index() - self.n_steps
    }

    pub fn stage_order(&self) -> u32 {
        self.stage_order
    }

    pub fn time(&self, n: i64) -> f64 {
        n as f64 * self.step()
    }

    pub fn state(&self, n: i64) -> Result<&[S], OperatorError> {
        self.states.get(n)
    }

    pub fn final_state(&self) -> &[S] {
        self.states.get(self.n_steps).expect("trajectory covers its final index")
    }

    pub fn states(&self) -> &GridSeq<S> {
        &self.states
    }

    /// The same trajectory without ghost values.
    pub fn without_ghosts(&self) -> Self {
        Self {
            states: self
                .states
                .restrict(0, self.n_steps)
                .expect("trajectory covers [0, N]"),
            n_steps: self.n_steps,
            stage_order: self.stage_order,
        }
    }

    /// `(n, t_n, u^n)` for every stored index, ghosts included.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64, &[S])> + '_ {
        let k = self.step();
        self.states.iter().map(move |(n, u)| (n, n as f64 * k, u))
    }
}
