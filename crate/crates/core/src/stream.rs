//! Pipelined marching of a whole hierarchy with bounded memory.
//!
//! Every stage keeps only a sliding window of its states in a ring buffer.
//! Advancing the final stage pulls exactly the lower-stage values its
//! stencils read, recursively, so a run over `N` steps needs `O(stages ×
//! stencil width)` memory instead of `O(stages × N)`. Each value is produced
//! by the same step relation from the same inputs as in the staged solver,
//! so results are bit-identical.

use crate::newton::NewtonConfig;
use crate::problem::OdeProblem;
use crate::scalar::Scalar;
use crate::scheme::{SchemeSpec, StageRule};
use crate::stage::{DcError, Direction, NoLower, StateSource, StepStats, Stepper};

/// Counters gathered during one march.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MarchStats {
    pub n_steps: i64,
    /// Implicit solves and Newton iterations over all stages.
    pub steps: StepStats,
}

struct Ring<S> {
    dim: usize,
    cap: i64,
    data: Vec<S>,
    lo: i64,
    hi: i64,
}

impl<S: Scalar> Ring<S> {
    fn new(dim: usize, cap: usize, u0: &[S]) -> Self {
        let mut data = vec![S::zero(); dim * cap];
        data[..dim].copy_from_slice(u0);
        Self {
            dim,
            cap: cap as i64,
            data,
            lo: 0,
            hi: 0,
        }
    }

    fn slot(&self, index: i64) -> usize {
        index.rem_euclid(self.cap) as usize * self.dim
    }

    fn push_hi(&mut self, state: &[S]) {
        if self.hi - self.lo + 1 == self.cap {
            self.lo += 1;
        }
        self.hi += 1;
        let at = self.slot(self.hi);
        self.data[at..at + self.dim].copy_from_slice(state);
    }

    fn push_lo(&mut self, state: &[S]) -> bool {
        if self.hi - self.lo + 1 == self.cap {
            return false;
        }
        self.lo -= 1;
        let at = self.slot(self.lo);
        self.data[at..at + self.dim].copy_from_slice(state);
        true
    }
}

impl<S: Scalar> StateSource<S> for Ring<S> {
    fn state_at(&self, index: i64) -> Option<&[S]> {
        if index < self.lo || index > self.hi {
            return None;
        }
        let at = self.slot(index);
        Some(&self.data[at..at + self.dim])
    }
}

struct Engine<'a, S: Scalar> {
    rules: &'a [StageRule],
    rings: Vec<Ring<S>>,
    steppers: Vec<Stepper<S>>,
    /// Allowed index range of each stage.
    limits: Vec<(i64, i64)>,
    known: Vec<S>,
    out: Vec<S>,
}

type Sink<'s, S> = dyn FnMut(i64, &[S]) + 's;

impl<S: Scalar> Engine<'_, S> {
    fn step(&mut self, s: usize, n: i64, dir: Direction) -> Result<(), DcError> {
        let from = match dir {
            Direction::Forward => n,
            Direction::Backward => n + 1,
        };
        let (below, rest) = self.rings.split_at_mut(s);
        let ring = &mut rest[0];
        self.known
            .copy_from_slice(ring.state_at(from).expect("ring holds its own frontier"));
        let rule = &self.rules[s];
        let stepper = &mut self.steppers[s];
        match below.last() {
            Some(lower) => stepper.step(rule, s, n, dir, &self.known, lower, &mut self.out)?,
            None => stepper.step(rule, s, n, dir, &self.known, &NoLower, &mut self.out)?,
        }
        match dir {
            Direction::Forward => ring.push_hi(&self.out),
            Direction::Backward => {
                if !ring.push_lo(&self.out) {
                    return Err(DcError::GhostCoverage { stage: s, index: n });
                }
            }
        }
        Ok(())
    }

    fn ensure_lower(&mut self, s: usize, n: i64) -> Result<(), DcError> {
        if s > 0 {
            let rule = &self.rules[s];
            let (first, last) = (n - rule.reach_left, n + 1 + rule.reach_right);
            self.ensure_lo(s - 1, first)?;
            self.ensure_hi(s - 1, last, None)?;
            if self.rings[s - 1].state_at(first).is_none() {
                return Err(DcError::GhostCoverage { stage: s, index: first });
            }
        }
        Ok(())
    }

    fn ensure_hi(&mut self, s: usize, target: i64, mut sink: Option<&mut Sink<'_, S>>) -> Result<(), DcError> {
        if target > self.limits[s].1 {
            return Err(DcError::GhostCoverage { stage: s, index: target });
        }
        while self.rings[s].hi < target {
            let n = self.rings[s].hi;
            self.ensure_lower(s, n)?;
            self.step(s, n, Direction::Forward)?;
            if let Some(sink) = sink.as_mut() {
                sink(n + 1, &self.out);
            }
        }
        Ok(())
    }

    fn ensure_lo(&mut self, s: usize, target: i64) -> Result<(), DcError> {
        if target < self.limits[s].0 {
            return Err(DcError::GhostCoverage { stage: s, index: target });
        }
        while self.rings[s].lo > target {
            let n = self.rings[s].lo - 1;
            self.ensure_lower(s, n)?;
            self.step(s, n, Direction::Backward)?;
        }
        Ok(())
    }
}

/// Marches `spec` over `[0, N]` and hands every final-stage state to `sink`
/// as `(n, u^n)`, in increasing `n`, starting with `(0, u0)`.
pub fn march<S, F>(
    problem: &OdeProblem<S>,
    spec: &SchemeSpec,
    k: f64,
    newton: &NewtonConfig,
    mut sink: F,
) -> Result<MarchStats, DcError>
where
    S: Scalar,
    F: FnMut(i64, &[S]),
{
    let n_steps = problem.n_steps(k)?;
    let rules = spec.stages();
    let inflation = spec.inflation();
    let max_reach = rules
        .iter()
        .map(|r| r.reach_left.max(r.reach_right))
        .max()
        .unwrap_or(0);
    let (left0, right0) = inflation[0];
    let cap = (left0 + right0 + 2 * (max_reach + 2) + 8) as usize;
    let dim = problem.dim();
    let u0 = problem.u0();
    let mut engine = Engine {
        rules,
        rings: (0..rules.len()).map(|_| Ring::new(dim, cap, u0)).collect(),
        steppers: (0..rules.len())
            .map(|_| Stepper::new(problem, k, *newton))
            .collect::<Result<_, _>>()?,
        limits: inflation.iter().map(|&(l, r)| (-l, n_steps + r)).collect(),
        known: vec![S::zero(); dim],
        out: vec![S::zero(); dim],
    };
    sink(0, u0);
    let last = rules.len() - 1;
    engine.ensure_hi(last, n_steps, Some(&mut sink))?;
    let mut stats = MarchStats {
        n_steps,
        ..MarchStats::default()
    };
    for stepper in &engine.steppers {
        stats.steps.merge(&stepper.stats);
    }
    Ok(stats)
}
