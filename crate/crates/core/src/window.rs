use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::norm::vec_norm;

/// The delayed state `x_k`: states at offsets `-tau..=0`.
///
/// Stored as a ring buffer so advancing one step is O(1) in `tau`.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryWindow {
    states: Vec<DVector<f64>>,
    /// Slot holding offset 0.
    head: usize,
    dim: usize,
}

impl HistoryWindow {
    /// Builds a window from states ordered oldest (offset `-tau`) first.
    pub fn from_states(states: Vec<DVector<f64>>) -> Result<Self> {
        let dim = match states.first() {
            Some(s) => s.len(),
            None => return Err(Error::invalid("history window needs at least one state")),
        };
        if dim == 0 {
            return Err(Error::invalid("state dimension must be positive"));
        }
        if let Some(bad) = states.iter().find(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch {
                what: "history window state",
                expected: dim,
                found: bad.len(),
            });
        }
        let head = states.len() - 1;
        Ok(Self { states, head, dim })
    }

    /// Constant initial function `phi(s) = state` for every offset.
    pub fn constant(tau: usize, state: DVector<f64>) -> Result<Self> {
        Self::from_states(vec![state; tau + 1])
    }

    pub fn zeros(tau: usize, dim: usize) -> Result<Self> {
        Self::constant(tau, DVector::zeros(dim))
    }

    pub fn tau(&self) -> usize {
        self.states.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn slot(&self, offset: isize) -> Option<usize> {
        let tau = self.tau() as isize;
        if offset > 0 || offset < -tau {
            return None;
        }
        let len = self.states.len() as isize;
        Some(((self.head as isize + offset).rem_euclid(len)) as usize)
    }

    /// State at `offset` in `-tau..=0`.
    pub fn get(&self, offset: isize) -> Option<&DVector<f64>> {
        self.slot(offset).map(|i| &self.states[i])
    }

    /// State at offset 0.
    pub fn current(&self) -> &DVector<f64> {
        &self.states[self.head]
    }

    /// State at offset `-tau`.
    pub fn delayed(&self) -> &DVector<f64> {
        let i = (self.head + 1) % self.states.len();
        &self.states[i]
    }

    /// States from offset `-tau` up to offset 0.
    pub fn iter(&self) -> impl Iterator<Item = &DVector<f64>> + '_ {
        let len = self.states.len();
        (1..=len).map(move |j| &self.states[(self.head + j) % len])
    }

    /// `max_s ||phi(s)||` over the whole window.
    pub fn window_norm(&self) -> f64 {
        self.iter().map(vec_norm).fold(0.0, f64::max)
    }

    /// `max_s ||phi(s)||` over the strictly past offsets; zero when `tau = 0`.
    pub fn past_norm(&self) -> f64 {
        self.iter()
            .take(self.tau())
            .map(vec_norm)
            .fold(0.0, f64::max)
    }

    /// Advances the window in place: drops offset `-tau`, stores `new_state` at 0.
    pub fn push(&mut self, new_state: DVector<f64>) -> Result<()> {
        if new_state.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "shifted state",
                expected: self.dim,
                found: new_state.len(),
            });
        }
        self.head = (self.head + 1) % self.states.len();
        self.states[self.head] = new_state;
        Ok(())
    }

    /// Non-mutating variant of [`push`](Self::push).
    pub fn shift(&self, new_state: DVector<f64>) -> Result<Self> {
        let mut next = self.clone();
        next.push(new_state)?;
        Ok(next)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            states: self.states.iter().map(|s| s * c).collect(),
            head: self.head,
            dim: self.dim,
        }
    }

    /// Copies the states out, oldest first.
    pub fn to_vec(&self) -> Vec<DVector<f64>> {
        self.iter().cloned().collect()
    }
}
