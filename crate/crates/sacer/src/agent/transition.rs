//! Stored transitions and the bounded first-in-first-out replay buffer.

use super::AgentError;
use rand::RngExt;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// One stored step. `r1` and `r4` are computed online during the episode;
/// `total` holds the recombined reward after the episode-replay pass.
/// `v_next` / `v_other_next` carry the raw next-step velocities the velocity
/// term needs at finalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: [f64; 8],
    pub action: [f64; 2],
    pub r1: f64,
    pub r4: f64,
    pub total: f64,
    pub next_state: [f64; 8],
    /// True only on the last transition of its episode.
    pub done: bool,
    /// True when the episode ended by the time limit rather than a terminal
    /// event; such transitions keep their bootstrap.
    pub truncated: bool,
    /// Step index within the episode.
    pub step: usize,
    pub v_next: f64,
    pub v_other_next: f64,
}

/// Bounded FIFO queue of finalized transitions. Sampling requires the
/// minimum fill.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: VecDeque<Transition>,
    capacity: usize,
    min_fill: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, min_fill: usize) -> Self {
        assert!(capacity >= 1 && min_fill >= 1);
        Self { items: VecDeque::with_capacity(capacity.min(1 << 20)), capacity, min_fill }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_ready(&self) -> bool {
        self.items.len() >= self.min_fill
    }

    /// Insert, evicting the oldest transition when full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Uniform i.i.d. indices for a mini-batch.
    pub fn sample_indices(
        &self,
        rng: &mut ChaCha20Rng,
        batch: usize,
    ) -> Result<Vec<usize>, AgentError> {
        if !self.is_ready() {
            return Err(AgentError::BufferUnderfilled {
                len: self.items.len(),
                min: self.min_fill,
            });
        }
        Ok((0..batch).map(|_| rng.random_range(0..self.items.len())).collect())
    }
}
