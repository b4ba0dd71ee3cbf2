use std::collections::VecDeque;

use rand::Rng;

use crate::env::GlobalTransition;
use crate::{Error, Result};

/// FIFO replay memory of bounded capacity.
///
/// Tracks the oldest origin step among stored transitions in O(1) amortized
/// time with a monotone queue, so the replay age `n - min(origin_step)` is
/// exact without scanning the buffer.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: VecDeque<GlobalTransition>,
    min_origins: VecDeque<u64>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            entries: VecDeque::with_capacity(capacity.min(1 << 16)),
            min_origins: VecDeque::new(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Insert, evicting the oldest inserted entry when full.
    pub fn push(&mut self, transition: GlobalTransition) {
        if self.entries.len() == self.capacity {
            if let Some(evicted) = self.entries.pop_front() {
                if self.min_origins.front() == Some(&evicted.origin_step) {
                    self.min_origins.pop_front();
                }
            }
        }
        let origin = transition.origin_step;
        while self.min_origins.back().is_some_and(|&b| b > origin) {
            self.min_origins.pop_back();
        }
        self.min_origins.push_back(origin);
        self.entries.push_back(transition);
    }

    pub fn get(&self, index: usize) -> Option<&GlobalTransition> {
        self.entries.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = &GlobalTransition> {
        self.entries.iter()
    }

    pub fn oldest_origin_step(&self) -> Option<u64> {
        self.min_origins.front().copied()
    }

    /// `Delta(n) = n - min origin_step`, or `None` while empty.
    pub fn age_of_oldest(&self, n: u64) -> Option<u64> {
        self.oldest_origin_step().map(|o| n.saturating_sub(o))
    }

    /// `m` indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Vec<usize> {
        let len = self.entries.len();
        (0..m).map(|_| rng.random_range(0..len)).collect()
    }
}
