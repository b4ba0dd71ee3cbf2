use std::collections::{BTreeMap, BTreeSet};

use super::LocalTuple;
use crate::env::{GlobalTransition, JointAction, ParticleEnv};
use crate::Result;

/// Joins local tuples from all agents into global transitions.
///
/// Steps older than `retention` slots behind the newest seen step are
/// dropped; a step that was emitted or dropped is never emitted again.
#[derive(Debug, Clone)]
pub struct TupleAssembler {
    num_agents: usize,
    retention: u64,
    pending: BTreeMap<u64, Vec<Option<LocalTuple>>>,
    emitted: BTreeSet<u64>,
    watermark: u64,
}

impl TupleAssembler {
    pub fn new(num_agents: usize, retention: u64) -> Self {
        Self {
            num_agents,
            retention: retention.max(1),
            pending: BTreeMap::new(),
            emitted: BTreeSet::new(),
            watermark: 0,
        }
    }

    pub fn pending_steps(&self) -> usize {
        self.pending.len()
    }

    /// Add one agent's tuple; returns the full set, in agent order, when this
    /// completes its step.
    pub fn insert(&mut self, tuple: LocalTuple) -> Option<Vec<LocalTuple>> {
        let step = tuple.origin_step;
        if tuple.agent >= self.num_agents || step < self.watermark || self.emitted.contains(&step) {
            return None;
        }
        let slots = self
            .pending
            .entry(step)
            .or_insert_with(|| vec![None; self.num_agents]);
        let agent = tuple.agent;
        slots[agent] = Some(tuple);
        let complete = slots.iter().all(Option::is_some);
        let out = if complete {
            let set = self.pending.remove(&step).expect("entry exists");
            self.emitted.insert(step);
            Some(set.into_iter().map(|t| t.expect("complete")).collect())
        } else {
            None
        };
        self.prune(step);
        out
    }

    fn prune(&mut self, newest: u64) {
        let floor = newest.saturating_sub(self.retention);
        if floor <= self.watermark {
            return;
        }
        self.watermark = floor;
        self.pending = self.pending.split_off(&floor);
        self.emitted = self.emitted.split_off(&floor);
    }
}

/// Build the global transition from a complete set of local tuples, with the
/// reward recomputed from the assembled next state.
pub fn assemble_transition(env: &ParticleEnv, tuples: &[LocalTuple]) -> Result<GlobalTransition> {
    let mut state = Vec::new();
    let mut next_state = Vec::new();
    let mut actions = Vec::with_capacity(tuples.len());
    for t in tuples {
        state.extend_from_slice(&t.obs);
        next_state.extend_from_slice(&t.next_obs);
        actions.push(t.action.clone());
    }
    let r = env.reward_from_encoding(&next_state)?;
    Ok(GlobalTransition {
        state,
        actions: JointAction(actions),
        rewards: vec![r; tuples.len()],
        next_state,
        origin_step: tuples.first().map_or(0, |t| t.origin_step),
        raw: None,
    })
}
