use super::PolicyCache;
use crate::algos::ReplayBuffer;

/// Ages at one slot: `tau[i][j]` for the policy of peer `j` held by agent `i`
/// (`None` on the diagonal), and `delta[i]` for the oldest sample in agent
/// `i`'s replay memory (`None` while it is empty).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AoiSnapshot {
    pub slot: u64,
    pub tau: Vec<Vec<Option<u64>>>,
    pub delta: Vec<Option<u64>>,
}

impl AoiSnapshot {
    pub fn max_tau(&self) -> Option<u64> {
        self.tau.iter().flatten().flatten().copied().max()
    }

    pub fn taus(&self) -> impl Iterator<Item = u64> + '_ {
        self.tau.iter().flatten().flatten().copied()
    }
}

/// Time series of AoI snapshots, one per recorded slot.
#[derive(Debug, Clone, Default)]
pub struct AoiTracker {
    num_agents: usize,
    rows: Vec<AoiSnapshot>,
}

impl AoiTracker {
    pub fn new(num_agents: usize) -> Self {
        Self {
            num_agents,
            rows: Vec::new(),
        }
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn record(
        &mut self,
        n: u64,
        caches: &[PolicyCache],
        buffers: &[&ReplayBuffer],
    ) -> &AoiSnapshot {
        let snap = snapshot(n, caches, buffers);
        self.rows.push(snap);
        self.rows.last().expect("just pushed")
    }

    pub fn rows(&self) -> &[AoiSnapshot] {
        &self.rows
    }

    pub fn at(&self, n: u64) -> Option<&AoiSnapshot> {
        self.rows
            .binary_search_by_key(&n, |r| r.slot)
            .ok()
            .map(|k| &self.rows[k])
    }

    /// All `tau_ij` samples pooled over pairs and slots.
    pub fn pooled_taus(&self) -> Vec<u64> {
        self.rows.iter().flat_map(|r| r.taus()).collect()
    }
}

/// Exact ages at slot `n`.
pub fn snapshot(n: u64, caches: &[PolicyCache], buffers: &[&ReplayBuffer]) -> AoiSnapshot {
    let d = caches.len();
    let tau = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { None } else { caches[i].age(j, n) })
                .collect()
        })
        .collect();
    let delta = buffers.iter().map(|b| b.age_of_oldest(n)).collect();
    AoiSnapshot {
        slot: n,
        tau,
        delta,
    }
}

/// `aoi_snapshot(tracker, n)`.
pub fn aoi_snapshot(tracker: &AoiTracker, n: u64) -> Option<&AoiSnapshot> {
    tracker.at(n)
}
