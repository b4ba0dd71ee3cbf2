use std::collections::BTreeMap;

use crate::nn::MlpParams;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CachedPolicy {
    pub params: MlpParams,
    pub origin_step: u64,
}

/// Latest known actor parametrization of each peer, with the step it was
/// taken at. Together with the agent's own actor this is the aged global
/// policy an agent trains against.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyCache {
    entries: BTreeMap<usize, CachedPolicy>,
}

impl PolicyCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Accept `params` for `peer` if nothing is cached yet or `origin_step` is
    /// strictly newer than the cached one. Returns whether it was accepted.
    pub fn offer(&mut self, peer: usize, params: MlpParams, origin_step: u64) -> bool {
        match self.entries.get_mut(&peer) {
            Some(entry) if origin_step <= entry.origin_step => false,
            Some(entry) => {
                entry.params = params;
                entry.origin_step = origin_step;
                true
            }
            None => {
                self.entries.insert(
                    peer,
                    CachedPolicy {
                        params,
                        origin_step,
                    },
                );
                true
            }
        }
    }

    /// Overwrite the cached values with `params` taken at `origin_step`,
    /// reusing the existing allocation. Used when fresh policies are directly
    /// observable (centralized training).
    pub fn sync(&mut self, peer: usize, params: &MlpParams, origin_step: u64) -> Result<()> {
        match self.entries.get_mut(&peer) {
            Some(entry) => {
                if origin_step < entry.origin_step {
                    return Err(Error::Contract(format!(
                        "policy cache for peer {peer} would move back from step {} to {origin_step}",
                        entry.origin_step
                    )));
                }
                if entry.params.shape() == params.shape() {
                    entry.params.set_values(params.values())?;
                } else {
                    entry.params = params.clone();
                }
                entry.origin_step = origin_step;
            }
            None => {
                self.entries.insert(
                    peer,
                    CachedPolicy {
                        params: params.clone(),
                        origin_step,
                    },
                );
            }
        }
        Ok(())
    }

    pub fn get(&self, peer: usize) -> Result<&CachedPolicy> {
        self.entries
            .get(&peer)
            .ok_or(Error::PeerNotInitialized(peer))
    }

    pub fn contains(&self, peer: usize) -> bool {
        self.entries.contains_key(&peer)
    }

    /// `tau(n) = n - origin_step`, saturating at zero.
    pub fn age(&self, peer: usize, n: u64) -> Option<u64> {
        self.entries
            .get(&peer)
            .map(|e| n.saturating_sub(e.origin_step))
    }

    pub fn peers(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }
}
