use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    slot_tick, ChannelLink, CompletionTimeBound, DisseminationSchedule, LocalTuple, MessageKind,
    PolicyCache, TupleAssembler, WireSizing, BITS_PER_VALUE,
};
use crate::nn::{MlpParams, MlpShape};
use crate::{Error, Result};

/// Access probability for every agent, or one per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AccessProb {
    Shared(f64),
    PerAgent(Vec<f64>),
}

impl AccessProb {
    pub fn for_agent(&self, agent: usize) -> f64 {
        match self {
            AccessProb::Shared(p) => *p,
            AccessProb::PerAgent(ps) => ps[agent],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub lambda: AccessProb,
    #[serde(default = "default_budget")]
    pub budget_bits: u64,
    #[serde(default = "default_tuples_per_cycle")]
    pub tuples_per_cycle: usize,
    #[serde(default)]
    pub force_paper_ratios: bool,
    #[serde(default = "default_true")]
    pub quantize_wire: bool,
    /// Explicit wire sizes; override both the computed and the fixed-ratio sizes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy_bits: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuple_bits: Option<u64>,
}

fn default_budget() -> u64 {
    15_000
}

fn default_tuples_per_cycle() -> usize {
    33
}

fn default_true() -> bool {
    true
}

impl NetworkConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda: AccessProb::Shared(lambda),
            budget_bits: default_budget(),
            tuples_per_cycle: default_tuples_per_cycle(),
            force_paper_ratios: false,
            quantize_wire: true,
            policy_bits: None,
            tuple_bits: None,
        }
    }

    pub fn validate(&self, num_agents: usize) -> Result<()> {
        if let AccessProb::PerAgent(ps) = &self.lambda {
            if ps.len() != num_agents {
                return Err(Error::Config(format!(
                    "network.lambda lists {} values for {num_agents} agents",
                    ps.len()
                )));
            }
        }
        for i in 0..num_agents {
            let p = self.lambda.for_agent(i);
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Config(format!(
                    "network.lambda for agent {i} must lie in (0, 1], got {p}"
                )));
            }
        }
        if self.budget_bits == 0 {
            return Err(Error::Config("network.budget_bits must be positive".into()));
        }
        Ok(())
    }

    pub fn sizing(&self) -> WireSizing {
        let base = if self.force_paper_ratios {
            WireSizing::paper_ratios()
        } else {
            WireSizing::default()
        };
        WireSizing {
            policy_bits: self.policy_bits.or(base.policy_bits),
            tuple_bits: self.tuple_bits.or(base.tuple_bits),
        }
    }
}

/// Complete global data produced for one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub agent: usize,
    pub tuples: Vec<LocalTuple>,
}

/// All links, schedules, policy caches and tuple assemblers of a run.
///
/// Every ordered pair of agents has its own link; for more than two agents
/// each message is sent to every peer over that peer's link.
#[derive(Debug, Clone)]
pub struct Network {
    config: NetworkConfig,
    sizing: WireSizing,
    num_agents: usize,
    obs_dim: usize,
    action_dim: usize,
    actor_shape: MlpShape,
    links: Vec<ChannelLink>,
    schedules: Vec<DisseminationSchedule>,
    newest_tuples: Vec<Option<LocalTuple>>,
    caches: Vec<PolicyCache>,
    assemblers: Vec<TupleAssembler>,
}

impl Network {
    /// Seeds every cache with the peers' initial actors at origin step 0.
    pub fn new(
        config: NetworkConfig,
        obs_dim: usize,
        action_dim: usize,
        initial_actors: &[MlpParams],
        retention: u64,
    ) -> Result<Self> {
        let num_agents = initial_actors.len();
        config.validate(num_agents)?;
        let actor_shape = initial_actors
            .first()
            .ok_or_else(|| Error::Config("network needs at least one agent".into()))?
            .shape()
            .clone();
        let mut links = Vec::new();
        for src in 0..num_agents {
            for dst in (0..num_agents).filter(|&d| d != src) {
                links.push(ChannelLink::new(
                    src,
                    dst,
                    config.lambda.for_agent(src),
                    config.budget_bits,
                ));
            }
        }
        let schedules = vec![DisseminationSchedule::new(config.tuples_per_cycle); links.len()];
        let caches = (0..num_agents)
            .map(|i| {
                let mut c = PolicyCache::new();
                for (j, actor) in initial_actors.iter().enumerate() {
                    if j != i {
                        c.offer(j, actor.clone(), 0);
                    }
                }
                c
            })
            .collect();
        Ok(Self {
            sizing: config.sizing(),
            config,
            num_agents,
            obs_dim,
            action_dim,
            actor_shape,
            links,
            schedules,
            newest_tuples: vec![None; num_agents],
            caches,
            assemblers: vec![TupleAssembler::new(num_agents, retention); num_agents],
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn caches(&self) -> &[PolicyCache] {
        &self.caches
    }

    pub fn links(&self) -> &[ChannelLink] {
        &self.links
    }

    /// Record an agent's newest local tuple. Returns the completed global
    /// data for that agent if the peers' tuples for the step are already in.
    pub fn publish(&mut self, tuple: LocalTuple) -> Option<Completion> {
        let agent = tuple.agent;
        self.newest_tuples[agent] = Some(tuple.clone());
        self.assemblers[agent]
            .insert(tuple)
            .map(|tuples| Completion { agent, tuples })
    }

    /// Enqueue per the dissemination cycle, run one channel slot and process
    /// deliveries. `actors` are the current local actors, snapshotted for any
    /// policy message enqueued now.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        n: u64,
        actors: &[&MlpParams],
        rng: &mut R,
    ) -> Result<Vec<Completion>> {
        if actors.len() != self.num_agents {
            return Err(Error::Dimension {
                what: "actors",
                expected: self.num_agents,
                got: actors.len(),
            });
        }
        for (link, sched) in self.links.iter_mut().zip(&mut self.schedules) {
            let owner = link.owner;
            while link.queued_bits() < link.budget_bits {
                // a policy transfer starts on an empty link so it occupies its own slots
                if sched.next_kind() == MessageKind::PolicyUpdate && link.queued_bits() > 0 {
                    break;
                }
                match sched.next_message(
                    owner,
                    n,
                    actors[owner],
                    self.newest_tuples[owner].as_ref(),
                    &self.sizing,
                ) {
                    Some(m) => link.enqueue(m),
                    None => break,
                }
            }
        }
        let mut completions = Vec::new();
        for mut d in slot_tick(&mut self.links, rng) {
            if self.config.quantize_wire {
                d.message.quantize();
            }
            let m = d.message;
            match m.kind {
                MessageKind::PolicyUpdate => {
                    let params = MlpParams::from_values(self.actor_shape.clone(), m.payload)
                        .map_err(|e| Error::DataCorruption(format!("policy payload: {e}")))?;
                    self.caches[d.recipient].offer(m.origin_agent, params, m.origin_step);
                }
                MessageKind::LocalTuple => {
                    let tuple = LocalTuple::from_payload(
                        m.origin_agent,
                        m.origin_step,
                        &m.payload,
                        self.obs_dim,
                        self.action_dim,
                    )
                    .ok_or_else(|| {
                        Error::DataCorruption(format!(
                            "tuple payload of length {} from agent {}",
                            m.payload.len(),
                            m.origin_agent
                        ))
                    })?;
                    if let Some(tuples) = self.assemblers[d.recipient].insert(tuple) {
                        completions.push(Completion {
                            agent: d.recipient,
                            tuples,
                        });
                    }
                }
            }
        }
        Ok(completions)
    }

    pub fn policy_bits(&self) -> u64 {
        self.sizing
            .policy_bits
            .unwrap_or(BITS_PER_VALUE * self.actor_shape.param_count() as u64)
    }

    pub fn tuple_bits(&self) -> u64 {
        self.sizing
            .tuple_bits
            .unwrap_or(BITS_PER_VALUE * (2 * self.obs_dim + self.action_dim) as u64)
    }

    /// Dominating completion-time tail for the policies sent by `agent`.
    pub fn dominance_bound(&self, agent: usize) -> Result<CompletionTimeBound> {
        CompletionTimeBound::for_cycle(
            self.config.budget_bits,
            self.policy_bits(),
            self.tuple_bits(),
            self.config.tuples_per_cycle as u64,
            self.config.lambda.for_agent(agent),
        )
    }
}
