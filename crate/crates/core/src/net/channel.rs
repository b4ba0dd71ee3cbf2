use std::collections::VecDeque;

use rand::Rng;

use crate::nn::MlpParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    PolicyUpdate,
    LocalTuple,
}

/// Local transition `(s^j_n, a^j_n, s^j_{n+1})` of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTuple {
    pub agent: usize,
    pub origin_step: u64,
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub next_obs: Vec<f64>,
}

impl LocalTuple {
    pub fn payload_len(&self) -> usize {
        self.obs.len() + self.action.len() + self.next_obs.len()
    }

    fn to_payload(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.payload_len());
        p.extend_from_slice(&self.obs);
        p.extend_from_slice(&self.action);
        p.extend_from_slice(&self.next_obs);
        p
    }

    /// Inverse of the wire payload layout `[obs, action, next_obs]`.
    pub fn from_payload(
        agent: usize,
        origin_step: u64,
        payload: &[f64],
        obs_dim: usize,
        action_dim: usize,
    ) -> Option<Self> {
        if payload.len() != 2 * obs_dim + action_dim {
            return None;
        }
        Some(Self {
            agent,
            origin_step,
            obs: payload[..obs_dim].to_vec(),
            action: payload[obs_dim..obs_dim + action_dim].to_vec(),
            next_obs: payload[obs_dim + action_dim..].to_vec(),
        })
    }
}

/// Bits charged per message on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WireSizing {
    /// Fixed size for every policy message instead of `32 * param_count`.
    pub policy_bits: Option<u64>,
    /// Fixed size for every tuple message instead of `32 * payload_len`.
    pub tuple_bits: Option<u64>,
}

impl WireSizing {
    /// 45000-bit policies and 1363-bit tuples: three budget-15000 slots per
    /// policy and 33 tuples in the same airtime.
    pub fn paper_ratios() -> Self {
        Self {
            policy_bits: Some(45_000),
            tuple_bits: Some(1_363),
        }
    }
}

pub const BITS_PER_VALUE: u64 = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub kind: MessageKind,
    pub origin_agent: usize,
    pub origin_step: u64,
    pub payload: Vec<f64>,
    pub size_bits: u64,
}

impl Message {
    /// Snapshot of a policy in canonical layer-major order.
    pub fn policy(agent: usize, step: u64, actor: &MlpParams, sizing: &WireSizing) -> Self {
        let payload = actor.values().to_vec();
        let size_bits = sizing
            .policy_bits
            .unwrap_or(BITS_PER_VALUE * payload.len() as u64);
        Self {
            kind: MessageKind::PolicyUpdate,
            origin_agent: agent,
            origin_step: step,
            payload,
            size_bits,
        }
    }

    pub fn tuple(tuple: &LocalTuple, sizing: &WireSizing) -> Self {
        let payload = tuple.to_payload();
        let size_bits = sizing
            .tuple_bits
            .unwrap_or(BITS_PER_VALUE * payload.len() as u64);
        Self {
            kind: MessageKind::LocalTuple,
            origin_agent: tuple.agent,
            origin_step: tuple.origin_step,
            payload,
            size_bits,
        }
    }

    /// Round every payload value through single precision.
    pub fn quantize(&mut self) {
        for v in &mut self.payload {
            *v = *v as f32 as f64;
        }
    }
}

/// A message with part of its bits still waiting for airtime.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageFragment {
    pub message: Message,
    pub bits_remaining: u64,
}

/// Unidirectional random-access link with a per-slot bit budget.
///
/// Each slot the link gets access with probability `access_prob`. On access
/// it moves up to `budget_bits` from the head of its queue; messages complete
/// in FIFO order once all their bits are through. A failed slot only delays.
#[derive(Debug, Clone)]
pub struct ChannelLink {
    pub owner: usize,
    pub recipient: usize,
    pub access_prob: f64,
    pub budget_bits: u64,
    queue: VecDeque<MessageFragment>,
    bits_enqueued: u64,
    bits_delivered: u64,
    successes: u64,
    slots: u64,
}

impl ChannelLink {
    pub fn new(owner: usize, recipient: usize, access_prob: f64, budget_bits: u64) -> Self {
        Self {
            owner,
            recipient,
            access_prob,
            budget_bits,
            queue: VecDeque::new(),
            bits_enqueued: 0,
            bits_delivered: 0,
            successes: 0,
            slots: 0,
        }
    }

    pub fn enqueue(&mut self, message: Message) {
        self.bits_enqueued += message.size_bits;
        self.queue.push_back(MessageFragment {
            bits_remaining: message.size_bits,
            message,
        });
    }

    pub fn queued_bits(&self) -> u64 {
        self.queue.iter().map(|f| f.bits_remaining).sum()
    }

    pub fn queued_messages(&self) -> usize {
        self.queue.len()
    }

    pub fn bits_enqueued(&self) -> u64 {
        self.bits_enqueued
    }

    pub fn bits_delivered(&self) -> u64 {
        self.bits_delivered
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    pub fn slots(&self) -> u64 {
        self.slots
    }

    /// Run one slot with a given access outcome; returns completed messages.
    pub fn transmit(&mut self, access: bool) -> Vec<Message> {
        self.slots += 1;
        let mut done = Vec::new();
        if !access {
            return done;
        }
        self.successes += 1;
        let mut budget = self.budget_bits;
        while let Some(front) = self.queue.front_mut() {
            let sent = front.bits_remaining.min(budget);
            front.bits_remaining -= sent;
            budget -= sent;
            self.bits_delivered += sent;
            if front.bits_remaining > 0 {
                break;
            }
            let fragment = self.queue.pop_front().expect("front exists");
            done.push(fragment.message);
        }
        done
    }

    /// Draw the access outcome for this slot and transmit.
    pub fn tick<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<Message> {
        let access = rng.random::<f64>() < self.access_prob;
        self.transmit(access)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub recipient: usize,
    pub message: Message,
}

/// One network slot: every link independently tries to access the channel,
/// in link order, consuming exactly one uniform draw each.
pub fn slot_tick<R: Rng + ?Sized>(links: &mut [ChannelLink], rng: &mut R) -> Vec<Delivery> {
    let mut out = Vec::new();
    for link in links.iter_mut() {
        let recipient = link.recipient;
        out.extend(
            link.tick(rng)
                .into_iter()
                .map(|message| Delivery { recipient, message }),
        );
    }
    out
}
