use super::{LocalTuple, Message, MessageKind, WireSizing};
use crate::nn::MlpParams;

/// Position-based dissemination cycle: one policy update, then `K` local
/// tuples, repeated. A stalled link resumes the cycle where it left off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisseminationSchedule {
    tuples_per_cycle: usize,
    position: usize,
    last_tuple_step: Option<u64>,
    last_policy_step: Option<u64>,
}

impl DisseminationSchedule {
    pub fn new(tuples_per_cycle: usize) -> Self {
        Self {
            tuples_per_cycle,
            position: 0,
            last_tuple_step: None,
            last_policy_step: None,
        }
    }

    pub fn next_kind(&self) -> MessageKind {
        if self.position == 0 {
            MessageKind::PolicyUpdate
        } else {
            MessageKind::LocalTuple
        }
    }

    fn advance(&mut self) {
        self.position = (self.position + 1) % (self.tuples_per_cycle + 1);
    }

    /// Produce the next message of the cycle at slot `step`, if it is available.
    ///
    /// The policy is snapshotted now, at enqueue time, and at most one policy
    /// is produced per slot. A tuple slot takes the newest local tuple if it
    /// is newer than the last one sent, so tuples leave in increasing
    /// origin-step order and stale backlog is skipped.
    pub fn next_message(
        &mut self,
        agent: usize,
        step: u64,
        actor: &MlpParams,
        newest_tuple: Option<&LocalTuple>,
        sizing: &WireSizing,
    ) -> Option<Message> {
        match self.next_kind() {
            MessageKind::PolicyUpdate => {
                if self.last_policy_step == Some(step) {
                    return None;
                }
                self.last_policy_step = Some(step);
                self.advance();
                Some(Message::policy(agent, step, actor, sizing))
            }
            MessageKind::LocalTuple => {
                let tuple = newest_tuple?;
                if self.last_tuple_step.is_some_and(|s| tuple.origin_step <= s) {
                    return None;
                }
                self.last_tuple_step = Some(tuple.origin_step);
                self.advance();
                Some(Message::tuple(tuple, sizing))
            }
        }
    }
}
