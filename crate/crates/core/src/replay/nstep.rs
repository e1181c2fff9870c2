use std::collections::VecDeque;

use super::{ReplayBuffer, Transition};
use crate::{Error, Result};

#[derive(Debug, Clone)]
struct RawStep {
    state: Vec<f64>,
    action: Vec<f64>,
    reward: f64,
    next_state: Vec<f64>,
}

/// Assembles raw environment steps into n-step transitions at insertion
/// time. Once n steps are pending, the oldest is emitted as a full n-step
/// span; at an episode boundary all pending steps are flushed as shortened
/// k-step spans (k < n) bootstrapping on the final observed state.
#[derive(Debug, Clone)]
pub struct NStepAssembler {
    n: usize,
    gamma: f64,
    pending: VecDeque<RawStep>,
}

impl NStepAssembler {
    pub fn new(n: usize, gamma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("n-step horizon must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Config(format!("gamma {gamma} outside [0, 1)")));
        }
        Ok(NStepAssembler {
            n,
            gamma,
            pending: VecDeque::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Feeds one raw step; emits completed spans into `buffer`. Returns the
    /// number of transitions emitted.
    pub fn push_step(
        &mut self,
        buffer: &mut ReplayBuffer,
        state: &[f64],
        action: &[f64],
        reward: f64,
        next_state: &[f64],
        episode_end: bool,
    ) -> usize {
        self.pending.push_back(RawStep {
            state: state.to_vec(),
            action: action.to_vec(),
            reward,
            next_state: next_state.to_vec(),
        });
        let mut emitted = 0;
        if self.pending.len() == self.n {
            let t = self.assemble_front(self.pending.len());
            self.pending.pop_front();
            buffer.push(t);
            emitted += 1;
        }
        if episode_end {
            while !self.pending.is_empty() {
                let t = self.assemble_front(self.pending.len());
                self.pending.pop_front();
                buffer.push(t);
                emitted += 1;
            }
        }
        emitted
    }

    /// Builds the span starting at the front of the queue and covering `k`
    /// pending steps: discounted reward sum, gamma^k, and the bootstrap
    /// state of the last covered step.
    fn assemble_front(&self, k: usize) -> Transition {
        debug_assert!(k >= 1 && k <= self.pending.len());
        let mut reward_acc = 0.0;
        let mut scale = 1.0;
        for i in 0..k {
            reward_acc += scale * self.pending[i].reward;
            scale *= self.gamma;
        }
        let first = &self.pending[0];
        Transition {
            state: first.state.clone(),
            action: first.action.clone(),
            reward_acc,
            bootstrap_state: self.pending[k - 1].next_state.clone(),
            discount: scale,
        }
    }
}
