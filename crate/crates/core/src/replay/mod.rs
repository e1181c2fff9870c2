//! Ring replay buffer with uniform sampling, n-step transition assembly,
//! and a bit-exact binary snapshot format for buffer transplants.

mod nstep;
mod snapshot;

pub use nstep::NStepAssembler;
pub use snapshot::{read_snapshot, read_snapshot_file, write_snapshot, write_snapshot_file, SnapshotMeta};

use rand::Rng;

use crate::{Error, Result};

/// One (possibly multi-step) environment interaction:
/// `reward_acc` is the discounted sum over the emitted k-step span,
/// `bootstrap_state` is the state k steps ahead, and `discount` is gamma^k.
/// Episodes never terminate (time-limit truncation only), so `discount`
/// stays positive and targets always bootstrap.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward_acc: f64,
    pub bootstrap_state: Vec<f64>,
    pub discount: f64,
}

/// A sampled minibatch as parallel arrays.
#[derive(Debug, Clone, Default)]
pub struct Batch {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub reward_acc: Vec<f64>,
    pub bootstrap_states: Vec<Vec<f64>>,
    pub discounts: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn push(&mut self, t: &Transition) {
        self.states.push(t.state.clone());
        self.actions.push(t.action.clone());
        self.reward_acc.push(t.reward_acc);
        self.bootstrap_states.push(t.bootstrap_state.clone());
        self.discounts.push(t.discount);
    }
}

/// Fixed-capacity ring buffer; once full, every push evicts the oldest
/// element.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    act_dim: usize,
    items: Vec<Transition>,
    /// Ring write position, valid once the buffer is full.
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize, act_dim: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(ReplayBuffer {
            capacity,
            obs_dim,
            act_dim,
            items: Vec::new(),
            next: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn count(&self) -> usize {
        self.items.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn clear(&mut self) {
        self.items.clear();
        self.next = 0;
    }

    pub fn push(&mut self, t: Transition) {
        debug_assert_eq!(t.state.len(), self.obs_dim);
        debug_assert_eq!(t.action.len(), self.act_dim);
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
            self.next = (self.next + 1) % self.capacity;
        }
    }

    /// Stored transitions oldest first.
    pub fn iter_ordered(&self) -> impl Iterator<Item = &Transition> {
        let (tail, head) = if self.items.len() < self.capacity {
            (&self.items[..], &self.items[0..0])
        } else {
            (&self.items[self.next..], &self.items[..self.next])
        };
        tail.iter().chain(head.iter())
    }

    /// I.i.d. uniform sample with replacement over the stored transitions.
    pub fn sample_uniform<R: Rng>(&self, batch_size: usize, rng: &mut R) -> Result<Batch> {
        if batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if self.items.is_empty() {
            return Err(Error::NotReady("replay buffer is empty".into()));
        }
        let mut batch = Batch::default();
        for _ in 0..batch_size {
            let idx = rng.random_range(0..self.items.len());
            batch.push(&self.items[idx]);
        }
        Ok(batch)
    }

    /// Fraction of stored transitions with nonzero accumulated reward.
    pub fn nonzero_reward_fraction(&self) -> f64 {
        if self.items.is_empty() {
            return 0.0;
        }
        let nz = self.items.iter().filter(|t| t.reward_acc != 0.0).count();
        nz as f64 / self.items.len() as f64
    }
}
