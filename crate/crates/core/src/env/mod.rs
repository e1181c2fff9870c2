//! Desk-scale continuous-control tasks with dense and sparse reward
//! variants. Episodes always end by time-limit truncation; there is no
//! terminal absorbing state, so TD targets bootstrap on the final state.

mod pendulum;
mod reacher;

pub use pendulum::Pendulum;
pub use reacher::Reacher;

use crate::{Error, Result};

/// Static description of a task.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub id: String,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub episode_len: u32,
    pub dt: f64,
}

/// One environment step. `truncated` is true exactly at the episode's
/// time-limit step and never marks a terminal absorbing state.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub truncated: bool,
}

/// The task catalog.
pub const ENV_IDS: [&str; 4] = [
    "pendulum_dense",
    "pendulum_sparse",
    "reacher2d_dense",
    "reacher2d_sparse",
];

/// An environment instance. Single-owner mutable state; run many in
/// parallel by constructing one per run.
#[derive(Debug, Clone)]
pub enum Env {
    Pendulum(Pendulum),
    Reacher(Reacher),
}

/// Builds an environment from its catalog id.
pub fn make_env(id: &str) -> Result<Env> {
    match id {
        "pendulum_dense" => Ok(Env::Pendulum(Pendulum::new(false))),
        "pendulum_sparse" => Ok(Env::Pendulum(Pendulum::new(true))),
        "reacher2d_dense" => Ok(Env::Reacher(Reacher::new(false))),
        "reacher2d_sparse" => Ok(Env::Reacher(Reacher::new(true))),
        other => Err(Error::Config(format!("unknown environment id '{other}'"))),
    }
}

/// Upper bound on the undiscounted episode return: episode length times the
/// per-step reward cap (1 for every task in the catalog).
pub fn max_return(id: &str) -> Result<f64> {
    make_env(id).map(|env| f64::from(env.spec().episode_len))
}

impl Env {
    pub fn spec(&self) -> EnvSpec {
        match self {
            Env::Pendulum(p) => EnvSpec {
                id: if p.sparse { "pendulum_sparse" } else { "pendulum_dense" }.to_string(),
                obs_dim: 3,
                act_dim: 1,
                episode_len: pendulum::EPISODE_LEN,
                dt: pendulum::DT,
            },
            Env::Reacher(r) => EnvSpec {
                id: if r.sparse { "reacher2d_sparse" } else { "reacher2d_dense" }.to_string(),
                obs_dim: 8,
                act_dim: 2,
                episode_len: reacher::EPISODE_LEN,
                dt: reacher::DT,
            },
        }
    }

    /// Draws a fresh initial state; deterministic per seed.
    pub fn reset(&mut self, seed: u64) -> Vec<f64> {
        match self {
            Env::Pendulum(p) => p.reset(seed),
            Env::Reacher(r) => r.reset(seed),
        }
    }

    /// Advances one control step. Actions must match the spec's dims and lie
    /// in [-1, 1]; the policy's tanh squashing guarantees this for agents.
    pub fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let spec = self.spec();
        if action.len() != spec.act_dim {
            return Err(Error::Contract(format!(
                "action dim {} != expected {}",
                action.len(),
                spec.act_dim
            )));
        }
        if action.iter().any(|a| !a.is_finite() || a.abs() > 1.0) {
            return Err(Error::Contract(format!("action outside [-1, 1]: {action:?}")));
        }
        let (obs, reward, truncated) = match self {
            Env::Pendulum(p) => p.step(action[0]),
            Env::Reacher(r) => r.step(action),
        };
        Ok(StepResult { obs, reward, truncated })
    }
}
