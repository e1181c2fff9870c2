//! TD failure-mode diagnostics over a window of log rows: value collapse
//! (flat returns despite reward data in the buffer) and value divergence
//! (Q estimates far beyond any attainable return).

use super::runlog::{LogRow, RowKind};
use crate::replay::ReplayBuffer;
use crate::{Error, Result};

/// Q estimates above `max_return / (1 - gamma)` times this factor flag
/// divergence.
pub const DIVERGENCE_SAFETY_FACTOR: f64 = 10.0;
/// Eval returns below this fraction of the task cap count as "near zero".
pub const COLLAPSE_RETURN_FRACTION: f64 = 0.01;
/// Minimum nonzero-reward fraction for a collapse (rather than an
/// exploration failure).
pub const COLLAPSE_REWARD_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdStatus {
    Healthy,
    CollapseSuspect,
    DivergenceSuspect,
}

impl std::fmt::Display for TdStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TdStatus::Healthy => write!(f, "healthy"),
            TdStatus::CollapseSuspect => write!(f, "collapse_suspect"),
            TdStatus::DivergenceSuspect => write!(f, "divergence_suspect"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TdEvidence {
    pub q_mean: f64,
    pub q_max: f64,
    pub mean_eval_return: f64,
    pub nonzero_reward_fraction: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct TdHealth {
    pub status: TdStatus,
    pub evidence: TdEvidence,
}

/// Classifies the TD health of a log window against the buffer contents.
/// `env_max_return` is the task's return cap; `gamma` the discount in use.
pub fn td_health(
    window: &[LogRow],
    buffer: &ReplayBuffer,
    env_max_return: f64,
    gamma: f64,
) -> Result<TdHealth> {
    let diags: Vec<&LogRow> = window.iter().filter(|r| r.kind == RowKind::Diag).collect();
    if diags.is_empty() {
        return Err(Error::NotReady("no diag rows in window".into()));
    }
    let q_max = diags
        .iter()
        .filter_map(|r| r.q_max)
        .fold(f64::NEG_INFINITY, f64::max);
    let q_mean = diags.iter().rev().find_map(|r| r.q_mean).unwrap_or(f64::NAN);
    let evals: Vec<f64> = window
        .iter()
        .filter(|r| r.kind == RowKind::Eval)
        .filter_map(|r| r.episode_return)
        .collect();
    let mean_eval = if evals.is_empty() {
        f64::NAN
    } else {
        evals.iter().sum::<f64>() / evals.len() as f64
    };
    let nonzero_frac = buffer.nonzero_reward_fraction();
    let evidence = TdEvidence {
        q_mean,
        q_max,
        mean_eval_return: mean_eval,
        nonzero_reward_fraction: nonzero_frac,
    };

    let value_bound = env_max_return / (1.0 - gamma);
    let status = if q_max > value_bound * DIVERGENCE_SAFETY_FACTOR {
        TdStatus::DivergenceSuspect
    } else if !evals.is_empty()
        && mean_eval <= COLLAPSE_RETURN_FRACTION * env_max_return
        && nonzero_frac >= COLLAPSE_REWARD_FRACTION
    {
        TdStatus::CollapseSuspect
    } else {
        TdStatus::Healthy
    };
    Ok(TdHealth { status, evidence })
}
