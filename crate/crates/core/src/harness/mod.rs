//! Experiment orchestration: run configs, the training loop, the paper's
//! experimental designs (standard, heavy priming, buffer transplant,
//! sweeps), run logging, and TD failure diagnostics.

mod config;
mod health;
mod runlog;
mod runner;
mod sweep;

pub use config::{Experiment, RunConfig};
pub use health::{
    td_health, TdEvidence, TdHealth, TdStatus, COLLAPSE_RETURN_FRACTION, COLLAPSE_REWARD_FRACTION,
    DIVERGENCE_SAFETY_FACTOR,
};
pub use runlog::{LogRow, RowKind, RunLog, CSV_HEADER};
pub use runner::{
    eval_policy, run, run_buffer_transplant, run_heavy_priming, run_to_dir, run_training,
    RunOutput, AGENT_FILE, BUFFER_FILE, LOG_FILE, META_FILE,
};
pub use sweep::{cell_config, run_sweep, SweepGrid, SweepKey};
