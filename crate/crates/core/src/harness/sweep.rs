//! Cross-product sweeps over replay ratio, n-step horizon, resets on/off,
//! and seeds. Each cell is an independent deterministic run; cells execute
//! in parallel and individual failures do not stop the sweep.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::RunConfig;
use super::runlog::RunLog;
use super::runner::{run, run_to_dir};
use crate::reset::{recommended_schedule, ResetSchedule};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub replay_ratios: Vec<u32>,
    pub n_steps: Vec<usize>,
    /// Reset arms: true uses the recommended schedule, false disables resets.
    pub resets: Vec<bool>,
    pub seeds: Vec<u64>,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.replay_ratios.is_empty()
            || self.n_steps.is_empty()
            || self.resets.is_empty()
            || self.seeds.is_empty()
        {
            return Err(Error::Config("sweep grid has an empty axis".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.replay_ratios.len() * self.n_steps.len() * self.resets.len() * self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SweepKey {
    pub replay_ratio: u32,
    pub n_step: usize,
    pub resets: bool,
    pub seed: u64,
}

impl SweepKey {
    pub fn dir_name(&self) -> String {
        format!(
            "rr{}_n{}_resets_{}_seed{}",
            self.replay_ratio,
            self.n_step,
            if self.resets { "on" } else { "off" },
            self.seed
        )
    }
}

/// The config for one sweep cell.
pub fn cell_config(base: &RunConfig, key: SweepKey) -> RunConfig {
    let mut config = base.clone();
    config.replay_ratio = key.replay_ratio;
    config.n_step = key.n_step;
    config.seed = key.seed;
    config.schedule = if key.resets {
        recommended_schedule(config.total_steps, config.sac.hidden_sizes.len() + 1)
    } else {
        ResetSchedule::disabled()
    };
    config
}

/// Runs the full grid. Results arrive indexed by their key; a failed cell
/// carries its error instead of aborting the sweep. With `out_root` set,
/// each cell also writes its artifacts under a key-named directory.
pub fn run_sweep(
    grid: &SweepGrid,
    base: &RunConfig,
    out_root: Option<&Path>,
) -> Result<Vec<(SweepKey, Result<RunLog>)>> {
    grid.validate()?;
    base.validate()?;
    let mut keys = Vec::with_capacity(grid.len());
    for &rr in &grid.replay_ratios {
        for &n in &grid.n_steps {
            for &resets in &grid.resets {
                for &seed in &grid.seeds {
                    keys.push(SweepKey {
                        replay_ratio: rr,
                        n_step: n,
                        resets,
                        seed,
                    });
                }
            }
        }
    }
    let out_root: Option<PathBuf> = out_root.map(Path::to_path_buf);
    let results: Vec<(SweepKey, Result<RunLog>)> = keys
        .into_par_iter()
        .map(|key| {
            let config = cell_config(base, key);
            let outcome = match &out_root {
                Some(root) => run_to_dir(&config, &root.join(key.dir_name())).map(|o| o.log),
                None => run(&config).map(|o| o.log),
            };
            (key, outcome)
        })
        .collect();
    Ok(results)
}
