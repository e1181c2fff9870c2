//! Run configuration: desk-scale defaults, flat key=value config files
//! (dotted keys for nesting), and the run.meta echo written next to every
//! run log.

use std::path::{Path, PathBuf};

use crate::env::make_env;
use crate::nn::ResetMode;
use crate::reset::{NetworkSet, ResetSchedule};
use crate::sac::SacConfig;
use crate::{Error, Result};

/// Experimental design of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Standard,
    /// Collect `prime_after` transitions without updates, then hammer the
    /// frozen buffer with `prime_updates` gradient updates before resuming
    /// the standard cadence.
    HeavyPriming { prime_after: usize, prime_updates: u64 },
    /// Start a fresh agent from the replay buffer snapshot found in the
    /// donor run's output directory.
    BufferTransplant { donor_dir: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env_id: String,
    pub seed: u64,
    pub total_steps: u64,
    /// Gradient updates per environment step.
    pub replay_ratio: u32,
    pub n_step: usize,
    pub sac: SacConfig,
    pub schedule: ResetSchedule,
    /// 0 means "total_steps" (store everything).
    pub buffer_capacity: usize,
    pub min_buffer_size: usize,
    pub eval_every: u64,
    pub eval_episodes: u32,
    /// Cadence of diagnostics rows in the run log.
    pub diag_every: u64,
    pub l2: f64,
    pub dropout: f64,
    pub experiment: Experiment,
}

impl RunConfig {
    /// Desk-scale defaults for a task: small networks and batches keep a
    /// full sweep within commodity-hardware hours while the phenomena keep
    /// their direction.
    pub fn desk_default(env_id: &str) -> Result<RunConfig> {
        make_env(env_id)?;
        let sparse = env_id.ends_with("_sparse");
        Ok(RunConfig {
            env_id: env_id.to_string(),
            seed: 0,
            total_steps: if sparse { 150_000 } else { 60_000 },
            replay_ratio: 1,
            n_step: 1,
            sac: SacConfig {
                batch_size: 64,
                hidden_sizes: vec![32, 32],
                ..SacConfig::default()
            },
            schedule: ResetSchedule::disabled(),
            buffer_capacity: 0,
            min_buffer_size: 1000,
            eval_every: 1000,
            eval_episodes: 10,
            diag_every: 500,
            l2: 0.0,
            dropout: 0.0,
            experiment: Experiment::Standard,
        })
    }

    pub fn validate(&self) -> Result<()> {
        make_env(&self.env_id)?;
        self.sac.validate()?;
        if self.total_steps == 0 {
            return Err(Error::Config("total_steps must be positive".into()));
        }
        if self.replay_ratio == 0 {
            return Err(Error::Config("replay_ratio must be >= 1".into()));
        }
        if self.n_step == 0 {
            return Err(Error::Config("n_step must be >= 1".into()));
        }
        if self.eval_every == 0 || self.diag_every == 0 {
            return Err(Error::Config("eval_every and diag_every must be positive".into()));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be >= 1".into()));
        }
        if self.min_buffer_size == 0 {
            return Err(Error::Config("min_buffer_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0,1)", self.dropout)));
        }
        if self.l2 < 0.0 {
            return Err(Error::Config(format!("l2 {} must be >= 0", self.l2)));
        }
        match &self.experiment {
            Experiment::HeavyPriming { prime_after, .. } if *prime_after == 0 => {
                Err(Error::Config("prime_after must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn effective_capacity(&self) -> usize {
        if self.buffer_capacity == 0 {
            self.total_steps as usize
        } else {
            self.buffer_capacity
        }
    }

    /// Applies one `key=value` override.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid {what} value '{value}'"));
        match key {
            "env_id" | "env" => {
                make_env(value)?;
                self.env_id = value.to_string();
            }
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "total_steps" => self.total_steps = value.parse().map_err(|_| bad("total_steps"))?,
            "replay_ratio" | "rr" => {
                self.replay_ratio = value.parse().map_err(|_| bad("replay_ratio"))?
            }
            "n_step" | "nstep" => self.n_step = value.parse().map_err(|_| bad("n_step"))?,
            "buffer_capacity" => {
                self.buffer_capacity = value.parse().map_err(|_| bad("buffer_capacity"))?
            }
            "min_buffer_size" => {
                self.min_buffer_size = value.parse().map_err(|_| bad("min_buffer_size"))?
            }
            "eval_every" => self.eval_every = value.parse().map_err(|_| bad("eval_every"))?,
            "eval_episodes" => {
                self.eval_episodes = value.parse().map_err(|_| bad("eval_episodes"))?
            }
            "diag_every" => self.diag_every = value.parse().map_err(|_| bad("diag_every"))?,
            "l2" => self.l2 = value.parse().map_err(|_| bad("l2"))?,
            "dropout" => self.dropout = value.parse().map_err(|_| bad("dropout"))?,
            "sac.gamma" => self.sac.gamma = value.parse().map_err(|_| bad("sac.gamma"))?,
            "sac.tau" => self.sac.tau = value.parse().map_err(|_| bad("sac.tau"))?,
            "sac.lr_actor" => self.sac.lr_actor = value.parse().map_err(|_| bad("sac.lr_actor"))?,
            "sac.lr_critic" => {
                self.sac.lr_critic = value.parse().map_err(|_| bad("sac.lr_critic"))?
            }
            "sac.lr_alpha" => self.sac.lr_alpha = value.parse().map_err(|_| bad("sac.lr_alpha"))?,
            "sac.batch_size" => {
                self.sac.batch_size = value.parse().map_err(|_| bad("sac.batch_size"))?
            }
            "sac.target_entropy" => {
                self.sac.target_entropy = if value == "auto" {
                    None
                } else {
                    Some(value.parse().map_err(|_| bad("sac.target_entropy"))?)
                }
            }
            "sac.init_log_alpha" => {
                self.sac.init_log_alpha = value.parse().map_err(|_| bad("sac.init_log_alpha"))?
            }
            "sac.hidden_sizes" => {
                let sizes: std::result::Result<Vec<usize>, _> =
                    value.split(',').map(|s| s.trim().parse()).collect();
                self.sac.hidden_sizes = sizes.map_err(|_| bad("sac.hidden_sizes"))?;
            }
            "reset.period" => self.schedule.period = value.parse().map_err(|_| bad("reset.period"))?,
            "reset.max_resets" => {
                self.schedule.max_resets = value.parse().map_err(|_| bad("reset.max_resets"))?
            }
            "reset.depth" => self.schedule.depth = value.parse().map_err(|_| bad("reset.depth"))?,
            "reset.mode" => {
                self.schedule.mode = match value {
                    "last_layers" => ResetMode::LastLayers,
                    "random_subnetwork" => ResetMode::RandomSubnetwork,
                    "full" => ResetMode::Full,
                    _ => return Err(bad("reset.mode")),
                }
            }
            "reset.subnet_prob" => {
                self.schedule.subnet_prob = value.parse().map_err(|_| bad("reset.subnet_prob"))?
            }
            "reset.networks" => {
                let mut set = NetworkSet {
                    actor: false,
                    critics: false,
                    targets: false,
                };
                for part in value.split(',') {
                    match part.trim() {
                        "actor" => set.actor = true,
                        "critics" => set.critics = true,
                        "targets" => set.targets = true,
                        other => {
                            return Err(Error::Config(format!("unknown network group '{other}'")))
                        }
                    }
                }
                self.schedule.networks = set;
            }
            "reset.reset_optimizer" => self.schedule.reset_optimizer = parse_bool(value)?,
            "reset.same_seed" => self.schedule.same_seed = parse_bool(value)?,
            "reset.clear_buffer" => self.schedule.clear_buffer = parse_bool(value)?,
            "reset.optimizer_only" => self.schedule.optimizer_only = parse_bool(value)?,
            "reset.sync_targets" => self.schedule.sync_targets = parse_bool(value)?,
            "reset.skip_unrecoverable_final" => {
                self.schedule.skip_unrecoverable_final = parse_bool(value)?
            }
            "reset.seed_stream" => {
                self.schedule.seed_stream = value.parse().map_err(|_| bad("reset.seed_stream"))?
            }
            "experiment" => {
                self.experiment = match value {
                    "standard" => Experiment::Standard,
                    "heavy_priming" => Experiment::HeavyPriming {
                        prime_after: 100,
                        prime_updates: 20_000,
                    },
                    "buffer_transplant" => Experiment::BufferTransplant {
                        donor_dir: PathBuf::new(),
                    },
                    _ => return Err(bad("experiment")),
                }
            }
            "experiment.prime_after" => {
                let v = value.parse().map_err(|_| bad("experiment.prime_after"))?;
                match &mut self.experiment {
                    Experiment::HeavyPriming { prime_after, .. } => *prime_after = v,
                    _ => {
                        self.experiment = Experiment::HeavyPriming {
                            prime_after: v,
                            prime_updates: 20_000,
                        }
                    }
                }
            }
            "experiment.prime_updates" => {
                let v = value.parse().map_err(|_| bad("experiment.prime_updates"))?;
                match &mut self.experiment {
                    Experiment::HeavyPriming { prime_updates, .. } => *prime_updates = v,
                    _ => {
                        self.experiment = Experiment::HeavyPriming {
                            prime_after: 100,
                            prime_updates: v,
                        }
                    }
                }
            }
            "experiment.donor_dir" => {
                self.experiment = Experiment::BufferTransplant {
                    donor_dir: PathBuf::from(value),
                }
            }
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Parses flat `key=value` text (# comments and blank lines ignored).
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got '{line}'", lineno + 1))
            })?;
            self.apply_kv(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_config_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_config_text(&text)
    }

    /// Serializes every field as `key=value` lines; the output parses back
    /// into an identical config.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        kv("env_id", self.env_id.clone());
        kv("seed", self.seed.to_string());
        kv("total_steps", self.total_steps.to_string());
        kv("replay_ratio", self.replay_ratio.to_string());
        kv("n_step", self.n_step.to_string());
        kv("buffer_capacity", self.buffer_capacity.to_string());
        kv("min_buffer_size", self.min_buffer_size.to_string());
        kv("eval_every", self.eval_every.to_string());
        kv("eval_episodes", self.eval_episodes.to_string());
        kv("diag_every", self.diag_every.to_string());
        kv("l2", self.l2.to_string());
        kv("dropout", self.dropout.to_string());
        kv("sac.gamma", self.sac.gamma.to_string());
        kv("sac.tau", self.sac.tau.to_string());
        kv("sac.lr_actor", self.sac.lr_actor.to_string());
        kv("sac.lr_critic", self.sac.lr_critic.to_string());
        kv("sac.lr_alpha", self.sac.lr_alpha.to_string());
        kv("sac.batch_size", self.sac.batch_size.to_string());
        kv(
            "sac.target_entropy",
            self.sac
                .target_entropy
                .map_or("auto".to_string(), |v| v.to_string()),
        );
        kv("sac.init_log_alpha", self.sac.init_log_alpha.to_string());
        kv(
            "sac.hidden_sizes",
            self.sac
                .hidden_sizes
                .iter()
                .map(|h| h.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("reset.period", self.schedule.period.to_string());
        kv("reset.max_resets", self.schedule.max_resets.to_string());
        kv("reset.depth", self.schedule.depth.to_string());
        kv("reset.mode", self.schedule.mode.to_string());
        kv("reset.subnet_prob", self.schedule.subnet_prob.to_string());
        kv("reset.networks", self.schedule.networks.names().join(","));
        kv("reset.reset_optimizer", self.schedule.reset_optimizer.to_string());
        kv("reset.same_seed", self.schedule.same_seed.to_string());
        kv("reset.clear_buffer", self.schedule.clear_buffer.to_string());
        kv("reset.optimizer_only", self.schedule.optimizer_only.to_string());
        kv("reset.sync_targets", self.schedule.sync_targets.to_string());
        kv(
            "reset.skip_unrecoverable_final",
            self.schedule.skip_unrecoverable_final.to_string(),
        );
        kv("reset.seed_stream", self.schedule.seed_stream.to_string());
        match &self.experiment {
            Experiment::Standard => kv("experiment", "standard".into()),
            Experiment::HeavyPriming {
                prime_after,
                prime_updates,
            } => {
                kv("experiment", "heavy_priming".into());
                kv("experiment.prime_after", prime_after.to_string());
                kv("experiment.prime_updates", prime_updates.to_string());
            }
            Experiment::BufferTransplant { donor_dir } => {
                kv("experiment", "buffer_transplant".into());
                kv("experiment.donor_dir", donor_dir.display().to_string());
            }
        }
        s
    }
}

fn parse_bool(value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "1" | "yes" => Ok(true),
        "false" | "off" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("invalid boolean '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_defaults_are_valid() {
        for id in crate::env::ENV_IDS {
            let c = RunConfig::desk_default(id).unwrap();
            c.validate().unwrap();
        }
        assert!(RunConfig::desk_default("atari").is_err());
    }

    #[test]
    fn sparse_tasks_get_longer_budgets() {
        assert_eq!(RunConfig::desk_default("pendulum_dense").unwrap().total_steps, 60_000);
        assert_eq!(RunConfig::desk_default("pendulum_sparse").unwrap().total_steps, 150_000);
    }

    #[test]
    fn kv_roundtrip_is_identity() {
        let mut c = RunConfig::desk_default("reacher2d_sparse").unwrap();
        c.seed = 17;
        c.replay_ratio = 9;
        c.n_step = 3;
        c.schedule.period = 12_000;
        c.schedule.same_seed = true;
        c.sac.hidden_sizes = vec![48, 24];
        c.sac.target_entropy = Some(-1.5);
        c.experiment = Experiment::HeavyPriming {
            prime_after: 100,
            prime_updates: 20_000,
        };
        let text = c.to_kv_string();
        let mut parsed = RunConfig::desk_default("pendulum_dense").unwrap();
        parsed.apply_config_text(&text).unwrap();
        assert_eq!(parsed, c);
    }

    #[test]
    fn config_text_with_comments_and_overrides() {
        let mut c = RunConfig::desk_default("pendulum_dense").unwrap();
        c.apply_config_text(
            "# comment\n\nsac.gamma=0.95\nreset.mode=full\nreset.networks=actor,critics\nrr=32\n",
        )
        .unwrap();
        assert_eq!(c.sac.gamma, 0.95);
        assert_eq!(c.schedule.mode, ResetMode::Full);
        assert!(c.schedule.networks.actor && c.schedule.networks.critics);
        assert!(!c.schedule.networks.targets);
        assert_eq!(c.replay_ratio, 32);
    }

    #[test]
    fn bad_keys_and_values_are_config_errors() {
        let mut c = RunConfig::desk_default("pendulum_dense").unwrap();
        assert!(c.apply_kv("nope", "1").is_err());
        assert!(c.apply_kv("sac.gamma", "fast").is_err());
        assert!(c.apply_config_text("just a line\n").is_err());
        assert!(c.apply_kv("env", "humanoid-run").is_err());
    }
}
