//! The training loop: act, assemble n-step transitions, update at the
//! replay ratio, reset on schedule, evaluate on cadence. Heavy priming and
//! buffer transplants are the same loop with a different update gate or
//! initial buffer.

use std::path::Path;

use rand_chacha::ChaCha8Rng;

use super::config::{Experiment, RunConfig};
use super::runlog::RunLog;
use crate::env::make_env;
use crate::replay::{
    read_snapshot_file, write_snapshot_file, NStepAssembler, ReplayBuffer, SnapshotMeta,
};
use crate::reset::apply_reset;
use crate::rng::{mix_named, rng_from_seed};
use crate::sac::{write_checkpoint_file, SacAgent, UpdateDiagnostics};
use crate::{Error, Result};

pub const LOG_FILE: &str = "log.csv";
pub const META_FILE: &str = "run.meta";
pub const BUFFER_FILE: &str = "buffer.snap";
pub const AGENT_FILE: &str = "agent.ckpt";

/// Everything a finished run leaves behind.
pub struct RunOutput {
    pub log: RunLog,
    pub agent: SacAgent,
    pub buffer: ReplayBuffer,
    pub updates_done: u64,
}

/// Runs any configured experiment.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    execute(config)
}

/// Standard training; the config's experiment must be `Standard`.
pub fn run_training(config: &RunConfig) -> Result<RunOutput> {
    match config.experiment {
        Experiment::Standard => run(config),
        _ => Err(Error::Contract("run_training requires a standard experiment".into())),
    }
}

/// Heavy priming; the config's experiment must be `HeavyPriming`.
pub fn run_heavy_priming(config: &RunConfig) -> Result<RunOutput> {
    match config.experiment {
        Experiment::HeavyPriming { .. } => run(config),
        _ => Err(Error::Contract(
            "run_heavy_priming requires a heavy_priming experiment".into(),
        )),
    }
}

/// Buffer transplant; the config's experiment must be `BufferTransplant`.
pub fn run_buffer_transplant(config: &RunConfig) -> Result<RunOutput> {
    match config.experiment {
        Experiment::BufferTransplant { .. } => run(config),
        _ => Err(Error::Contract(
            "run_buffer_transplant requires a buffer_transplant experiment".into(),
        )),
    }
}

/// Runs and writes log.csv, run.meta, buffer.snap, and agent.ckpt into
/// `out_dir`.
pub fn run_to_dir(config: &RunConfig, out_dir: &Path) -> Result<RunOutput> {
    std::fs::create_dir_all(out_dir)?;
    let out = run(config)?;
    out.log.write_csv_file(&out_dir.join(LOG_FILE))?;
    std::fs::write(out_dir.join(META_FILE), config.to_kv_string())?;
    write_snapshot_file(
        &out_dir.join(BUFFER_FILE),
        &out.buffer,
        SnapshotMeta {
            n: config.n_step as u32,
            gamma: config.sac.gamma,
        },
    )?;
    write_checkpoint_file(&out_dir.join(AGENT_FILE), &out.agent)?;
    Ok(out)
}

/// Mean undiscounted return of the deterministic policy over
/// `eval_episodes` episodes with run-derived fixed seeds.
pub fn eval_policy(agent: &SacAgent, env_id: &str, run_seed: u64, eval_episodes: u32) -> Result<f64> {
    let mut env = make_env(env_id)?;
    // The deterministic policy draws nothing from this.
    let mut rng = rng_from_seed(0);
    let mut total = 0.0;
    for ep in 0..eval_episodes {
        let mut obs = env.reset(mix_named(run_seed, "eval", u64::from(ep)));
        let mut ret = 0.0;
        loop {
            let a = agent.select_action(&obs, false, &mut rng)?;
            let sr = env.step(&a.action)?;
            ret += sr.reward;
            obs = sr.obs;
            if sr.truncated {
                break;
            }
        }
        total += ret;
    }
    Ok(total / f64::from(eval_episodes))
}

fn initial_buffer(config: &RunConfig, obs_dim: usize, act_dim: usize) -> Result<ReplayBuffer> {
    match &config.experiment {
        Experiment::BufferTransplant { donor_dir } => {
            let (donor, _meta) = read_snapshot_file(&donor_dir.join(BUFFER_FILE))?;
            if donor.obs_dim() != obs_dim || donor.act_dim() != act_dim {
                return Err(Error::Format(format!(
                    "donor buffer dims ({}, {}) do not match env ({obs_dim}, {act_dim})",
                    donor.obs_dim(),
                    donor.act_dim()
                )));
            }
            // Re-home the donor data in a buffer large enough to also hold
            // this run's interactions.
            let capacity = donor.count() + config.effective_capacity();
            let mut buffer = ReplayBuffer::new(capacity.max(1), obs_dim, act_dim)?;
            for t in donor.iter_ordered() {
                buffer.push(t.clone());
            }
            Ok(buffer)
        }
        _ => ReplayBuffer::new(config.effective_capacity(), obs_dim, act_dim),
    }
}

fn execute(config: &RunConfig) -> Result<RunOutput> {
    let mut env = make_env(&config.env_id)?;
    let spec = env.spec();
    let seed = config.seed;

    let mut agent = SacAgent::new(
        spec.obs_dim,
        spec.act_dim,
        config.sac.clone(),
        config.l2,
        config.dropout,
        mix_named(seed, "agent", 0),
    )?;
    let mut buffer = initial_buffer(config, spec.obs_dim, spec.act_dim)?;
    let mut assembler = NStepAssembler::new(config.n_step, config.sac.gamma)?;

    let mut schedule = config.schedule.clone();
    if schedule.seed_stream == 0 {
        schedule.seed_stream = mix_named(seed, "reset-stream", 0);
    }
    if schedule.period > 0 {
        let layer_count = agent.actor.layer_count();
        if schedule.depth > layer_count {
            return Err(Error::Config(format!(
                "reset depth {} exceeds network depth {layer_count}",
                schedule.depth
            )));
        }
    }

    let mut action_rng: ChaCha8Rng = rng_from_seed(mix_named(seed, "action", 0));
    let mut update_rng: ChaCha8Rng = rng_from_seed(mix_named(seed, "update", 0));

    // Heavy priming overrides the update gate: updates start as soon as the
    // priming buffer is collected.
    let (effective_min, prime_updates) = match &config.experiment {
        Experiment::HeavyPriming {
            prime_after,
            prime_updates,
        } => (*prime_after, *prime_updates),
        _ => (config.min_buffer_size, 0),
    };

    let mut log = RunLog::new();
    let mut episode_index: u64 = 0;
    let mut episode_return = 0.0;
    let mut obs = env.reset(mix_named(seed, "episode", episode_index));
    let mut resets_done: u32 = 0;
    let mut primed = false;
    let mut updates_done: u64 = 0;
    let mut last_diag: Option<UpdateDiagnostics> = None;
    let mut failed_since_diag = false;

    'training: for step in 1..=config.total_steps {
        let sample = agent.select_action(&obs, true, &mut action_rng)?;
        let sr = env.step(&sample.action)?;
        episode_return += sr.reward;
        // Updates gate on the buffer as of the previous step, so a run with
        // min_buffer_size m performs exactly total_steps - m updates per
        // unit of replay ratio (n_step = 1).
        let gate_open = buffer.count() >= effective_min;
        assembler.push_step(&mut buffer, &obs, &sample.action, sr.reward, &sr.obs, sr.truncated);
        obs = sr.obs;
        if sr.truncated {
            log.push_train(step, episode_return);
            episode_return = 0.0;
            episode_index += 1;
            obs = env.reset(mix_named(seed, "episode", episode_index));
        }

        if gate_open {
            let mut burst = u64::from(config.replay_ratio);
            if !primed && prime_updates > 0 {
                burst += prime_updates;
            }
            primed = true;
            for _ in 0..burst {
                match agent.agent_update(&buffer, &mut update_rng) {
                    Ok(diag) => {
                        last_diag = Some(diag);
                        updates_done += 1;
                    }
                    Err(Error::Numeric(msg)) => {
                        // Divergence is data: flag it (one diag row per
                        // cadence window, not per failed update) and keep
                        // going, unless the parameters themselves broke.
                        failed_since_diag = true;
                        last_diag = None;
                        if !agent.params_finite() {
                            log.push_diag_failure(step);
                            log.aborted = Some(format!("non-finite parameters at step {step}: {msg}"));
                            break 'training;
                        }
                    }
                    Err(other) => return Err(other),
                }
            }
        }

        if schedule.should_reset(step, resets_done) {
            if schedule.suppressed_near_end(step, config.total_steps) {
                log.skipped_resets.push(step);
            } else {
                apply_reset(&mut agent, &mut buffer, &schedule, resets_done, step)?;
                resets_done += 1;
                log.push_reset(step);
            }
        }

        if step % config.diag_every == 0 {
            if failed_since_diag {
                log.push_diag_failure(step);
                failed_since_diag = false;
            } else if let Some(d) = &last_diag {
                log.push_diag(step, d);
            }
        }

        if step % config.eval_every == 0 {
            let mean_return = eval_policy(&agent, &config.env_id, seed, config.eval_episodes)?;
            log.push_eval(step, mean_return);
        }
    }

    Ok(RunOutput {
        log,
        agent,
        buffer,
        updates_done,
    })
}
