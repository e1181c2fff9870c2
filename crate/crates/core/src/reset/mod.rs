//! Periodic re-initialization of selected layers of selected networks with
//! buffer preservation, plus the ablation flags: buffer clearing, same-seed
//! re-draws, optimizer-only resets, random subnetworks, reset caps, and
//! target synchronization.

use crate::nn::ResetMode;
use crate::replay::ReplayBuffer;
use crate::rng::mix_named;
use crate::sac::SacAgent;
use crate::{Error, Result};

/// Which of the agent's network groups a reset touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkSet {
    pub actor: bool,
    pub critics: bool,
    pub targets: bool,
}

impl NetworkSet {
    pub const ALL: NetworkSet = NetworkSet {
        actor: true,
        critics: true,
        targets: true,
    };

    pub fn is_empty(&self) -> bool {
        !(self.actor || self.critics || self.targets)
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.actor {
            v.push("actor");
        }
        if self.critics {
            v.push("critics");
        }
        if self.targets {
            v.push("targets");
        }
        v
    }
}

/// Periodicity and shape of the reset mechanism.
#[derive(Debug, Clone, PartialEq)]
pub struct ResetSchedule {
    /// Env steps between resets; 0 disables resets entirely.
    pub period: u64,
    /// Cap on the number of resets; 0 means unlimited.
    pub max_resets: u32,
    /// Layers counted from the output, used by the last-layers mode.
    pub depth: usize,
    pub mode: ResetMode,
    /// Per-parameter redraw probability in random-subnetwork mode.
    pub subnet_prob: f64,
    pub networks: NetworkSet,
    /// Zero Adam moments for exactly the re-initialized layers.
    pub reset_optimizer: bool,
    /// Re-draw with the construction seeds, reproducing the initial values.
    pub same_seed: bool,
    /// Ablation only: empty the replay buffer at each reset. The mechanism
    /// itself preserves the buffer.
    pub clear_buffer: bool,
    /// Ablation: keep all parameters, zero only the optimizer moments.
    pub optimizer_only: bool,
    /// Copy the freshly reset critics into the targets instead of drawing
    /// the targets independently.
    pub sync_targets: bool,
    /// Skip a scheduled reset when fewer than period/2 training steps would
    /// remain, so the final score is not taken mid-recovery.
    pub skip_unrecoverable_final: bool,
    /// Base seed for reset draws; 0 lets the harness derive one from the
    /// run seed.
    pub seed_stream: u64,
}

impl ResetSchedule {
    /// A schedule that never fires.
    pub fn disabled() -> Self {
        ResetSchedule {
            period: 0,
            max_resets: 0,
            depth: 0,
            mode: ResetMode::LastLayers,
            subnet_prob: 0.0,
            networks: NetworkSet::ALL,
            reset_optimizer: true,
            same_seed: false,
            clear_buffer: false,
            optimizer_only: false,
            sync_targets: false,
            skip_unrecoverable_final: true,
            seed_stream: 0,
        }
    }

    /// True when a reset fires at this step: the period divides it, and the
    /// reset cap (if any) is not exhausted.
    pub fn should_reset(&self, env_step: u64, resets_done: u32) -> bool {
        self.period > 0
            && env_step > 0
            && env_step % self.period == 0
            && (self.max_resets == 0 || resets_done < self.max_resets)
    }

    /// True when the unrecoverable-final rule suppresses a reset at this
    /// step of a run with the given length.
    pub fn suppressed_near_end(&self, env_step: u64, total_steps: u64) -> bool {
        self.skip_unrecoverable_final
            && self.period > 0
            && total_steps.saturating_sub(env_step) < self.period / 2
    }
}

/// Default schedule: five resets over the run, re-initializing up to the
/// last three layers of every network, optimizer statistics included.
pub fn recommended_schedule(total_steps: u64, layer_count: usize) -> ResetSchedule {
    ResetSchedule {
        period: total_steps / 5,
        depth: layer_count.min(3),
        ..ResetSchedule::disabled()
    }
}

/// Audit record for one applied reset.
#[derive(Debug, Clone)]
pub struct ResetEvent {
    pub env_step: u64,
    pub reset_index: u32,
    pub seeds_used: Vec<(String, u64)>,
    pub networks_touched: Vec<&'static str>,
}

/// Applies one reset to the agent (and, for the ablation, the buffer).
/// Parameters outside the selected networks/layers are bit-identical
/// afterward; with `clear_buffer` false the buffer is untouched.
pub fn apply_reset(
    agent: &mut SacAgent,
    buffer: &mut ReplayBuffer,
    schedule: &ResetSchedule,
    reset_index: u32,
    env_step: u64,
) -> Result<ResetEvent> {
    let sel = schedule.networks;
    if sel.is_empty() {
        return Err(Error::Config("reset selects no networks".into()));
    }
    let min_layers = [
        sel.actor.then(|| agent.actor.layer_count()),
        sel.critics.then(|| agent.critic1.layer_count()),
        sel.targets.then(|| agent.target1.layer_count()),
    ]
    .into_iter()
    .flatten()
    .min()
    .unwrap();
    if schedule.depth > min_layers {
        return Err(Error::Config(format!(
            "reset depth {} exceeds a selected network's layer count {}",
            schedule.depth, min_layers
        )));
    }
    if !(0.0..=1.0).contains(&schedule.subnet_prob) {
        return Err(Error::Config(format!(
            "subnet_prob {} outside [0,1]",
            schedule.subnet_prob
        )));
    }

    let construction = agent.construction_seeds();
    let pick_seed = |tag: &str, construction_seed: u64| -> u64 {
        if schedule.same_seed {
            construction_seed
        } else {
            mix_named(schedule.seed_stream, tag, u64::from(reset_index))
        }
    };

    let mut seeds_used = Vec::new();
    let mut reinit = |mlp: &mut crate::nn::Mlp, tag: &str, construction_seed: u64| -> Result<()> {
        let seed = pick_seed(tag, construction_seed);
        if !schedule.optimizer_only {
            mlp.reinit_layers(schedule.depth, schedule.mode, schedule.subnet_prob, seed)?;
        }
        seeds_used.push((tag.to_string(), seed));
        Ok(())
    };

    // Critics before targets so a target sync sees the new critics.
    if sel.critics {
        reinit(&mut agent.critic1, "critic1", construction.critic1)?;
        reinit(&mut agent.critic2, "critic2", construction.critic2)?;
    }
    if sel.targets {
        if schedule.sync_targets && sel.critics && !schedule.optimizer_only {
            agent.target1 = agent.critic1.clone();
            agent.target2 = agent.critic2.clone();
        } else {
            // Independently drawn; with same_seed this reproduces the fresh
            // construction, where targets copy the fresh critics.
            reinit(&mut agent.target1, "target1", construction.critic1)?;
            reinit(&mut agent.target2, "target2", construction.critic2)?;
        }
    }
    if sel.actor {
        reinit(&mut agent.actor, "actor", construction.actor)?;
    }

    if schedule.reset_optimizer || schedule.optimizer_only {
        if sel.critics {
            let idx = agent.critic1.reset_layer_indices(schedule.depth, schedule.mode);
            agent.critic1_opt.reset_layers(&idx)?;
            agent.critic2_opt.reset_layers(&idx)?;
        }
        if sel.actor {
            let idx = agent.actor.reset_layer_indices(schedule.depth, schedule.mode);
            agent.actor_opt.reset_layers(&idx)?;
            // The temperature itself is preserved; only its optimizer state
            // restarts with the fresh actor.
            agent.alpha_opt.reset();
        }
    }

    if schedule.clear_buffer {
        buffer.clear();
    }

    Ok(ResetEvent {
        env_step,
        reset_index,
        seeds_used,
        networks_touched: sel.names(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replay::Transition;
    use crate::rng::rng_from_seed;
    use crate::sac::SacConfig;
    use rand::Rng;

    fn agent(seed: u64) -> SacAgent {
        let config = SacConfig {
            hidden_sizes: vec![8, 8],
            batch_size: 4,
            ..SacConfig::default()
        };
        SacAgent::new(3, 1, config, 0.0, 0.0, seed).unwrap()
    }

    fn filled_buffer() -> ReplayBuffer {
        let mut rng = rng_from_seed(5);
        let mut buf = ReplayBuffer::new(64, 3, 1).unwrap();
        for _ in 0..40 {
            buf.push(Transition {
                state: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                action: vec![rng.random_range(-0.9..0.9)],
                reward_acc: rng.random_range(-1.0..1.0),
                bootstrap_state: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                discount: 0.99,
            });
        }
        buf
    }

    fn trained(agent: &mut SacAgent, buffer: &ReplayBuffer, steps: usize, seed: u64) {
        let mut rng = rng_from_seed(seed);
        for _ in 0..steps {
            agent.agent_update(buffer, &mut rng).unwrap();
        }
    }

    fn full_schedule() -> ResetSchedule {
        ResetSchedule {
            period: 100,
            depth: 3,
            mode: crate::nn::ResetMode::Full,
            seed_stream: 999,
            ..ResetSchedule::disabled()
        }
    }

    #[test]
    fn should_reset_arithmetic() {
        let mut s = ResetSchedule::disabled();
        s.period = 200_000;
        assert!(s.should_reset(200_000, 0));
        assert!(!s.should_reset(200_001, 0));
        assert!(!s.should_reset(0, 0));
        s.period = 0;
        assert!(!s.should_reset(200_000, 0));
        s.period = 100;
        s.max_resets = 1;
        assert!(s.should_reset(100, 0));
        assert!(!s.should_reset(200, 1));
    }

    #[test]
    fn recommended_schedule_values() {
        let s = recommended_schedule(1_000_000, 3);
        assert_eq!(s.period, 200_000);
        assert_eq!(s.depth, 3);
        assert_eq!(s.mode, crate::nn::ResetMode::LastLayers);
        assert_eq!(s.networks, NetworkSet::ALL);
        assert!(s.reset_optimizer);
        assert_eq!(recommended_schedule(100, 3).period, 20);
        assert_eq!(recommended_schedule(1_000_000, 2).depth, 2);
    }

    #[test]
    fn suppression_near_run_end() {
        let mut s = ResetSchedule::disabled();
        s.period = 1000;
        assert!(s.suppressed_near_end(9_800, 10_000)); // 200 < 500 remain
        assert!(!s.suppressed_near_end(9_000, 10_000)); // 1000 >= 500 remain
        s.skip_unrecoverable_final = false;
        assert!(!s.suppressed_near_end(9_800, 10_000));
    }

    #[test]
    fn same_seed_full_reset_reproduces_construction() {
        let mut a = agent(42);
        let fresh = agent(42);
        let buffer = filled_buffer();
        trained(&mut a, &buffer, 20, 1);
        assert_ne!(a.actor, fresh.actor);

        let mut buf = filled_buffer();
        let mut s = full_schedule();
        s.same_seed = true;
        apply_reset(&mut a, &mut buf, &s, 0, 100).unwrap();
        assert_eq!(a.actor, fresh.actor);
        assert_eq!(a.critic1, fresh.critic1);
        assert_eq!(a.critic2, fresh.critic2);
        assert_eq!(a.target1, fresh.target1);
        assert_eq!(a.target2, fresh.target2);
    }

    #[test]
    fn buffer_is_preserved_bit_exact() {
        let mut a = agent(7);
        let mut buf = filled_buffer();
        let before = buf.clone();
        trained(&mut a, &buf, 10, 2);
        apply_reset(&mut a, &mut buf, &full_schedule(), 0, 100).unwrap();
        assert_eq!(buf, before);
    }

    #[test]
    fn clear_buffer_ablation_empties() {
        let mut a = agent(7);
        let mut buf = filled_buffer();
        let mut s = full_schedule();
        s.clear_buffer = true;
        apply_reset(&mut a, &mut buf, &s, 0, 100).unwrap();
        assert_eq!(buf.count(), 0);
    }

    #[test]
    fn critics_only_depth_one_preserves_complement() {
        let mut a = agent(11);
        let buffer = filled_buffer();
        trained(&mut a, &buffer, 10, 3);
        let before = a.clone();
        let mut buf = filled_buffer();
        let s = ResetSchedule {
            period: 100,
            depth: 1,
            networks: NetworkSet {
                actor: false,
                critics: true,
                targets: false,
            },
            seed_stream: 4,
            ..ResetSchedule::disabled()
        };
        apply_reset(&mut a, &mut buf, &s, 0, 100).unwrap();
        // Actor and targets untouched.
        assert_eq!(a.actor, before.actor);
        assert_eq!(a.target1, before.target1);
        assert_eq!(a.target2, before.target2);
        // Critics: all but the last layer untouched.
        for k in 0..a.critic1.layer_count() - 1 {
            assert_eq!(a.critic1.layers()[k], before.critic1.layers()[k]);
        }
        let last = a.critic1.layer_count() - 1;
        assert_ne!(a.critic1.layers()[last], before.critic1.layers()[last]);
        // log_alpha untouched.
        assert_eq!(a.log_alpha, before.log_alpha);
    }

    #[test]
    fn optimizer_reset_scoped_to_selected_layers() {
        let mut a = agent(13);
        let buffer = filled_buffer();
        trained(&mut a, &buffer, 10, 4);
        let before = a.clone();
        let mut buf = filled_buffer();
        let s = ResetSchedule {
            period: 100,
            depth: 1,
            networks: NetworkSet {
                actor: true,
                critics: true,
                targets: false,
            },
            seed_stream: 21,
            ..ResetSchedule::disabled()
        };
        apply_reset(&mut a, &mut buf, &s, 0, 100).unwrap();
        let last = a.critic1.layer_count() - 1;
        assert!(a.critic1_opt.layer_is_fresh(last));
        assert!(a.actor_opt.layer_is_fresh(last));
        for k in 0..last {
            assert!(!a.critic1_opt.layer_is_fresh(k));
            assert_eq!(a.critic1_opt.layer_step_count(k), before.critic1_opt.layer_step_count(k));
        }
        // Alpha value preserved, its optimizer reset (actor was selected).
        assert_eq!(a.log_alpha, before.log_alpha);
        assert_eq!(a.alpha_opt.state(), (0.0, 0.0, 0));
    }

    #[test]
    fn optimizer_only_keeps_parameters() {
        let mut a = agent(17);
        let buffer = filled_buffer();
        trained(&mut a, &buffer, 10, 5);
        let before = a.clone();
        let mut buf = filled_buffer();
        let mut s = full_schedule();
        s.optimizer_only = true;
        apply_reset(&mut a, &mut buf, &s, 0, 100).unwrap();
        assert_eq!(a.actor, before.actor);
        assert_eq!(a.critic1, before.critic1);
        assert_eq!(a.target1, before.target1);
        assert!(a.actor_opt.layer_is_fresh(0));
        assert!(a.critic1_opt.layer_is_fresh(2));
    }

    #[test]
    fn sync_targets_copies_new_critics() {
        let mut a = agent(19);
        let buffer = filled_buffer();
        trained(&mut a, &buffer, 10, 6);
        let mut buf = filled_buffer();
        let mut s = full_schedule();
        s.sync_targets = true;
        apply_reset(&mut a, &mut buf, &s, 0, 100).unwrap();
        assert_eq!(a.target1, a.critic1);
        assert_eq!(a.target2, a.critic2);
    }

    #[test]
    fn independent_targets_differ_from_critics() {
        let mut a = agent(23);
        let mut buf = filled_buffer();
        apply_reset(&mut a, &mut buf, &full_schedule(), 0, 100).unwrap();
        assert_ne!(a.target1, a.critic1);
        assert_ne!(a.target2, a.critic2);
    }

    #[test]
    fn depth_exceeding_layers_is_config_error() {
        let mut a = agent(29);
        let mut buf = filled_buffer();
        let mut s = full_schedule();
        s.depth = 4;
        s.mode = crate::nn::ResetMode::LastLayers;
        assert!(matches!(
            apply_reset(&mut a, &mut buf, &s, 0, 100),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn distinct_resets_draw_distinct_parameters() {
        let mut a = agent(31);
        let mut buf = filled_buffer();
        let s = full_schedule();
        apply_reset(&mut a, &mut buf, &s, 0, 100).unwrap();
        let first = a.actor.clone();
        apply_reset(&mut a, &mut buf, &s, 1, 200).unwrap();
        assert_ne!(a.actor, first);
    }

    #[test]
    fn redraws_match_init_distribution_moments() {
        // Fan-in uniform on the first critic layer: bound 1/2 (in_dim 4),
        // mean 0, variance bound^2/3.
        let mut a = agent(37);
        let mut buf = filled_buffer();
        let s = full_schedule();
        let mut values = Vec::new();
        for r in 0..200 {
            apply_reset(&mut a, &mut buf, &s, r, 100 * (r as u64 + 1)).unwrap();
            values.extend_from_slice(&a.critic1.layers()[0].weights[..8]);
        }
        let n = values.len() as f64;
        let mean: f64 = values.iter().sum::<f64>() / n;
        let var: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let bound: f64 = 0.5;
        let expect_var = bound * bound / 3.0;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - expect_var).abs() / expect_var < 0.15, "var {var} vs {expect_var}");
    }

    #[test]
    fn event_records_step_and_networks() {
        let mut a = agent(41);
        let mut buf = filled_buffer();
        let ev = apply_reset(&mut a, &mut buf, &full_schedule(), 2, 300).unwrap();
        assert_eq!(ev.env_step, 300);
        assert_eq!(ev.reset_index, 2);
        assert_eq!(ev.networks_touched, vec!["actor", "critics", "targets"]);
        assert_eq!(ev.seeds_used.len(), 5);
    }
}
