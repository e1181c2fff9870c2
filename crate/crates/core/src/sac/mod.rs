//! Soft actor-critic: tanh-squashed Gaussian actor, twin critics with
//! double Q-learning, Polyak-averaged target critics, and an auto-tuned
//! entropy temperature, all compatible with n-step TD targets.

mod checkpoint;

pub use checkpoint::{load_checkpoint, read_checkpoint_file, save_checkpoint, write_checkpoint_file};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::nn::{Activation, AdamScalar, AdamState, ForwardCache, GradientBundle, Mlp};
use crate::replay::{Batch, ReplayBuffer};
use crate::rng::mix_named;
use crate::{Error, Result};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Epsilon inside the tanh log-density correction term.
pub const TANH_EPS: f64 = 1e-6;
/// Emitted actions are nudged off the cube boundary so downstream
/// preconditions on the open cube hold even if tanh rounds to exactly 1.
const ACTION_BOUND: f64 = 1.0 - 1e-12;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// SAC hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SacConfig {
    pub gamma: f64,
    /// Polyak rate: target <- (1 - tau) * target + tau * online.
    pub tau: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub lr_alpha: f64,
    pub batch_size: usize,
    /// Entropy target; `None` resolves to -act_dim at construction.
    pub target_entropy: Option<f64>,
    pub init_log_alpha: f64,
    pub hidden_sizes: Vec<usize>,
}

impl Default for SacConfig {
    fn default() -> Self {
        SacConfig {
            gamma: 0.99,
            tau: 0.005,
            lr_actor: 3e-4,
            lr_critic: 3e-4,
            lr_alpha: 3e-4,
            batch_size: 256,
            target_entropy: None,
            init_log_alpha: 0.0,
            hidden_sizes: vec![256, 256],
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma {} outside [0,1)", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config(format!("tau {} outside (0,1]", self.tau)));
        }
        if self.lr_actor <= 0.0 || self.lr_critic <= 0.0 || self.lr_alpha <= 0.0 {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.iter().any(|&h| h == 0) {
            return Err(Error::Config("hidden sizes must be non-empty and positive".into()));
        }
        Ok(())
    }
}

/// A squashed action with its log-density (absent for the deterministic
/// policy).
#[derive(Debug, Clone)]
pub struct ActionSample {
    pub action: Vec<f64>,
    pub log_prob: Option<f64>,
}

/// Construction seeds per network, kept so same-seed resets can reproduce
/// the construction-time draws. Targets share the seeds of their critics:
/// a freshly constructed target is a copy of the fresh critic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkSeeds {
    pub actor: u64,
    pub critic1: u64,
    pub critic2: u64,
}

/// Per-update diagnostics, one record per gradient update.
#[derive(Debug, Clone, Copy)]
pub struct UpdateDiagnostics {
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub alpha_loss: f64,
    pub alpha: f64,
    pub q_mean: f64,
    pub q_max: f64,
    pub param_norm: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SacAgent {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub config: SacConfig,
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub target1: Mlp,
    pub target2: Mlp,
    pub log_alpha: f64,
    pub actor_opt: AdamState,
    pub critic1_opt: AdamState,
    pub critic2_opt: AdamState,
    pub alpha_opt: AdamScalar,
    pub target_entropy: f64,
    seeds: NetworkSeeds,
}

impl SacAgent {
    /// Builds a fresh agent. `l2` is the L2 coefficient applied through the
    /// optimizers of actor and critics; `dropout` the hidden-activation
    /// dropout rate of actor and critics. Targets start as copies of the
    /// critics.
    pub fn new(
        obs_dim: usize,
        act_dim: usize,
        config: SacConfig,
        l2: f64,
        dropout: f64,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if obs_dim == 0 || act_dim == 0 {
            return Err(Error::Config("observation/action dims must be positive".into()));
        }
        let seeds = NetworkSeeds {
            actor: mix_named(seed, "actor", 0),
            critic1: mix_named(seed, "critic1", 0),
            critic2: mix_named(seed, "critic2", 0),
        };
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend_from_slice(&config.hidden_sizes);
        actor_sizes.push(2 * act_dim);
        let mut critic_sizes = vec![obs_dim + act_dim];
        critic_sizes.extend_from_slice(&config.hidden_sizes);
        critic_sizes.push(1);

        let mut actor = Mlp::init(&actor_sizes, Activation::Relu, seeds.actor)?;
        let mut critic1 = Mlp::init(&critic_sizes, Activation::Relu, seeds.critic1)?;
        let mut critic2 = Mlp::init(&critic_sizes, Activation::Relu, seeds.critic2)?;
        actor.set_dropout(dropout)?;
        critic1.set_dropout(dropout)?;
        critic2.set_dropout(dropout)?;
        let target1 = critic1.clone();
        let target2 = critic2.clone();

        let actor_opt = AdamState::for_mlp(&actor, config.lr_actor).with_weight_decay(l2);
        let critic1_opt = AdamState::for_mlp(&critic1, config.lr_critic).with_weight_decay(l2);
        let critic2_opt = AdamState::for_mlp(&critic2, config.lr_critic).with_weight_decay(l2);
        let alpha_opt = AdamScalar::new(config.lr_alpha);
        let target_entropy = config.target_entropy.unwrap_or(-(act_dim as f64));
        Ok(SacAgent {
            obs_dim,
            act_dim,
            log_alpha: config.init_log_alpha,
            config,
            actor,
            critic1,
            critic2,
            target1,
            target2,
            actor_opt,
            critic1_opt,
            critic2_opt,
            alpha_opt,
            target_entropy,
            seeds,
        })
    }

    pub fn construction_seeds(&self) -> NetworkSeeds {
        self.seeds
    }

    pub(crate) fn restore_seeds(&mut self, seeds: NetworkSeeds) {
        self.seeds = seeds;
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    /// Splits the actor head into (mean, clamped log-std).
    fn split_head(&self, head: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mean = head[..self.act_dim].to_vec();
        let log_std: Vec<f64> = head[self.act_dim..]
            .iter()
            .map(|s| s.clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect();
        (mean, log_std)
    }

    /// Squashes pre-tanh values and computes the policy log-density:
    /// Gaussian log-pdf of u minus the tanh volume correction.
    fn squash(&self, mean: &[f64], log_std: &[f64], noise: &[f64]) -> (Vec<f64>, f64) {
        let mut action = Vec::with_capacity(self.act_dim);
        let mut log_prob = 0.0;
        for d in 0..self.act_dim {
            let std = log_std[d].exp();
            let u = mean[d] + std * noise[d];
            let a = u.tanh().clamp(-ACTION_BOUND, ACTION_BOUND);
            log_prob += -HALF_LN_2PI - log_std[d] - 0.5 * noise[d] * noise[d];
            log_prob -= (1.0 - a * a + TANH_EPS).ln();
            action.push(a);
        }
        (action, log_prob)
    }

    /// Policy head evaluated at `obs` (no dropout).
    fn policy_head(&self, obs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (head, _) = self
            .actor
            .forward(obs, false, Option::<&mut rand_chacha::ChaCha8Rng>::None)?;
        if head.iter().any(|h| !h.is_finite()) {
            return Err(Error::Numeric("non-finite actor output".into()));
        }
        Ok(self.split_head(&head))
    }

    /// Selects an action. Stochastic: tanh(mean + std * xi) with its
    /// log-density. Deterministic: tanh(mean), no density.
    pub fn select_action<R: Rng>(&self, obs: &[f64], stochastic: bool, rng: &mut R) -> Result<ActionSample> {
        let (mean, log_std) = self.policy_head(obs)?;
        if stochastic {
            let noise: Vec<f64> = (0..self.act_dim).map(|_| rng.sample(StandardNormal)).collect();
            let (action, log_prob) = self.squash(&mean, &log_std, &noise);
            Ok(ActionSample {
                action,
                log_prob: Some(log_prob),
            })
        } else {
            let action = mean
                .iter()
                .map(|m| m.tanh().clamp(-ACTION_BOUND, ACTION_BOUND))
                .collect();
            Ok(ActionSample {
                action,
                log_prob: None,
            })
        }
    }

    fn critic_input(obs: &[f64], action: &[f64], scratch: &mut Vec<f64>) {
        scratch.clear();
        scratch.extend_from_slice(obs);
        scratch.extend_from_slice(action);
    }

    /// Q value of a single (s, a) under the given critic (no dropout).
    #[cfg_attr(not(test), allow(dead_code))]
    fn q_value(critic: &Mlp, input: &[f64]) -> Result<f64> {
        let (out, _) = critic.forward(input, false, Option::<&mut rand_chacha::ChaCha8Rng>::None)?;
        Ok(out[0])
    }

    /// n-step-compatible TD targets:
    /// `y_i = reward_acc_i + discount_i * (min(T1,T2)(s'_i, a') - alpha * log pi(a'|s'_i))`,
    /// with a' freshly sampled at the bootstrap state. No gradient flows
    /// through y.
    pub fn compute_targets<R: Rng>(&self, batch: &Batch, rng: &mut R) -> Result<Vec<f64>> {
        let alpha = self.alpha();
        let mut targets = Vec::with_capacity(batch.len());
        let mut input = Vec::with_capacity(self.obs_dim + self.act_dim);
        let mut actor_cache = ForwardCache::default();
        let mut t1_cache = ForwardCache::default();
        let mut t2_cache = ForwardCache::default();
        let mut noise = vec![0.0; self.act_dim];
        for i in 0..batch.len() {
            let s_next = &batch.bootstrap_states[i];
            self.actor
                .forward_into(s_next, false, Option::<&mut R>::None, &mut actor_cache)?;
            if actor_cache.output().iter().any(|h| !h.is_finite()) {
                return Err(Error::Numeric(format!("non-finite actor output at sample {i}")));
            }
            let (mean, log_std) = self.split_head(actor_cache.output());
            for n in noise.iter_mut() {
                *n = rng.sample(StandardNormal);
            }
            let (a_next, log_prob) = self.squash(&mean, &log_std, &noise);
            Self::critic_input(s_next, &a_next, &mut input);
            self.target1
                .forward_into(&input, false, Option::<&mut R>::None, &mut t1_cache)?;
            self.target2
                .forward_into(&input, false, Option::<&mut R>::None, &mut t2_cache)?;
            let q1 = t1_cache.output()[0];
            let q2 = t2_cache.output()[0];
            let y = batch.reward_acc[i] + batch.discounts[i] * (q1.min(q2) - alpha * log_prob);
            if !y.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite TD target at sample {i} (TD divergence candidate)"
                )));
            }
            targets.push(y);
        }
        Ok(targets)
    }

    /// Mean over the batch and both critics of (Q_j(s,a) - y)^2, evaluated
    /// without touching parameters (no dropout).
    pub fn critic_loss(&self, batch: &Batch, targets: &[f64]) -> Result<f64> {
        let (loss, ..) = self.critic_pass::<rand_chacha::ChaCha8Rng>(batch, targets, None, false)?;
        Ok(loss)
    }

    /// Loss plus per-critic gradient bundles (no dropout), for gradient
    /// verification.
    pub fn critic_gradients(
        &self,
        batch: &Batch,
        targets: &[f64],
    ) -> Result<(f64, GradientBundle, GradientBundle)> {
        let (loss, grads, ..) = self.critic_pass::<rand_chacha::ChaCha8Rng>(batch, targets, None, true)?;
        let (g1, g2) = grads.expect("requested gradients");
        Ok((loss, g1, g2))
    }

    /// Shared critic forward/backward. Returns (loss, optional gradients,
    /// mean over the batch of min(Q1,Q2), max Q over batch and critics).
    fn critic_pass<R: Rng>(
        &self,
        batch: &Batch,
        targets: &[f64],
        mut dropout_rng: Option<&mut R>,
        want_grads: bool,
    ) -> Result<(f64, Option<(GradientBundle, GradientBundle)>, f64, f64)> {
        if targets.len() != batch.len() {
            return Err(Error::Shape("targets length != batch size".into()));
        }
        if batch.is_empty() {
            return Err(Error::Contract("empty batch".into()));
        }
        let b = batch.len() as f64;
        let mut grads = if want_grads {
            Some((
                GradientBundle::zeroed_like(&self.critic1),
                GradientBundle::zeroed_like(&self.critic2),
            ))
        } else {
            None
        };
        let mut input = Vec::with_capacity(self.obs_dim + self.act_dim);
        let mut cache = ForwardCache::default();
        let mut loss_sum = 0.0;
        let mut q_max = f64::NEG_INFINITY;
        let mut q1_vals = vec![0.0; batch.len()];
        let mut q_min_sum = 0.0;
        for j in 0..2 {
            let critic = if j == 0 { &self.critic1 } else { &self.critic2 };
            for i in 0..batch.len() {
                Self::critic_input(&batch.states[i], &batch.actions[i], &mut input);
                let training = dropout_rng.is_some();
                critic.forward_into(&input, training, dropout_rng.as_deref_mut(), &mut cache)?;
                let q = cache.output()[0];
                let e = q - targets[i];
                loss_sum += e * e;
                q_max = q_max.max(q);
                if j == 0 {
                    q1_vals[i] = q;
                } else {
                    q_min_sum += q1_vals[i].min(q);
                }
                if let Some((g1, g2)) = grads.as_mut() {
                    let bundle = if j == 0 { g1 } else { g2 };
                    critic.backward_accumulate(&cache, &[e / b], bundle)?;
                }
            }
        }
        Ok((loss_sum / (2.0 * b), grads, q_min_sum / b, q_max))
    }

    /// One Adam step on each critic against freshly computed targets.
    /// Returns the pre-step loss.
    pub fn update_critics<R: Rng>(&mut self, batch: &Batch, rng: &mut R) -> Result<f64> {
        let (loss, _) = self.update_critics_detailed(batch, rng)?;
        Ok(loss)
    }

    fn update_critics_detailed<R: Rng>(
        &mut self,
        batch: &Batch,
        rng: &mut R,
    ) -> Result<(f64, CriticUpdateStats)> {
        let targets = self.compute_targets(batch, rng)?;
        let use_dropout = self.critic1.dropout_rate() > 0.0;
        let (loss, grads, q_mean, q_max) = if use_dropout {
            self.critic_pass(batch, &targets, Some(rng), true)?
        } else {
            self.critic_pass::<R>(batch, &targets, None, true)?
        };
        let (g1, g2) = grads.expect("requested gradients");
        let grad_sq = g1.sq_norm() + g2.sq_norm();
        self.critic1_opt.step(&mut self.critic1, &g1)?;
        self.critic2_opt.step(&mut self.critic2, &g2)?;
        Ok((
            loss,
            CriticUpdateStats {
                q_mean,
                q_max,
                grad_sq,
            },
        ))
    }

    /// Actor loss under fixed reparameterization noise (no dropout):
    /// `mean_i [alpha * log pi(a_i|s_i) - min(Q1,Q2)(s_i, a_i)]`.
    pub fn actor_loss(&self, batch: &Batch, noise: &[Vec<f64>]) -> Result<f64> {
        let (loss, _) = self.actor_pass::<rand_chacha::ChaCha8Rng>(batch, noise, None, false)?;
        Ok(loss)
    }

    /// Actor loss and gradient under fixed noise (no dropout).
    pub fn actor_gradients(&self, batch: &Batch, noise: &[Vec<f64>]) -> Result<(f64, GradientBundle)> {
        let (loss, g) = self.actor_pass::<rand_chacha::ChaCha8Rng>(batch, noise, None, true)?;
        Ok((loss, g.expect("requested gradients")))
    }

    /// Shared actor forward/backward with reparameterized samples. The
    /// critics are frozen here; their input gradient routes dQ/da into the
    /// policy head.
    fn actor_pass<R: Rng>(
        &self,
        batch: &Batch,
        noise: &[Vec<f64>],
        mut dropout_rng: Option<&mut R>,
        want_grads: bool,
    ) -> Result<(f64, Option<GradientBundle>)> {
        if noise.len() != batch.len() {
            return Err(Error::Shape("noise rows != batch size".into()));
        }
        if batch.is_empty() {
            return Err(Error::Contract("empty batch".into()));
        }
        let b = batch.len() as f64;
        let alpha = self.alpha();
        let mut bundle = want_grads.then(|| GradientBundle::zeroed_like(&self.actor));
        let mut actor_cache = ForwardCache::default();
        let mut c1_cache = ForwardCache::default();
        let mut c2_cache = ForwardCache::default();
        let mut input = Vec::with_capacity(self.obs_dim + self.act_dim);
        let mut head_grad = vec![0.0; 2 * self.act_dim];
        let mut loss_sum = 0.0;
        for i in 0..batch.len() {
            let obs = &batch.states[i];
            let training = dropout_rng.is_some();
            self.actor
                .forward_into(obs, training, dropout_rng.as_deref_mut(), &mut actor_cache)?;
            let head = actor_cache.output().to_vec();
            if head.iter().any(|h| !h.is_finite()) {
                return Err(Error::Numeric(format!("non-finite actor output at sample {i}")));
            }
            let (mean, log_std) = self.split_head(&head);
            let xi = &noise[i];
            let (action, log_prob) = self.squash(&mean, &log_std, xi);

            Self::critic_input(obs, &action, &mut input);
            self.critic1
                .forward_into(&input, false, Option::<&mut R>::None, &mut c1_cache)?;
            self.critic2
                .forward_into(&input, false, Option::<&mut R>::None, &mut c2_cache)?;
            let q1 = c1_cache.output()[0];
            let q2 = c2_cache.output()[0];
            let (q_min, min_cache, min_critic) = if q1 <= q2 {
                (q1, &c1_cache, &self.critic1)
            } else {
                (q2, &c2_cache, &self.critic2)
            };
            loss_sum += alpha * log_prob - q_min;

            if bundle.is_some() {
                // dQ/da via the input gradient of the argmin critic.
                let dq_dinput = min_critic.input_gradient(min_cache, &[1.0])?;
                let dq_da = &dq_dinput[self.obs_dim..];
                for d in 0..self.act_dim {
                    let std = log_std[d].exp();
                    let u = mean[d] + std * xi[d];
                    let t = u.tanh().clamp(-ACTION_BOUND, ACTION_BOUND);
                    let c = 1.0 - t * t + TANH_EPS;
                    let sech_sq = 1.0 - t * t;
                    let dlogp_du = 2.0 * t * sech_sq / c;
                    let da_du = sech_sq;
                    let g_mean = alpha * dlogp_du - dq_da[d] * da_du;
                    let du_ds = std * xi[d];
                    let mut g_log_std = alpha * (-1.0 + dlogp_du * du_ds) - dq_da[d] * da_du * du_ds;
                    // The clamped log-std has zero gradient at the rails.
                    let raw = head[self.act_dim + d];
                    if !(LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
                        g_log_std = 0.0;
                    }
                    head_grad[d] = g_mean / b;
                    head_grad[self.act_dim + d] = g_log_std / b;
                }
                self.actor
                    .backward_accumulate(&actor_cache, &head_grad, bundle.as_mut().unwrap())?;
            }
        }
        Ok((loss_sum / b, bundle))
    }

    /// One Adam step on the actor (critics frozen). Returns the pre-step loss.
    pub fn update_actor<R: Rng>(&mut self, batch: &Batch, rng: &mut R) -> Result<f64> {
        let (loss, _) = self.update_actor_detailed(batch, rng)?;
        Ok(loss)
    }

    fn update_actor_detailed<R: Rng>(&mut self, batch: &Batch, rng: &mut R) -> Result<(f64, f64)> {
        let noise = self.draw_noise(batch.len(), rng);
        let use_dropout = self.actor.dropout_rate() > 0.0;
        let (loss, bundle) = if use_dropout {
            self.actor_pass(batch, &noise, Some(rng), true)?
        } else {
            self.actor_pass::<R>(batch, &noise, None, true)?
        };
        let bundle = bundle.expect("requested gradients");
        let grad_sq = bundle.sq_norm();
        self.actor_opt.step(&mut self.actor, &bundle)?;
        Ok((loss, grad_sq))
    }

    fn draw_noise<R: Rng>(&self, rows: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| (0..self.act_dim).map(|_| rng.sample(StandardNormal)).collect())
            .collect()
    }

    /// Temperature loss under fixed noise:
    /// `mean_i [-exp(log_alpha) * (log pi(a_i|s_i) + target_entropy)]`,
    /// log-probs detached.
    pub fn alpha_loss(&self, batch: &Batch, noise: &[Vec<f64>]) -> Result<f64> {
        Ok(self.alpha_terms(batch, noise)?.0)
    }

    /// Loss and d(loss)/d(log_alpha) under fixed noise.
    pub fn alpha_gradient(&self, batch: &Batch, noise: &[Vec<f64>]) -> Result<(f64, f64)> {
        self.alpha_terms(batch, noise)
    }

    fn alpha_terms(&self, batch: &Batch, noise: &[Vec<f64>]) -> Result<(f64, f64)> {
        if noise.len() != batch.len() {
            return Err(Error::Shape("noise rows != batch size".into()));
        }
        if batch.is_empty() {
            return Err(Error::Contract("empty batch".into()));
        }
        let alpha = self.alpha();
        let mut cache = ForwardCache::default();
        let mut sum = 0.0;
        for i in 0..batch.len() {
            self.actor.forward_into(
                &batch.states[i],
                false,
                Option::<&mut rand_chacha::ChaCha8Rng>::None,
                &mut cache,
            )?;
            if cache.output().iter().any(|h| !h.is_finite()) {
                return Err(Error::Numeric(format!("non-finite actor output at sample {i}")));
            }
            let (mean, log_std) = self.split_head(cache.output());
            let (_, log_prob) = self.squash(&mean, &log_std, &noise[i]);
            sum += log_prob + self.target_entropy;
        }
        let mean_excess = sum / batch.len() as f64;
        // loss = -alpha * mean_excess; d(loss)/d(log_alpha) = -alpha * mean_excess.
        Ok((-alpha * mean_excess, -alpha * mean_excess))
    }

    /// One Adam step on log_alpha. Returns the pre-step loss.
    pub fn update_alpha<R: Rng>(&mut self, batch: &Batch, rng: &mut R) -> Result<f64> {
        let noise = self.draw_noise(batch.len(), rng);
        let (loss, grad) = self.alpha_terms(batch, &noise)?;
        self.alpha_opt.step(&mut self.log_alpha, grad)?;
        Ok(loss)
    }

    /// target <- (1 - tau) * target + tau * online, both critics.
    pub fn polyak_update(&mut self) {
        let tau = self.config.tau;
        polyak_into(&mut self.target1, &self.critic1, tau);
        polyak_into(&mut self.target2, &self.critic2, tau);
    }

    /// One full gradient update on one sampled batch: critics, actor, alpha,
    /// Polyak, in that order.
    pub fn agent_update<R: Rng>(&mut self, buffer: &ReplayBuffer, rng: &mut R) -> Result<UpdateDiagnostics> {
        let batch = buffer.sample_uniform(self.config.batch_size, rng)?;
        let (critic_loss, cstats) = self.update_critics_detailed(&batch, rng)?;
        let (actor_loss, actor_grad_sq) = self.update_actor_detailed(&batch, rng)?;
        let noise = self.draw_noise(batch.len(), rng);
        let (alpha_loss, alpha_grad) = self.alpha_terms(&batch, &noise)?;
        self.alpha_opt.step(&mut self.log_alpha, alpha_grad)?;
        self.polyak_update();
        Ok(UpdateDiagnostics {
            critic_loss,
            actor_loss,
            alpha_loss,
            alpha: self.alpha(),
            q_mean: cstats.q_mean,
            q_max: cstats.q_max,
            param_norm: self.param_norm(),
            grad_norm: (cstats.grad_sq + actor_grad_sq).sqrt(),
        })
    }

    /// L2 norm over all online-network parameters (actor and both critics).
    pub fn param_norm(&self) -> f64 {
        (self.actor.sq_norm() + self.critic1.sq_norm() + self.critic2.sq_norm()).sqrt()
    }

    pub fn params_finite(&self) -> bool {
        self.actor.is_finite()
            && self.critic1.is_finite()
            && self.critic2.is_finite()
            && self.target1.is_finite()
            && self.target2.is_finite()
            && self.log_alpha.is_finite()
    }
}

struct CriticUpdateStats {
    q_mean: f64,
    q_max: f64,
    grad_sq: f64,
}

fn polyak_into(target: &mut Mlp, online: &Mlp, tau: f64) {
    for (tl, ol) in target.layers.iter_mut().zip(online.layers.iter()) {
        for (t, o) in tl.weights.iter_mut().zip(&ol.weights) {
            *t = (1.0 - tau) * *t + tau * o;
        }
        for (t, o) in tl.bias.iter_mut().zip(&ol.bias) {
            *t = (1.0 - tau) * *t + tau * o;
        }
    }
}
