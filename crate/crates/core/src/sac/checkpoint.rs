//! Binary agent checkpoints: every network's parameters plus Adam moments
//! and the temperature, layer-major doubles behind a small header. Used by
//! heavy-priming resume and inspection tooling.

use std::path::Path;

use super::{NetworkSeeds, SacAgent};
use crate::bytesio::{put_f64, put_f64_slice, put_u32, put_u64, Reader};
use crate::nn::{AdamState, Mlp};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"SACK";
const VERSION: u32 = 1;

fn put_mlp(out: &mut Vec<u8>, mlp: &Mlp) {
    put_f64_slice(out, &mlp.flatten_params());
}

fn put_adam(out: &mut Vec<u8>, adam: &AdamState) {
    for layer in adam.layers_raw() {
        put_f64_slice(out, &layer.m_w);
        put_f64_slice(out, &layer.v_w);
        put_f64_slice(out, &layer.m_b);
        put_f64_slice(out, &layer.v_b);
        put_u64(out, layer.t);
    }
}

fn read_mlp(r: &mut Reader, mlp: &mut Mlp) -> Result<()> {
    let flat = r.f64_vec(mlp.param_count())?;
    mlp.load_params(&flat)
}

fn read_adam(r: &mut Reader, adam: &mut AdamState) -> Result<()> {
    for layer in adam.layers_raw_mut() {
        let m_w = r.f64_vec(layer.m_w.len())?;
        let v_w = r.f64_vec(layer.v_w.len())?;
        let m_b = r.f64_vec(layer.m_b.len())?;
        let v_b = r.f64_vec(layer.v_b.len())?;
        let t = r.u64()?;
        layer.m_w = m_w;
        layer.v_w = v_w;
        layer.m_b = m_b;
        layer.v_b = v_b;
        layer.t = t;
    }
    Ok(())
}

/// Serializes the full mutable state of an agent.
pub fn save_checkpoint(agent: &SacAgent) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, agent.obs_dim as u32);
    put_u32(&mut out, agent.act_dim as u32);
    put_u32(&mut out, agent.config.hidden_sizes.len() as u32);
    for h in &agent.config.hidden_sizes {
        put_u32(&mut out, *h as u32);
    }
    let seeds = agent.construction_seeds();
    put_u64(&mut out, seeds.actor);
    put_u64(&mut out, seeds.critic1);
    put_u64(&mut out, seeds.critic2);
    put_f64(&mut out, agent.log_alpha);
    let (m, v, t) = agent.alpha_opt.state();
    put_f64(&mut out, m);
    put_f64(&mut out, v);
    put_u64(&mut out, t);
    put_f64(&mut out, agent.target_entropy);
    put_mlp(&mut out, &agent.actor);
    put_mlp(&mut out, &agent.critic1);
    put_mlp(&mut out, &agent.critic2);
    put_mlp(&mut out, &agent.target1);
    put_mlp(&mut out, &agent.target2);
    put_adam(&mut out, &agent.actor_opt);
    put_adam(&mut out, &agent.critic1_opt);
    put_adam(&mut out, &agent.critic2_opt);
    out
}

/// Restores a checkpoint into an agent of the same architecture.
pub fn load_checkpoint(bytes: &[u8], agent: &mut SacAgent) -> Result<()> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(Error::Format("bad checkpoint magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let obs_dim = r.u32()? as usize;
    let act_dim = r.u32()? as usize;
    if obs_dim != agent.obs_dim || act_dim != agent.act_dim {
        return Err(Error::Format(format!(
            "checkpoint dims ({obs_dim}, {act_dim}) do not match agent ({}, {})",
            agent.obs_dim, agent.act_dim
        )));
    }
    let n_hidden = r.u32()? as usize;
    let mut hidden = Vec::with_capacity(n_hidden);
    for _ in 0..n_hidden {
        hidden.push(r.u32()? as usize);
    }
    if hidden != agent.config.hidden_sizes {
        return Err(Error::Format(format!(
            "checkpoint hidden sizes {hidden:?} do not match agent {:?}",
            agent.config.hidden_sizes
        )));
    }
    let seeds = NetworkSeeds {
        actor: r.u64()?,
        critic1: r.u64()?,
        critic2: r.u64()?,
    };
    agent.log_alpha = r.f64()?;
    let m = r.f64()?;
    let v = r.f64()?;
    let t = r.u64()?;
    agent.alpha_opt.restore_state(m, v, t);
    agent.target_entropy = r.f64()?;
    read_mlp(&mut r, &mut agent.actor)?;
    read_mlp(&mut r, &mut agent.critic1)?;
    read_mlp(&mut r, &mut agent.critic2)?;
    read_mlp(&mut r, &mut agent.target1)?;
    read_mlp(&mut r, &mut agent.target2)?;
    read_adam(&mut r, &mut agent.actor_opt)?;
    read_adam(&mut r, &mut agent.critic1_opt)?;
    read_adam(&mut r, &mut agent.critic2_opt)?;
    r.finish()?;
    agent.restore_seeds(seeds);
    Ok(())
}

pub fn write_checkpoint_file(path: &Path, agent: &SacAgent) -> Result<()> {
    std::fs::write(path, save_checkpoint(agent))?;
    Ok(())
}

pub fn read_checkpoint_file(path: &Path, agent: &mut SacAgent) -> Result<()> {
    let bytes = std::fs::read(path)?;
    load_checkpoint(&bytes, agent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replay::{ReplayBuffer, Transition};
    use crate::rng::rng_from_seed;
    use crate::sac::SacConfig;
    use rand::Rng;

    fn trained_agent() -> SacAgent {
        let config = SacConfig {
            hidden_sizes: vec![8, 8],
            batch_size: 8,
            ..SacConfig::default()
        };
        let mut agent = SacAgent::new(3, 1, config, 0.0, 0.0, 77).unwrap();
        let mut buffer = ReplayBuffer::new(64, 3, 1).unwrap();
        let mut rng = rng_from_seed(1);
        for _ in 0..32 {
            buffer.push(Transition {
                state: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                action: vec![rng.random_range(-0.9..0.9)],
                reward_acc: rng.random_range(-1.0..1.0),
                bootstrap_state: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                discount: 0.99,
            });
        }
        for _ in 0..10 {
            agent.agent_update(&buffer, &mut rng).unwrap();
        }
        agent
    }

    #[test]
    fn roundtrip_restores_full_state() {
        let agent = trained_agent();
        let bytes = save_checkpoint(&agent);
        let config = agent.config.clone();
        let mut restored = SacAgent::new(3, 1, config, 0.0, 0.0, 1234).unwrap();
        load_checkpoint(&bytes, &mut restored).unwrap();
        assert_eq!(restored.actor, agent.actor);
        assert_eq!(restored.critic1, agent.critic1);
        assert_eq!(restored.target2, agent.target2);
        assert_eq!(restored.log_alpha, agent.log_alpha);
        assert_eq!(restored.actor_opt, agent.actor_opt);
        assert_eq!(restored.construction_seeds(), agent.construction_seeds());

        // Restored agent continues identically.
        let mut buffer = ReplayBuffer::new(8, 3, 1).unwrap();
        buffer.push(Transition {
            state: vec![0.1, 0.2, 0.3],
            action: vec![0.4],
            reward_acc: 1.0,
            bootstrap_state: vec![0.2, 0.1, 0.0],
            discount: 0.99,
        });
        let mut a = agent.clone();
        let mut b = restored;
        a.agent_update(&buffer, &mut rng_from_seed(5)).unwrap();
        b.agent_update(&buffer, &mut rng_from_seed(5)).unwrap();
        assert_eq!(a.actor, b.actor);
        assert_eq!(a.critic2, b.critic2);
    }

    #[test]
    fn corrupt_checkpoint_is_format_error() {
        let agent = trained_agent();
        let bytes = save_checkpoint(&agent);
        let mut other = SacAgent::new(3, 1, agent.config.clone(), 0.0, 0.0, 0).unwrap();
        assert!(matches!(
            load_checkpoint(&bytes[..bytes.len() - 3], &mut other),
            Err(Error::Format(_))
        ));
        let mut wrong_dims = SacAgent::new(4, 1, agent.config.clone(), 0.0, 0.0, 0).unwrap();
        assert!(matches!(
            load_checkpoint(&bytes, &mut wrong_dims),
            Err(Error::Format(_))
        ));
    }
}
