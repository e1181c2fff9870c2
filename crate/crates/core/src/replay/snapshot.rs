//! Binary replay-buffer snapshots.
//!
//! Layout (all little-endian):
//! magic `RBUF`, version u32, n u32, gamma f64, obs_dim u32, act_dim u32,
//! capacity u64, count u64, then `count` transitions oldest-first, each as
//! layer-major doubles: state, action, reward_acc, bootstrap_state, discount.

use std::path::Path;

use super::{ReplayBuffer, Transition};
use crate::bytesio::{put_f64, put_f64_slice, put_u32, put_u64, Reader};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"RBUF";
const VERSION: u32 = 1;

/// Assembly parameters recorded alongside the buffer contents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotMeta {
    pub n: u32,
    pub gamma: f64,
}

/// Serializes the buffer contents and ordering.
pub fn write_snapshot(buffer: &ReplayBuffer, meta: SnapshotMeta) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, meta.n);
    put_f64(&mut out, meta.gamma);
    put_u32(&mut out, buffer.obs_dim() as u32);
    put_u32(&mut out, buffer.act_dim() as u32);
    put_u64(&mut out, buffer.capacity() as u64);
    put_u64(&mut out, buffer.count() as u64);
    for t in buffer.iter_ordered() {
        put_f64_slice(&mut out, &t.state);
        put_f64_slice(&mut out, &t.action);
        put_f64(&mut out, t.reward_acc);
        put_f64_slice(&mut out, &t.bootstrap_state);
        put_f64(&mut out, t.discount);
    }
    out
}

/// Restores a buffer; the round trip is bit-identical in contents and order.
pub fn read_snapshot(bytes: &[u8]) -> Result<(ReplayBuffer, SnapshotMeta)> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(Error::Format("bad snapshot magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let n = r.u32()?;
    let gamma = r.f64()?;
    let obs_dim = r.u32()? as usize;
    let act_dim = r.u32()? as usize;
    let capacity = r.u64()? as usize;
    let count = r.u64()? as usize;
    if count > capacity {
        return Err(Error::Format(format!("count {count} exceeds capacity {capacity}")));
    }
    let mut buffer = ReplayBuffer::new(capacity, obs_dim, act_dim)?;
    for _ in 0..count {
        let state = r.f64_vec(obs_dim)?;
        let action = r.f64_vec(act_dim)?;
        let reward_acc = r.f64()?;
        let bootstrap_state = r.f64_vec(obs_dim)?;
        let discount = r.f64()?;
        buffer.push(Transition {
            state,
            action,
            reward_acc,
            bootstrap_state,
            discount,
        });
    }
    r.finish()?;
    Ok((buffer, SnapshotMeta { n, gamma }))
}

pub fn write_snapshot_file(path: &Path, buffer: &ReplayBuffer, meta: SnapshotMeta) -> Result<()> {
    std::fs::write(path, write_snapshot(buffer, meta))?;
    Ok(())
}

pub fn read_snapshot_file(path: &Path) -> Result<(ReplayBuffer, SnapshotMeta)> {
    let bytes = std::fs::read(path)?;
    read_snapshot(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn filled_buffer(count: usize, capacity: usize) -> ReplayBuffer {
        let mut rng = rng_from_seed(11);
        let mut buf = ReplayBuffer::new(capacity, 3, 1).unwrap();
        for _ in 0..count {
            buf.push(Transition {
                state: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                action: vec![rng.random_range(-1.0..1.0)],
                reward_acc: rng.random_range(-5.0..5.0),
                bootstrap_state: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                discount: 0.99,
            });
        }
        buf
    }

    #[test]
    fn roundtrip_is_identity() {
        let buf = filled_buffer(100, 128);
        let meta = SnapshotMeta { n: 3, gamma: 0.97 };
        let bytes = write_snapshot(&buf, meta);
        let (restored, meta2) = read_snapshot(&bytes).unwrap();
        assert_eq!(meta, meta2);
        assert_eq!(restored.count(), buf.count());
        let a: Vec<&Transition> = buf.iter_ordered().collect();
        let b: Vec<&Transition> = restored.iter_ordered().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn roundtrip_preserves_ring_order_when_wrapped() {
        let buf = filled_buffer(200, 128);
        let bytes = write_snapshot(&buf, SnapshotMeta { n: 1, gamma: 0.99 });
        let (restored, _) = read_snapshot(&bytes).unwrap();
        let a: Vec<&Transition> = buf.iter_ordered().collect();
        let b: Vec<&Transition> = restored.iter_ordered().collect();
        assert_eq!(a, b);
        // A push after restore still evicts the oldest element first.
        let mut restored = restored;
        let oldest = a[1].clone();
        restored.push(Transition {
            state: vec![9.0; 3],
            action: vec![9.0],
            reward_acc: 9.0,
            bootstrap_state: vec![9.0; 3],
            discount: 0.5,
        });
        assert_eq!(restored.iter_ordered().next().unwrap(), &oldest);
    }

    #[test]
    fn truncated_payload_is_format_error() {
        let buf = filled_buffer(10, 16);
        let bytes = write_snapshot(&buf, SnapshotMeta { n: 1, gamma: 0.99 });
        for cut in [3usize, 20, bytes.len() - 1] {
            assert!(matches!(
                read_snapshot(&bytes[..cut]),
                Err(Error::Format(_))
            ));
        }
    }

    #[test]
    fn bad_magic_is_format_error() {
        let buf = filled_buffer(2, 4);
        let mut bytes = write_snapshot(&buf, SnapshotMeta { n: 1, gamma: 0.99 });
        bytes[0] = b'X';
        assert!(matches!(read_snapshot(&bytes), Err(Error::Format(_))));
    }
}
