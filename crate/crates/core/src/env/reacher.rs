use rand::Rng;
use std::f64::consts::PI;

use crate::rng::rng_from_seed;

// Two-link planar arm viewed from above (no gravity). Joints are torque
// driven with viscous damping, so the arm behaves close to velocity control.
pub(crate) const LINK1: f64 = 0.5;
pub(crate) const LINK2: f64 = 0.5;
pub(crate) const TORQUE_GAIN: f64 = 10.0;
pub(crate) const DAMPING: f64 = 2.0;
pub(crate) const DT: f64 = 0.05;
pub(crate) const SUBSTEPS: u32 = 8;
pub(crate) const EPISODE_LEN: u32 = 200;
/// Target radius range, inside the reachable annulus.
pub(crate) const TARGET_R_MIN: f64 = 0.25;
pub(crate) const TARGET_R_MAX: f64 = 0.9;
pub(crate) const SPARSE_RADIUS: f64 = 0.05;

/// Observation: (cos q1, sin q1, cos q2, sin q2, qd1, qd2, target_x, target_y).
#[derive(Debug, Clone)]
pub struct Reacher {
    pub(crate) sparse: bool,
    q: [f64; 2],
    qd: [f64; 2],
    target: [f64; 2],
    steps: u32,
}

impl Reacher {
    pub fn new(sparse: bool) -> Self {
        Reacher {
            sparse,
            q: [0.0; 2],
            qd: [0.0; 2],
            target: [TARGET_R_MIN, 0.0],
            steps: 0,
        }
    }

    pub fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        self.q = [rng.random_range(-PI..PI), rng.random_range(-PI..PI)];
        self.qd = [0.0, 0.0];
        let radius = rng.random_range(TARGET_R_MIN..TARGET_R_MAX);
        let angle = rng.random_range(-PI..PI);
        self.target = [radius * angle.cos(), radius * angle.sin()];
        self.steps = 0;
        self.observe()
    }

    pub fn observe(&self) -> Vec<f64> {
        vec![
            self.q[0].cos(),
            self.q[0].sin(),
            self.q[1].cos(),
            self.q[1].sin(),
            self.qd[0],
            self.qd[1],
            self.target[0],
            self.target[1],
        ]
    }

    fn fingertip(&self) -> [f64; 2] {
        let a = self.q[0];
        let b = self.q[0] + self.q[1];
        [
            LINK1 * a.cos() + LINK2 * b.cos(),
            LINK1 * a.sin() + LINK2 * b.sin(),
        ]
    }

    pub fn step(&mut self, action: &[f64]) -> (Vec<f64>, f64, bool) {
        let h = DT / SUBSTEPS as f64;
        for _ in 0..SUBSTEPS {
            for j in 0..2 {
                let accel = TORQUE_GAIN * action[j] - DAMPING * self.qd[j];
                self.qd[j] += h * accel;
                self.q[j] += h * self.qd[j];
            }
        }
        self.steps += 1;
        let tip = self.fingertip();
        let dx = tip[0] - self.target[0];
        let dy = tip[1] - self.target[1];
        let dist_sq = dx * dx + dy * dy;
        let reward = if self.sparse {
            if dist_sq.sqrt() < SPARSE_RADIUS {
                1.0
            } else {
                0.0
            }
        } else {
            (-4.0 * dist_sq).exp()
        };
        (self.observe(), reward, self.steps >= EPISODE_LEN)
    }
}
