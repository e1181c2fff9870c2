use rand::Rng;
use std::f64::consts::PI;

use crate::rng::rng_from_seed;

// Fixed physics. Torque enters as gain * action with action in [-1, 1].
pub(crate) const MASS: f64 = 1.0;
pub(crate) const LENGTH: f64 = 1.0;
pub(crate) const GRAVITY: f64 = 10.0;
pub(crate) const FRICTION: f64 = 0.05;
pub(crate) const TORQUE_GAIN: f64 = 2.0;
pub(crate) const DT: f64 = 0.05;
/// Internal semi-implicit Euler substeps per control step. One substep at
/// dt = 0.05 lets the integrator inject visible energy on fast swings; eight
/// keep the zero-torque energy drift below 1e-6 per step.
pub(crate) const SUBSTEPS: u32 = 8;

pub(crate) const EPISODE_LEN: u32 = 200;

/// Torque-limited pendulum swing-up. The angle is measured from upright
/// (theta = 0 is the goal, theta = pi hangs down). Observation is
/// (cos theta, sin theta, theta_dot).
#[derive(Debug, Clone)]
pub struct Pendulum {
    pub(crate) sparse: bool,
    theta: f64,
    theta_dot: f64,
    steps: u32,
}

impl Pendulum {
    pub fn new(sparse: bool) -> Self {
        Pendulum {
            sparse,
            theta: PI,
            theta_dot: 0.0,
            steps: 0,
        }
    }

    pub fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        self.theta = rng.random_range(-PI..PI);
        self.theta_dot = rng.random_range(-1.0..1.0);
        self.steps = 0;
        self.observe()
    }

    pub fn observe(&self) -> Vec<f64> {
        vec![self.theta.cos(), self.theta.sin(), self.theta_dot]
    }

    /// Advances one control step with torque = TORQUE_GAIN * action.
    /// Returns (observation, reward, truncated).
    pub fn step(&mut self, action: f64) -> (Vec<f64>, f64, bool) {
        let torque = TORQUE_GAIN * action;
        let h = DT / SUBSTEPS as f64;
        let inertia = MASS * LENGTH * LENGTH;
        for _ in 0..SUBSTEPS {
            let accel =
                GRAVITY / LENGTH * self.theta.sin() + (torque - FRICTION * self.theta_dot) / inertia;
            self.theta_dot += h * accel;
            self.theta += h * self.theta_dot;
        }
        self.steps += 1;
        let cos = self.theta.cos();
        let reward = if self.sparse {
            if cos > 0.95 {
                1.0
            } else {
                0.0
            }
        } else {
            (1.0 + cos) / 2.0 - 0.001 * torque * torque
        };
        (self.observe(), reward, self.steps >= EPISODE_LEN)
    }

    /// Kinetic plus potential energy; potential is maximal upright.
    pub fn mechanical_energy(&self) -> f64 {
        0.5 * MASS * LENGTH * LENGTH * self.theta_dot * self.theta_dot
            + MASS * GRAVITY * LENGTH * self.theta.cos()
    }

    #[cfg(test)]
    pub(crate) fn state(&self) -> (f64, f64) {
        (self.theta, self.theta_dot)
    }

    #[cfg(test)]
    pub(crate) fn set_state(&mut self, theta: f64, theta_dot: f64) {
        self.theta = theta;
        self.theta_dot = theta_dot;
    }
}
