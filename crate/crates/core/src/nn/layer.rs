use rand::Rng;

use super::Activation;
use crate::rng::{mix, rng_from_seed};

/// Salt separating the subnetwork-mask stream from the value stream, so
/// masked re-draws stay positionally aligned with a full fresh draw.
const SUBNET_MASK_SALT: u64 = 0x5bd1_e995;

/// A dense layer `y = activation(W x + b)`.
///
/// Weights are row-major with shape `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub(crate) in_dim: usize,
    pub(crate) out_dim: usize,
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: Vec<f64>,
    pub(crate) activation: Activation,
}

impl DenseLayer {
    /// Draws a fresh layer from the initialization distribution:
    /// fan-in uniform with bound `1/sqrt(in_dim)` for weights and biases.
    /// The draw stream is a pure function of `(seed, layer_index)`, so a
    /// single layer can be re-drawn later without replaying the others.
    pub fn init(in_dim: usize, out_dim: usize, activation: Activation, seed: u64, layer_index: usize) -> Self {
        let mut layer = DenseLayer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
            activation,
        };
        layer.redraw(seed, layer_index);
        layer
    }

    /// Overwrites all parameters with fresh init draws for `(seed, layer_index)`.
    pub fn redraw(&mut self, seed: u64, layer_index: usize) {
        let mut rng = rng_from_seed(mix(seed, layer_index as u64));
        let bound = 1.0 / (self.in_dim as f64).sqrt();
        for w in &mut self.weights {
            *w = rng.random_range(-bound..bound);
        }
        for b in &mut self.bias {
            *b = rng.random_range(-bound..bound);
        }
    }

    /// Re-draws each scalar parameter independently with probability `prob`,
    /// leaving the rest bit-identical. The redrawn values are the ones a full
    /// [`redraw`](Self::redraw) with the same seed would have produced at the
    /// same positions.
    pub fn redraw_subnetwork(&mut self, prob: f64, seed: u64, layer_index: usize) {
        let mut fresh = self.clone();
        fresh.redraw(seed, layer_index);
        let mut mask_rng = rng_from_seed(mix(seed ^ SUBNET_MASK_SALT, layer_index as u64));
        for (w, f) in self.weights.iter_mut().zip(&fresh.weights) {
            if mask_rng.random::<f64>() < prob {
                *w = *f;
            }
        }
        for (b, f) in self.bias.iter_mut().zip(&fresh.bias) {
            if mask_rng.random::<f64>() < prob {
                *b = *f;
            }
        }
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    #[inline]
    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite()) && self.bias.iter().all(|b| b.is_finite())
    }

    /// `z = W x + b` into `out`.
    #[inline]
    pub(crate) fn affine(&self, input: &[f64], out: &mut [f64]) {
        debug_assert_eq!(input.len(), self.in_dim);
        debug_assert_eq!(out.len(), self.out_dim);
        for (o, z) in out.iter_mut().enumerate() {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            *z = self.bias[o] + dot(row, input);
        }
    }
}

/// Four-lane dot product: breaks the FP dependency chain for speed while
/// keeping a fixed summation order for bit-reproducibility.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let ra = ca.remainder();
    let rb = cb.remainder();
    let mut acc = [0.0f64; 4];
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}
