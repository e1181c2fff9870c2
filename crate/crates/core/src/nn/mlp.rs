use rand::Rng;

use super::{Activation, DenseLayer};
use crate::{Error, Result};

/// How [`Mlp::reinit_layers`] selects parameters to re-draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResetMode {
    /// Re-draw the final `depth` layers.
    LastLayers,
    /// Re-draw each scalar parameter independently with a given probability.
    RandomSubnetwork,
    /// Re-draw every layer.
    Full,
}

impl std::fmt::Display for ResetMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResetMode::LastLayers => write!(f, "last_layers"),
            ResetMode::RandomSubnetwork => write!(f, "random_subnetwork"),
            ResetMode::Full => write!(f, "full"),
        }
    }
}

/// Activation record from a forward pass; holds everything backprop needs.
/// Reusable across calls to avoid per-sample allocation in batch loops.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    /// inputs[k] is the input to layer k (inputs[0] = the network input).
    inputs: Vec<Vec<f64>>,
    /// Pre-activations z = Wx + b per layer.
    pre: Vec<Vec<f64>>,
    /// Post-activations per layer, before dropout.
    post: Vec<Vec<f64>>,
    /// Inverted-scaling dropout masks per hidden layer (entries 0 or 1/(1-p));
    /// empty when no mask was sampled for that layer.
    masks: Vec<Vec<f64>>,
    /// The network output (post-activation of the last layer; dropout never
    /// touches the output layer).
    output: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    fn matches(&self, mlp: &Mlp) -> bool {
        self.inputs.len() == mlp.layers.len()
            && mlp
                .layers
                .iter()
                .enumerate()
                .all(|(k, l)| self.inputs[k].len() == l.in_dim && self.pre[k].len() == l.out_dim)
    }
}

/// Per-layer gradients matching an [`Mlp`]'s parameter shapes.
#[derive(Debug, Clone)]
pub struct GradientBundle {
    pub layers: Vec<LayerGrad>,
}

#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
}

impl GradientBundle {
    pub fn zeroed_like(mlp: &Mlp) -> Self {
        GradientBundle {
            layers: mlp
                .layers
                .iter()
                .map(|l| LayerGrad {
                    d_weights: vec![0.0; l.weights.len()],
                    d_bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn zero(&mut self) {
        for l in &mut self.layers {
            l.d_weights.fill(0.0);
            l.d_bias.fill(0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            for g in &mut l.d_weights {
                *g *= factor;
            }
            for g in &mut l.d_bias {
                *g *= factor;
            }
        }
    }

    pub fn sq_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| {
                l.d_weights.iter().map(|g| g * g).sum::<f64>()
                    + l.d_bias.iter().map(|g| g * g).sum::<f64>()
            })
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.d_weights.iter().all(|g| g.is_finite()) && l.d_bias.iter().all(|g| g.is_finite()))
    }
}

/// A dense feed-forward network with optional dropout on hidden activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub(crate) layers: Vec<DenseLayer>,
    dropout_rate: f64,
}

impl Mlp {
    /// Builds a network with the given layer sizes. Hidden layers get
    /// `hidden_activation`; the output layer is linear. Parameters are drawn
    /// from the fan-in uniform init, deterministically for a fixed seed.
    pub fn init(layer_sizes: &[usize], hidden_activation: Activation, seed: u64) -> Result<Mlp> {
        if layer_sizes.len() < 2 {
            return Err(Error::Config(format!(
                "need at least 2 layer sizes, got {}",
                layer_sizes.len()
            )));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Config("layer sizes must be positive".into()));
        }
        let n_layers = layer_sizes.len() - 1;
        let layers = (0..n_layers)
            .map(|k| {
                let act = if k + 1 == n_layers { Activation::Linear } else { hidden_activation };
                DenseLayer::init(layer_sizes[k], layer_sizes[k + 1], act, seed, k)
            })
            .collect();
        Ok(Mlp {
            layers,
            dropout_rate: 0.0,
        })
    }

    /// Sets the dropout rate applied to hidden activations during training.
    pub fn set_dropout(&mut self, rate: f64) -> Result<()> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate {rate} outside [0,1)")));
        }
        self.dropout_rate = rate;
        Ok(())
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Forward pass producing output and an activation cache.
    ///
    /// A dropout mask is sampled only when `training` is true and the dropout
    /// rate is nonzero; `rng` may be `None` otherwise.
    pub fn forward<R: Rng>(
        &self,
        input: &[f64],
        training: bool,
        rng: Option<&mut R>,
    ) -> Result<(Vec<f64>, ForwardCache)> {
        let mut cache = ForwardCache::default();
        self.forward_into(input, training, rng, &mut cache)?;
        Ok((cache.output.clone(), cache))
    }

    /// Forward pass reusing an existing cache's buffers.
    pub fn forward_into<R: Rng>(
        &self,
        input: &[f64],
        training: bool,
        mut rng: Option<&mut R>,
        cache: &mut ForwardCache,
    ) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input length {} != network input dim {}",
                input.len(),
                self.input_dim()
            )));
        }
        if input.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite network input".into()));
        }
        let n = self.layers.len();
        cache.inputs.resize(n, Vec::new());
        cache.pre.resize(n, Vec::new());
        cache.post.resize(n, Vec::new());
        cache.masks.resize(n, Vec::new());

        let use_dropout = training && self.dropout_rate > 0.0;
        if use_dropout && rng.is_none() {
            return Err(Error::Contract(
                "training forward with dropout requires an rng".into(),
            ));
        }
        let keep = 1.0 - self.dropout_rate;

        for (k, layer) in self.layers.iter().enumerate() {
            let is_output = k + 1 == n;
            if k == 0 {
                cache.inputs[0].clear();
                cache.inputs[0].extend_from_slice(input);
            }
            cache.pre[k].resize(layer.out_dim, 0.0);
            layer.affine(&cache.inputs[k], &mut cache.pre[k]);
            cache.post[k].resize(layer.out_dim, 0.0);
            for (z, y) in cache.pre[k].iter().zip(cache.post[k].iter_mut()) {
                *y = layer.activation.apply(*z);
            }
            cache.masks[k].clear();
            if !is_output {
                cache.inputs[k + 1].clear();
                if use_dropout {
                    let r = rng.as_mut().expect("checked above");
                    cache.masks[k].resize(layer.out_dim, 0.0);
                    for m in cache.masks[k].iter_mut() {
                        *m = if r.random::<f64>() < keep { 1.0 / keep } else { 0.0 };
                    }
                    for (y, m) in cache.post[k].iter().zip(&cache.masks[k]) {
                        cache.inputs[k + 1].push(y * m);
                    }
                } else {
                    cache.inputs[k + 1].extend_from_slice(&cache.post[k]);
                }
            }
        }
        cache.output.clear();
        cache.output.extend_from_slice(&cache.post[n - 1]);
        Ok(())
    }

    /// Exact backprop: gradients of the scalar whose gradient w.r.t. the
    /// network output is `output_grad`, accumulated into `bundle`.
    /// The cache must come from a forward pass of this same network.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
        bundle: &mut GradientBundle,
    ) -> Result<()> {
        if !cache.matches(self) {
            return Err(Error::Contract(
                "forward cache does not match this network".into(),
            ));
        }
        if output_grad.len() != self.output_dim() {
            return Err(Error::Shape(format!(
                "output_grad length {} != output dim {}",
                output_grad.len(),
                self.output_dim()
            )));
        }
        if bundle.layers.len() != self.layers.len() {
            return Err(Error::Shape("gradient bundle layer count mismatch".into()));
        }

        let n = self.layers.len();
        // Gradient w.r.t. the (post-dropout) output of the current layer.
        let mut g: Vec<f64> = output_grad.to_vec();
        let mut g_prev: Vec<f64> = Vec::new();
        for k in (0..n).rev() {
            let layer = &self.layers[k];
            let lg = &mut bundle.layers[k];
            // Through dropout (identity for the output layer / eval passes).
            if !cache.masks[k].is_empty() {
                for (gi, m) in g.iter_mut().zip(&cache.masks[k]) {
                    *gi *= m;
                }
            }
            g_prev.clear();
            g_prev.resize(layer.in_dim, 0.0);
            for o in 0..layer.out_dim {
                let dz = g[o] * layer.activation.derivative(cache.pre[k][o], cache.post[k][o]);
                lg.d_bias[o] += dz;
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                let grow = &mut lg.d_weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                let x = &cache.inputs[k];
                for (gw, xi) in grow.iter_mut().zip(x) {
                    *gw += dz * xi;
                }
                for (gp, w) in g_prev.iter_mut().zip(row) {
                    *gp += w * dz;
                }
            }
            std::mem::swap(&mut g, &mut g_prev);
        }
        Ok(())
    }

    /// One-shot backward returning a fresh bundle.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &[f64]) -> Result<GradientBundle> {
        let mut bundle = GradientBundle::zeroed_like(self);
        self.backward_accumulate(cache, output_grad, &mut bundle)?;
        Ok(bundle)
    }

    /// Gradient of `sum(output_grad . output)` w.r.t. the network INPUT.
    /// Used to push critic gradients into actions.
    pub fn input_gradient(&self, cache: &ForwardCache, output_grad: &[f64]) -> Result<Vec<f64>> {
        if !cache.matches(self) {
            return Err(Error::Contract(
                "forward cache does not match this network".into(),
            ));
        }
        let n = self.layers.len();
        let mut g: Vec<f64> = output_grad.to_vec();
        let mut g_prev: Vec<f64> = Vec::new();
        for k in (0..n).rev() {
            let layer = &self.layers[k];
            if !cache.masks[k].is_empty() {
                for (gi, m) in g.iter_mut().zip(&cache.masks[k]) {
                    *gi *= m;
                }
            }
            g_prev.clear();
            g_prev.resize(layer.in_dim, 0.0);
            for o in 0..layer.out_dim {
                let dz = g[o] * layer.activation.derivative(cache.pre[k][o], cache.post[k][o]);
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (gp, w) in g_prev.iter_mut().zip(row) {
                    *gp += w * dz;
                }
            }
            std::mem::swap(&mut g, &mut g_prev);
        }
        Ok(g)
    }

    /// Re-initializes parameters per the reset mode. Untouched parameters are
    /// bit-identical afterward. Passing the construction seed reproduces the
    /// construction-time draws exactly.
    pub fn reinit_layers(&mut self, depth: usize, mode: ResetMode, subnet_prob: f64, seed: u64) -> Result<()> {
        if depth > self.layers.len() {
            return Err(Error::Config(format!(
                "reset depth {} exceeds layer count {}",
                depth,
                self.layers.len()
            )));
        }
        if !(0.0..=1.0).contains(&subnet_prob) {
            return Err(Error::Config(format!("subnet_prob {subnet_prob} outside [0,1]")));
        }
        let n = self.layers.len();
        match mode {
            ResetMode::LastLayers => {
                for k in n - depth..n {
                    self.layers[k].redraw(seed, k);
                }
            }
            ResetMode::Full => {
                for k in 0..n {
                    self.layers[k].redraw(seed, k);
                }
            }
            ResetMode::RandomSubnetwork => {
                for k in 0..n {
                    self.layers[k].redraw_subnetwork(subnet_prob, seed, k);
                }
            }
        }
        Ok(())
    }

    /// Indices of layers whose parameters a reset in this mode/depth touches.
    pub fn reset_layer_indices(&self, depth: usize, mode: ResetMode) -> Vec<usize> {
        let n = self.layers.len();
        match mode {
            ResetMode::LastLayers => (n.saturating_sub(depth)..n).collect(),
            ResetMode::Full | ResetMode::RandomSubnetwork => (0..n).collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    /// Layer-major flat parameter view: per layer, weights then bias.
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn load_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "flat parameter length {} != param count {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    pub fn get_param(&self, index: usize) -> f64 {
        let (layer, local) = self.locate(index);
        let l = &self.layers[layer];
        if local < l.weights.len() {
            l.weights[local]
        } else {
            l.bias[local - l.weights.len()]
        }
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        let (layer, local) = self.locate(index);
        let l = &mut self.layers[layer];
        if local < l.weights.len() {
            l.weights[local] = value;
        } else {
            l.bias[local - l.weights.len()] = value;
        }
    }

    fn locate(&self, mut index: usize) -> (usize, usize) {
        for (k, l) in self.layers.iter().enumerate() {
            if index < l.param_count() {
                return (k, index);
            }
            index -= l.param_count();
        }
        panic!("parameter index out of range");
    }

    pub fn sq_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| {
                l.weights.iter().map(|w| w * w).sum::<f64>() + l.bias.iter().map(|b| b * b).sum::<f64>()
            })
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.is_finite())
    }
}
