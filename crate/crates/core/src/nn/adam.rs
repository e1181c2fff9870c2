use super::{GradientBundle, Mlp};
use crate::{Error, Result};

/// Adam with bias correction and optional L2 weight decay added to the
/// gradient before the moment updates.
///
/// Moments and the step counter are tracked per layer so that a partial
/// optimizer reset (only re-initialized layers) keeps well-defined bias
/// correction for the untouched layers.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub lr: f64,
    pub weight_decay: f64,
    layers: Vec<AdamLayer>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AdamLayer {
    pub(crate) m_w: Vec<f64>,
    pub(crate) v_w: Vec<f64>,
    pub(crate) m_b: Vec<f64>,
    pub(crate) v_b: Vec<f64>,
    pub(crate) t: u64,
}

impl AdamLayer {
    fn zeroed(n_weights: usize, n_bias: usize) -> Self {
        AdamLayer {
            m_w: vec![0.0; n_weights],
            v_w: vec![0.0; n_weights],
            m_b: vec![0.0; n_bias],
            v_b: vec![0.0; n_bias],
            t: 0,
        }
    }

    fn reset(&mut self) {
        self.m_w.fill(0.0);
        self.v_w.fill(0.0);
        self.m_b.fill(0.0);
        self.v_b.fill(0.0);
        self.t = 0;
    }
}

impl AdamState {
    pub fn for_mlp(mlp: &Mlp, lr: f64) -> Self {
        AdamState {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            lr,
            weight_decay: 0.0,
            layers: mlp
                .layers()
                .iter()
                .map(|l| AdamLayer::zeroed(l.in_dim() * l.out_dim(), l.out_dim()))
                .collect(),
        }
    }

    pub fn with_weight_decay(mut self, weight_decay: f64) -> Self {
        self.weight_decay = weight_decay;
        self
    }

    /// One bias-corrected Adam update of `mlp` in place.
    pub fn step(&mut self, mlp: &mut Mlp, grads: &GradientBundle) -> Result<()> {
        if grads.layers.len() != self.layers.len() || mlp.layer_count() != self.layers.len() {
            return Err(Error::Shape("optimizer/network/gradient layer counts differ".into()));
        }
        for (k, lg) in grads.layers.iter().enumerate() {
            if !(lg.d_weights.iter().all(|g| g.is_finite()) && lg.d_bias.iter().all(|g| g.is_finite())) {
                return Err(Error::Numeric(format!("non-finite gradient at layer {k}")));
            }
        }
        for k in 0..self.layers.len() {
            let st = &mut self.layers[k];
            st.t += 1;
            let bc1 = 1.0 - self.beta1.powi(st.t as i32);
            let bc2 = 1.0 - self.beta2.powi(st.t as i32);
            let layer = &mut mlp.layers[k];
            update_slice(
                &mut layer.weights,
                &grads.layers[k].d_weights,
                &mut st.m_w,
                &mut st.v_w,
                self.beta1,
                self.beta2,
                self.epsilon,
                self.lr,
                self.weight_decay,
                bc1,
                bc2,
            );
            update_slice(
                &mut layer.bias,
                &grads.layers[k].d_bias,
                &mut st.m_b,
                &mut st.v_b,
                self.beta1,
                self.beta2,
                self.epsilon,
                self.lr,
                self.weight_decay,
                bc1,
                bc2,
            );
        }
        Ok(())
    }

    /// Zeroes moments and step counters of the given layers only.
    pub fn reset_layers(&mut self, layer_indices: &[usize]) -> Result<()> {
        for &k in layer_indices {
            if k >= self.layers.len() {
                return Err(Error::Config(format!(
                    "optimizer reset index {k} out of range (layers: {})",
                    self.layers.len()
                )));
            }
        }
        for &k in layer_indices {
            self.layers[k].reset();
        }
        Ok(())
    }

    pub fn reset_all(&mut self) {
        for l in &mut self.layers {
            l.reset();
        }
    }

    pub fn layer_step_count(&self, k: usize) -> u64 {
        self.layers[k].t
    }

    pub(crate) fn layers_raw(&self) -> &[AdamLayer] {
        &self.layers
    }

    pub(crate) fn layers_raw_mut(&mut self) -> &mut [AdamLayer] {
        &mut self.layers
    }

    /// True when the given layer's moments are all zero and its counter is 0.
    pub fn layer_is_fresh(&self, k: usize) -> bool {
        let l = &self.layers[k];
        l.t == 0
            && l.m_w.iter().all(|x| *x == 0.0)
            && l.v_w.iter().all(|x| *x == 0.0)
            && l.m_b.iter().all(|x| *x == 0.0)
            && l.v_b.iter().all(|x| *x == 0.0)
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    lr: f64,
    weight_decay: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i] + weight_decay * params[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
}

/// Adam for a single scalar parameter (the entropy temperature).
#[derive(Debug, Clone, PartialEq)]
pub struct AdamScalar {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub lr: f64,
    m: f64,
    v: f64,
    t: u64,
}

impl AdamScalar {
    pub fn new(lr: f64) -> Self {
        AdamScalar {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            lr,
            m: 0.0,
            v: 0.0,
            t: 0,
        }
    }

    pub fn step(&mut self, param: &mut f64, grad: f64) -> Result<()> {
        if !grad.is_finite() {
            return Err(Error::Numeric("non-finite scalar gradient".into()));
        }
        self.t += 1;
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad;
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad;
        let m_hat = self.m / (1.0 - self.beta1.powi(self.t as i32));
        let v_hat = self.v / (1.0 - self.beta2.powi(self.t as i32));
        *param -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        Ok(())
    }

    pub fn reset(&mut self) {
        self.m = 0.0;
        self.v = 0.0;
        self.t = 0;
    }

    pub fn state(&self) -> (f64, f64, u64) {
        (self.m, self.v, self.t)
    }

    pub fn restore_state(&mut self, m: f64, v: f64, t: u64) {
        self.m = m;
        self.v = v;
        self.t = t;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;

    #[test]
    fn zero_gradient_fresh_state_is_fixed_point() {
        let mut mlp = Mlp::init(&[2, 3, 1], Activation::Relu, 0).unwrap();
        let before = mlp.clone();
        let mut adam = AdamState::for_mlp(&mlp, 1e-3);
        let grads = GradientBundle::zeroed_like(&mlp);
        adam.step(&mut mlp, &grads).unwrap();
        assert_eq!(mlp, before);
    }

    #[test]
    fn first_update_magnitude_is_about_lr() {
        // Scalar parameter, t=1: bias correction cancels, step = lr*g/(|g|+eps).
        let mut mlp = Mlp::init(&[1, 1], Activation::Relu, 0).unwrap();
        mlp.layers[0].weights[0] = 0.5;
        mlp.layers[0].bias[0] = 0.0;
        let lr = 1e-3;
        let mut adam = AdamState::for_mlp(&mlp, lr);
        let mut grads = GradientBundle::zeroed_like(&mlp);
        grads.layers[0].d_weights[0] = 2.5;
        adam.step(&mut mlp, &grads).unwrap();
        let delta = 0.5 - mlp.layers[0].weights[0];
        assert!((delta - lr).abs() < 1e-8, "delta {delta}");
    }

    /// Independent scalar Adam recurrence used as an oracle.
    struct ScalarOracle {
        m: f64,
        v: f64,
        t: u32,
    }

    impl ScalarOracle {
        fn update(&mut self, theta: &mut f64, g: f64, lr: f64) {
            self.t += 1;
            self.m = 0.9 * self.m + 0.1 * g;
            self.v = 0.999 * self.v + 0.001 * g * g;
            let mh = self.m / (1.0 - 0.9f64.powi(self.t as i32));
            let vh = self.v / (1.0 - 0.999f64.powi(self.t as i32));
            *theta -= lr * mh / (vh.sqrt() + 1e-8);
        }
    }

    #[test]
    fn matches_scalar_recurrence_for_constant_gradient() {
        let mut mlp = Mlp::init(&[1, 1], Activation::Relu, 3).unwrap();
        mlp.layers[0].bias[0] = 0.0;
        let start = mlp.layers[0].weights[0];
        let lr = 1e-2;
        let mut adam = AdamState::for_mlp(&mlp, lr);
        let mut grads = GradientBundle::zeroed_like(&mlp);
        let g = -0.37;
        grads.layers[0].d_weights[0] = g;

        let mut oracle = ScalarOracle { m: 0.0, v: 0.0, t: 0 };
        let mut theta = start;
        for _ in 0..10 {
            adam.step(&mut mlp, &grads).unwrap();
            oracle.update(&mut theta, g, lr);
            assert!((mlp.layers[0].weights[0] - theta).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_decay_augments_gradient() {
        let mut mlp = Mlp::init(&[1, 1], Activation::Relu, 3).unwrap();
        let theta0 = mlp.layers[0].weights[0];
        let wd = 0.1;
        let lr = 1e-2;
        let mut adam = AdamState::for_mlp(&mlp, lr).with_weight_decay(wd);
        let grads = GradientBundle::zeroed_like(&mlp);
        adam.step(&mut mlp, &grads).unwrap();
        // Effective gradient is wd*theta0; first step magnitude ~ lr*sign.
        let expect = theta0 - lr * (wd * theta0) / ((wd * theta0).abs() + 1e-8);
        assert!((mlp.layers[0].weights[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn partial_reset_gives_t1_behavior_on_masked_layer() {
        let mut mlp = Mlp::init(&[2, 4, 1], Activation::Relu, 5).unwrap();
        let mut adam = AdamState::for_mlp(&mlp, 1e-3);
        let mut grads = GradientBundle::zeroed_like(&mlp);
        for lg in &mut grads.layers {
            lg.d_weights.fill(0.2);
            lg.d_bias.fill(-0.1);
        }
        for _ in 0..5 {
            adam.step(&mut mlp, &grads).unwrap();
        }
        adam.reset_layers(&[1]).unwrap();
        assert!(adam.layer_is_fresh(1));
        assert!(!adam.layer_is_fresh(0));

        let w_before = mlp.layers[1].weights[0];
        adam.step(&mut mlp, &grads).unwrap();
        // Fresh layer behaves like t=1: step magnitude ~ lr.
        let delta = (mlp.layers[1].weights[0] - w_before).abs();
        assert!((delta - 1e-3).abs() < 1e-8, "delta {delta}");
        assert_eq!(adam.layer_step_count(1), 1);
        assert_eq!(adam.layer_step_count(0), 6);
    }

    #[test]
    fn reset_all_equals_fresh_state() {
        let mut mlp = Mlp::init(&[2, 3, 1], Activation::Relu, 9).unwrap();
        let mut adam = AdamState::for_mlp(&mlp, 1e-3);
        let mut grads = GradientBundle::zeroed_like(&mlp);
        grads.layers[0].d_weights.fill(1.0);
        adam.step(&mut mlp, &grads).unwrap();
        adam.reset_all();
        let fresh = AdamState::for_mlp(&mlp, 1e-3);
        assert_eq!(adam, fresh);
    }

    #[test]
    fn invalid_reset_index_errors() {
        let mlp = Mlp::init(&[2, 3, 1], Activation::Relu, 9).unwrap();
        let mut adam = AdamState::for_mlp(&mlp, 1e-3);
        assert!(adam.reset_layers(&[2]).is_err());
        // Error path must leave state untouched.
        let fresh = AdamState::for_mlp(&mlp, 1e-3);
        assert!(adam.reset_layers(&[5, 0]).is_err());
        assert_eq!(adam, fresh);
    }

    #[test]
    fn non_finite_gradient_is_reported_with_layer() {
        let mut mlp = Mlp::init(&[2, 3, 1], Activation::Relu, 9).unwrap();
        let mut adam = AdamState::for_mlp(&mlp, 1e-3);
        let mut grads = GradientBundle::zeroed_like(&mlp);
        grads.layers[1].d_bias[0] = f64::NAN;
        match adam.step(&mut mlp, &grads) {
            Err(Error::Numeric(msg)) => assert!(msg.contains("layer 1")),
            other => panic!("expected numeric error, got {other:?}"),
        }
    }
}
