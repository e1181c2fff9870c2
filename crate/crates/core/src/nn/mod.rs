//! Minimal dense-network engine: forward pass, exact backprop, fan-in
//! uniform initialization, inverted-scaling dropout, and Adam with
//! per-layer resettable state.

mod activation;
mod adam;
mod layer;
mod mlp;

pub use activation::Activation;
pub use adam::{AdamScalar, AdamState};
pub use layer::DenseLayer;
pub use mlp::{ForwardCache, GradientBundle, LayerGrad, Mlp, ResetMode};
