//! Desk-scale continuous-control RL stack: a from-scratch soft actor-critic,
//! periodic network resets with buffer preservation, experiment orchestration
//! (heavy priming, buffer transplants, replay-ratio/n-step sweeps), and
//! aggregate evaluation with stratified bootstrap confidence intervals.

mod bytesio;
pub mod env;
pub mod error;
pub mod harness;
pub mod nn;
pub mod replay;
pub mod reset;
pub mod rng;
pub mod sac;
pub mod stats;

pub use error::{Error, Result};
