//! Resilience-aware switching for distribution feeders: feeder modelling,
//! resilience metrics, a hierarchical PPO controller trained in a stochastic
//! calamity environment, and techno-economic evaluation of the result.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod economics;
pub mod env;
pub mod error;
pub mod feeder;
pub mod kv;
pub mod metrics;
pub mod ppo;
pub mod reports;
pub mod topology;
pub mod train;

pub use error::{Error, Result};
