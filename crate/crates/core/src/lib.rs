//! Non-parallel voice conversion with cycle-consistent adversarial training of
//! gated convolutional networks.
//!
//! The crate covers the whole pipeline: feature analysis and per-speaker
//! statistics ([`features`]), the generator / discriminator networks with
//! hand-written gradients ([`nn`], [`model`]), objective terms ([`losses`]),
//! the training loop with checkpointing ([`training`]), utterance conversion
//! ([`conversion`]) and objective evaluation ([`metrics`]).

pub mod container;
pub mod conversion;
pub mod error;
pub mod features;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod optim;
pub mod training;

pub use error::{Error, Result};
