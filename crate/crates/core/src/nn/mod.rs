//! Layer primitives with hand-written backward passes.
//!
//! Tensors are `(batch, channels, height, width)` arrays of `f64`. Sequence
//! tensors use height 1 with time on the width axis.

pub mod conv;
pub mod glu;
pub mod linear;
pub mod norm;
pub mod params;
pub mod shuffle;

pub use conv::Conv2d;
pub use glu::{glu_forward, GatedConv};
pub use linear::{sigmoid, Linear};
pub use norm::InstanceNorm;
pub use params::Params;
pub use shuffle::{pixel_shuffle, pixel_shuffle_1d, pixel_unshuffle, pixel_unshuffle_1d};
