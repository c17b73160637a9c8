//! Generator and discriminator networks of the cycle-consistent model.

pub mod config;
pub mod discriminator;
pub mod generator;
pub mod store;

use ndarray::{Array3, Array4};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use config::{DiscriminatorConfig, DiscriminatorHead, GeneratorConfig, ModelConfig};
pub use discriminator::{Discriminator, DiscriminatorCache, Head};
pub use generator::{Generator, GeneratorCache, ResidualBlock};

use crate::error::Result;
use crate::nn::params::{join, Params};

pub const INIT_STD: f64 = 0.02;

/// Draws every convolution / dense kernel from N(0, 0.02²). Biases, norm
/// shifts and norm scales keep their constructor values (0, 0, 1).
pub fn init_weights<P: Params, R: Rng>(p: &mut P, rng: &mut R) {
    let normal = Normal::new(0.0, INIT_STD).expect("valid std");
    p.visit_mut("", &mut |name, _, v| {
        if name.ends_with("weight") {
            for x in v {
                *x = normal.sample(rng);
            }
        }
    });
}

/// The four networks trained jointly: two mappings and one critic per domain.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleModels {
    pub g_xy: Generator,
    pub g_yx: Generator,
    pub d_x: Discriminator,
    pub d_y: Discriminator,
}

impl CycleModels {
    /// Builds and randomly initialises all networks. Deterministic per seed.
    pub fn init(cfg: &ModelConfig, crop_frames: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g_xy = Generator::new(&cfg.generator)?;
        let mut g_yx = Generator::new(&cfg.generator)?;
        let dim = cfg.generator.feature_dim;
        let mut d_x = Discriminator::new(&cfg.discriminator, dim, crop_frames)?;
        let mut d_y = Discriminator::new(&cfg.discriminator, dim, crop_frames)?;
        init_weights(&mut g_xy, &mut rng);
        init_weights(&mut g_yx, &mut rng);
        init_weights(&mut d_x, &mut rng);
        init_weights(&mut d_y, &mut rng);
        Ok(Self { g_xy, g_yx, d_x, d_y })
    }
}

impl Params for CycleModels {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.g_xy.visit(&join(prefix, "g_xy"), f);
        self.g_yx.visit(&join(prefix, "g_yx"), f);
        self.d_x.visit(&join(prefix, "d_x"), f);
        self.d_y.visit(&join(prefix, "d_y"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.g_xy.visit_mut(&join(prefix, "g_xy"), f);
        self.g_yx.visit_mut(&join(prefix, "g_yx"), f);
        self.d_x.visit_mut(&join(prefix, "d_x"), f);
        self.d_y.visit_mut(&join(prefix, "d_y"), f);
    }
}

/// `(batch, feature_dim, frames)` → `(batch, 1, feature_dim, frames)` for the critic.
pub fn as_image(x: &Array3<f64>) -> Array4<f64> {
    let (b, d, t) = x.dim();
    x.to_shape((b, 1, d, t)).unwrap().to_owned()
}

/// Inverse of [`as_image`].
pub fn from_image(x: Array4<f64>) -> Array3<f64> {
    let (b, c, d, t) = x.dim();
    debug_assert_eq!(c, 1);
    x.into_shape_with_order((b, d, t)).unwrap()
}
