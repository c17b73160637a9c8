#![allow(dead_code)]

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const DIM: usize = 24;
const LATENTS: usize = 4;

/// Synthetic two-speaker corpus. Speaker Y is a fixed invertible affine map
/// of speaker X; the two sides are drawn independently (non-parallel).
pub struct ToyCorpus {
    pub x: Vec<Array2<f64>>,
    pub y: Vec<Array2<f64>>,
    pub map: Array2<f64>,
    pub offset: Array1<f64>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Frames of slowly varying latents mixed into `DIM` coefficients plus noise.
fn utterance(rng: &mut ChaCha8Rng, mix: &Array2<f64>) -> Array2<f64> {
    let t = rng.random_range(150..400);
    let mut z = Array2::<f64>::zeros((t, LATENTS));
    for k in 0..LATENTS {
        for _ in 0..3 {
            let freq = rng.random_range(0.01..0.06);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let amp = rng.random_range(0.4..1.0);
            for i in 0..t {
                z[[i, k]] += amp * (std::f64::consts::TAU * freq * i as f64 + phase).sin();
            }
        }
    }
    let mut x = z.dot(&mix.t());
    x.mapv_inplace(|v| v + 0.02 * normal(rng));
    x
}

impl ToyCorpus {
    pub fn generate(seed: u64, utterances: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mix = Array2::from_shape_fn((DIM, LATENTS), |(d, _)| normal(&mut rng) / (1.0 + 0.15 * d as f64));
        let map = Array2::from_shape_fn((DIM, DIM), |(i, j)| {
            if i == j {
                1.5 - 0.04 * i as f64
            } else if j + 1 == i {
                0.3
            } else {
                0.0
            }
        });
        let offset = Array1::from_shape_fn(DIM, |d| 0.5 - 0.02 * d as f64);
        let x = (0..utterances).map(|_| utterance(&mut rng, &mix)).collect();
        let y = (0..utterances)
            .map(|_| utterance(&mut rng, &mix).dot(&map.t()) + &offset)
            .collect();
        Self { x, y, map, offset }
    }
}

pub fn stack(c: &[Array2<f64>]) -> Array2<f64> {
    ndarray::concatenate(Axis(0), &c.iter().map(|u| u.view()).collect::<Vec<_>>()).unwrap()
}
