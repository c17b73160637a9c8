use ndarray::{Array2, Array4};

use super::config::{DiscriminatorConfig, DiscriminatorHead};
use crate::error::{shape_err, Result};
use crate::nn::conv::ConvCache;
use crate::nn::glu::GatedConvCache;
use crate::nn::params::{join, Params};
use crate::nn::{sigmoid, Conv2d, GatedConv, Linear};

#[derive(Clone, Debug, PartialEq)]
pub enum Head {
    Dense(Linear),
    Patch(Conv2d),
}

/// 2D gated critic over `(batch, 1, feature_dim, frames)` images.
#[derive(Clone, Debug, PartialEq)]
pub struct Discriminator {
    pub stem: GatedConv,
    pub stages: Vec<GatedConv>,
    pub head: Head,
    pub raw_scores: bool,
    input_hw: (usize, usize),
}

enum HeadCache {
    Dense(Array2<f64>),
    Patch(ConvCache),
}

pub struct DiscriminatorCache {
    stem: GatedConvCache,
    stages: Vec<GatedConvCache>,
    head: HeadCache,
    feature_dim: (usize, usize, usize, usize),
    scores: Array2<f64>,
    score_hw: (usize, usize),
}

impl Discriminator {
    /// `height` is the feature dimension, `width` the crop length in frames.
    pub fn new(cfg: &DiscriminatorConfig, height: usize, width: usize) -> Result<Self> {
        cfg.validate()?;
        let k = (cfg.kernel, cfg.kernel);
        let stem = GatedConv::new(1, cfg.stem_channels, k, (1, 1), false, None);
        let mut ch = cfg.stem_channels;
        let (mut h, mut w) = (height, width);
        let stages = cfg
            .stage_channels
            .iter()
            .map(|&c| {
                let l = GatedConv::new(ch, c, k, (2, 2), true, None);
                (h, w) = l.linear.output_hw(h, w);
                ch = c;
                l
            })
            .collect();
        let head = match cfg.head {
            DiscriminatorHead::Dense => Head::Dense(Linear::new(ch * h * w, 1)),
            DiscriminatorHead::Patch => Head::Patch(Conv2d::new(ch, 1, k, (1, 1))),
        };
        let d = Self {
            stem,
            stages,
            head,
            raw_scores: cfg.raw_scores,
            input_hw: (height, width),
        };
        d.check_size(height, width)?;
        Ok(d)
    }

    pub fn input_hw(&self) -> (usize, usize) {
        self.input_hw
    }

    fn check_size(&self, h: usize, w: usize) -> Result<()> {
        let min = 1usize << self.stages.len();
        if h < min || w < min {
            return shape_err(format!(
                "discriminator input {h}x{w} smaller than the minimum {min}x{min}"
            ));
        }
        if matches!(self.head, Head::Dense(_)) && (h, w) != self.input_hw {
            return shape_err(format!(
                "dense discriminator head was built for {:?} inputs, got {h}x{w}",
                self.input_hw
            ));
        }
        Ok(())
    }

    /// Scores of shape `(batch, n)`; `n = 1` for the dense head.
    pub fn forward_train(&self, x: &Array4<f64>) -> Result<(Array2<f64>, DiscriminatorCache)> {
        let (b, c, h, w) = x.dim();
        if c != 1 {
            return shape_err(format!("discriminator expects one input channel, got {c}"));
        }
        self.check_size(h, w)?;
        let (mut f, stem) = self.stem.forward(x)?;
        let mut stages = Vec::with_capacity(self.stages.len());
        for l in &self.stages {
            let (y, cache) = l.forward(&f)?;
            f = y;
            stages.push(cache);
        }
        let feature_dim = f.dim();
        let (logits, head, score_hw) = match &self.head {
            Head::Dense(lin) => {
                let flat = f
                    .into_shape_with_order((b, feature_dim.1 * feature_dim.2 * feature_dim.3))
                    .unwrap();
                (lin.forward(&flat)?, HeadCache::Dense(flat), (1, 1))
            }
            Head::Patch(conv) => {
                let (y, cache) = conv.forward(&f)?;
                let (_, _, sh, sw) = y.dim();
                (y.into_shape_with_order((b, sh * sw)).unwrap(), HeadCache::Patch(cache), (sh, sw))
            }
        };
        let scores = if self.raw_scores { logits } else { logits.mapv(sigmoid) };
        Ok((
            scores.clone(),
            DiscriminatorCache {
                stem,
                stages,
                head,
                feature_dim,
                scores,
                score_hw,
            },
        ))
    }

    pub fn forward(&self, x: &Array4<f64>) -> Result<Array2<f64>> {
        self.forward_train(x).map(|(s, _)| s)
    }

    /// Backward from the score gradient. Parameter gradients accumulate into
    /// `grad`; pass a scratch buffer when only the input gradient is wanted.
    pub fn backward(&self, cache: &DiscriminatorCache, dscores: &Array2<f64>, grad: &mut Discriminator) -> Array4<f64> {
        assert_eq!(dscores.dim(), cache.scores.dim(), "score gradient shape");
        let dlogits = if self.raw_scores {
            dscores.clone()
        } else {
            dscores * &cache.scores.mapv(|s| s * (1.0 - s))
        };
        let (b, c, h, w) = cache.feature_dim;
        let mut df = match (&self.head, &cache.head, &mut grad.head) {
            (Head::Dense(lin), HeadCache::Dense(flat), Head::Dense(g)) => lin
                .backward(flat, &dlogits, g)
                .into_shape_with_order((b, c, h, w))
                .unwrap(),
            (Head::Patch(conv), HeadCache::Patch(pc), Head::Patch(g)) => {
                let (sh, sw) = cache.score_hw;
                let d4 = dlogits.into_shape_with_order((b, 1, sh, sw)).unwrap();
                conv.backward(pc, &d4, g)
            }
            _ => unreachable!("head variant mismatch between params, cache and gradient"),
        };
        for ((l, cch), g) in self.stages.iter().zip(&cache.stages).zip(grad.stages.iter_mut()).rev() {
            df = l.backward(cch, &df, g);
        }
        self.stem.backward(&cache.stem, &df, &mut grad.stem)
    }
}

impl Params for Discriminator {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.stem.visit(&join(prefix, "stem"), f);
        for (i, l) in self.stages.iter().enumerate() {
            l.visit(&join(prefix, &format!("stage{i}")), f);
        }
        match &self.head {
            Head::Dense(l) => l.visit(&join(prefix, "head"), f),
            Head::Patch(c) => c.visit(&join(prefix, "head"), f),
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.stem.visit_mut(&join(prefix, "stem"), f);
        for (i, l) in self.stages.iter_mut().enumerate() {
            l.visit_mut(&join(prefix, &format!("stage{i}")), f);
        }
        match &mut self.head {
            Head::Dense(l) => l.visit_mut(&join(prefix, "head"), f),
            Head::Patch(c) => c.visit_mut(&join(prefix, "head"), f),
        }
    }
}
