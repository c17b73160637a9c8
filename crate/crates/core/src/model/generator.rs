use ndarray::{Array3, Array4};

use super::config::GeneratorConfig;
use crate::error::{shape_err, Result};
use crate::nn::conv::ConvCache;
use crate::nn::glu::GatedConvCache;
use crate::nn::norm::NormCache;
use crate::nn::params::{join, Params};
use crate::nn::{Conv2d, GatedConv, InstanceNorm};

/// Gated residual block: `x + IN(conv(GLU(IN(conv(x)))))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualBlock {
    pub gated: GatedConv,
    pub conv: Conv2d,
    pub norm: InstanceNorm,
}

pub struct ResidualCache {
    gated: GatedConvCache,
    conv: ConvCache,
    norm: NormCache,
}

impl ResidualBlock {
    pub fn new(channels: usize, inner: usize, kernel: usize) -> Self {
        Self {
            gated: GatedConv::new(channels, inner, (1, kernel), (1, 1), true, None),
            conv: Conv2d::new_1d(inner, channels, kernel, 1),
            norm: InstanceNorm::new(channels),
        }
    }

    fn forward(&self, x: &Array4<f64>) -> Result<(Array4<f64>, ResidualCache)> {
        let (h, gated) = self.gated.forward(x)?;
        let (h, conv) = self.conv.forward(&h)?;
        let (h, norm) = self.norm.forward(&h)?;
        Ok((x + &h, ResidualCache { gated, conv, norm }))
    }

    fn backward(&self, cache: &ResidualCache, dy: &Array4<f64>, grad: &mut ResidualBlock) -> Array4<f64> {
        let dh = self.norm.backward(&cache.norm, dy, &mut grad.norm);
        let dh = self.conv.backward(&cache.conv, &dh, &mut grad.conv);
        let dh = self.gated.backward(&cache.gated, &dh, &mut grad.gated);
        dh + dy
    }
}

impl Params for ResidualBlock {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.gated.visit(&join(prefix, "gated"), f);
        self.conv.visit(&join(prefix, "conv"), f);
        self.norm.visit(&join(prefix, "norm"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.gated.visit_mut(&join(prefix, "gated"), f);
        self.conv.visit_mut(&join(prefix, "conv"), f);
        self.norm.visit_mut(&join(prefix, "norm"), f);
    }
}

/// Fully convolutional 1D mapping between feature sequences.
///
/// MCEP dimensions are input channels and time is the convolution axis, so
/// any length that is a multiple of [`GeneratorConfig::length_multiple`] is
/// accepted and the output has the same shape as the input.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub input: GatedConv,
    pub down: Vec<GatedConv>,
    pub residual: Vec<ResidualBlock>,
    pub up: Vec<GatedConv>,
    pub output: Conv2d,
}

pub struct GeneratorCache {
    input: GatedConvCache,
    down: Vec<GatedConvCache>,
    residual: Vec<ResidualCache>,
    up: Vec<GatedConvCache>,
    output: ConvCache,
    batch: usize,
    frames: usize,
}

impl Generator {
    /// Zero-initialised generator with the given topology.
    pub fn new(cfg: &GeneratorConfig) -> Result<Self> {
        cfg.validate()?;
        let input = GatedConv::new(cfg.feature_dim, cfg.input_channels, (1, cfg.input_kernel), (1, 1), false, None);
        let mut ch = cfg.input_channels;
        let down = cfg
            .down_channels
            .iter()
            .map(|&c| {
                let l = GatedConv::new(ch, c, (1, cfg.down_kernel), (1, 2), true, None);
                ch = c;
                l
            })
            .collect();
        let residual = (0..cfg.residual_blocks)
            .map(|_| ResidualBlock::new(ch, cfg.residual_inner_channels, cfg.residual_kernel))
            .collect();
        let up = cfg
            .up_channels
            .iter()
            .map(|&c| {
                let l = GatedConv::new(ch, c, (1, cfg.up_kernel), (1, 1), true, Some(2));
                ch = c;
                l
            })
            .collect();
        let output = Conv2d::new_1d(ch, cfg.feature_dim, cfg.output_kernel, 1);
        Ok(Self {
            input,
            down,
            residual,
            up,
            output,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.input.linear.in_channels()
    }

    pub fn length_multiple(&self) -> usize {
        1 << self.down.len()
    }

    /// Forward pass retaining activations for [`Generator::backward`].
    /// `x` is `(batch, feature_dim, frames)`.
    pub fn forward_train(&self, x: &Array3<f64>) -> Result<(Array3<f64>, GeneratorCache)> {
        let (b, d, t) = x.dim();
        if d != self.feature_dim() {
            return shape_err(format!(
                "generator expects {} feature channels, got {d}",
                self.feature_dim()
            ));
        }
        let m = self.length_multiple();
        if t == 0 || t % m != 0 {
            return shape_err(format!("generator input length {t} is not a positive multiple of {m}"));
        }
        let h = x.to_shape((b, d, 1, t)).unwrap().to_owned();
        let (mut h, input) = self.input.forward(&h)?;
        let mut down = Vec::with_capacity(self.down.len());
        for l in &self.down {
            let (y, c) = l.forward(&h)?;
            h = y;
            down.push(c);
        }
        let mut residual = Vec::with_capacity(self.residual.len());
        for l in &self.residual {
            let (y, c) = l.forward(&h)?;
            h = y;
            residual.push(c);
        }
        let mut up = Vec::with_capacity(self.up.len());
        for l in &self.up {
            let (y, c) = l.forward(&h)?;
            h = y;
            up.push(c);
        }
        let (y, output) = self.output.forward(&h)?;
        let (yb, yd, _, yt) = y.dim();
        debug_assert_eq!((yb, yd, yt), (b, d, t));
        Ok((
            y.into_shape_with_order((yb, yd, yt)).unwrap(),
            GeneratorCache {
                input,
                down,
                residual,
                up,
                output,
                batch: b,
                frames: t,
            },
        ))
    }

    pub fn forward(&self, x: &Array3<f64>) -> Result<Array3<f64>> {
        self.forward_train(x).map(|(y, _)| y)
    }

    /// Accumulates parameter gradients into `grad`; returns the input gradient.
    pub fn backward(&self, cache: &GeneratorCache, dy: &Array3<f64>, grad: &mut Generator) -> Array3<f64> {
        let (b, d, t) = (cache.batch, self.feature_dim(), cache.frames);
        assert_eq!(dy.dim(), (b, d, t), "generator output gradient shape");
        let dy4 = dy.to_shape((b, d, 1, t)).unwrap().to_owned();
        let mut dh = self.output.backward(&cache.output, &dy4, &mut grad.output);
        for ((l, c), g) in self.up.iter().zip(&cache.up).zip(grad.up.iter_mut()).rev() {
            dh = l.backward(c, &dh, g);
        }
        for ((l, c), g) in self.residual.iter().zip(&cache.residual).zip(grad.residual.iter_mut()).rev() {
            dh = l.backward(c, &dh, g);
        }
        for ((l, c), g) in self.down.iter().zip(&cache.down).zip(grad.down.iter_mut()).rev() {
            dh = l.backward(c, &dh, g);
        }
        let dx = self.input.backward(&cache.input, &dh, &mut grad.input);
        dx.into_shape_with_order((b, d, t)).unwrap()
    }
}

impl Params for Generator {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.input.visit(&join(prefix, "input"), f);
        for (i, l) in self.down.iter().enumerate() {
            l.visit(&join(prefix, &format!("down{i}")), f);
        }
        for (i, l) in self.residual.iter().enumerate() {
            l.visit(&join(prefix, &format!("res{i}")), f);
        }
        for (i, l) in self.up.iter().enumerate() {
            l.visit(&join(prefix, &format!("up{i}")), f);
        }
        self.output.visit(&join(prefix, "output"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.input.visit_mut(&join(prefix, "input"), f);
        for (i, l) in self.down.iter_mut().enumerate() {
            l.visit_mut(&join(prefix, &format!("down{i}")), f);
        }
        for (i, l) in self.residual.iter_mut().enumerate() {
            l.visit_mut(&join(prefix, &format!("res{i}")), f);
        }
        for (i, l) in self.up.iter_mut().enumerate() {
            l.visit_mut(&join(prefix, &format!("up{i}")), f);
        }
        self.output.visit_mut(&join(prefix, "output"), f);
    }
}
