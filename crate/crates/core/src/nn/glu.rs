//! Gated convolution units.
//!
//! `H_out = (H * W + b) ⊗ σ(H * V + c)`. Each branch is its own convolution so
//! that an optional pixel shuffle and instance normalization can be applied to
//! the linear and gate pre-activations separately before they are combined.

use ndarray::{Array3, Array4, Zip};

use super::conv::{Conv2d, ConvCache};
use super::linear::sigmoid;
use super::norm::{InstanceNorm, NormCache};
use super::params::{join, Params};
use super::shuffle::{pixel_shuffle, pixel_unshuffle};
use crate::error::{shape_err, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GatedConv {
    /// `W`, `b`
    pub linear: Conv2d,
    /// `V`, `c`
    pub gate: Conv2d,
    pub linear_norm: Option<InstanceNorm>,
    pub gate_norm: Option<InstanceNorm>,
    /// Pixel-shuffle factor applied between the convolution and the norm.
    pub upscale: Option<usize>,
}

struct BranchCache {
    conv: ConvCache,
    norm: Option<NormCache>,
}

pub struct GatedConvCache {
    linear: BranchCache,
    gate: BranchCache,
    a: Array4<f64>,
    s: Array4<f64>,
}

impl GatedConv {
    /// `out_ch` is the channel count after gating (and after any shuffle).
    pub fn new(
        in_ch: usize,
        out_ch: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        norm: bool,
        upscale: Option<usize>,
    ) -> Self {
        let conv_out = out_ch * upscale.unwrap_or(1);
        Self {
            linear: Conv2d::new(in_ch, conv_out, kernel, stride),
            gate: Conv2d::new(in_ch, conv_out, kernel, stride),
            linear_norm: norm.then(|| InstanceNorm::new(out_ch)),
            gate_norm: norm.then(|| InstanceNorm::new(out_ch)),
            upscale,
        }
    }

    pub fn out_channels(&self) -> usize {
        self.linear.out_channels() / self.upscale.unwrap_or(1)
    }

    fn branch_forward(
        &self,
        conv: &Conv2d,
        norm: Option<&InstanceNorm>,
        x: &Array4<f64>,
    ) -> Result<(Array4<f64>, BranchCache)> {
        let (mut h, conv_cache) = conv.forward(x)?;
        if let Some(r) = self.upscale {
            h = pixel_shuffle(&h, r)?;
        }
        let norm_cache = match norm {
            Some(n) => {
                let (y, c) = n.forward(&h)?;
                h = y;
                Some(c)
            }
            None => None,
        };
        Ok((
            h,
            BranchCache {
                conv: conv_cache,
                norm: norm_cache,
            },
        ))
    }

    fn branch_backward(
        &self,
        conv: &Conv2d,
        norm: Option<&InstanceNorm>,
        cache: &BranchCache,
        dh: Array4<f64>,
        gconv: &mut Conv2d,
        gnorm: Option<&mut InstanceNorm>,
    ) -> Array4<f64> {
        let mut dh = dh;
        if let (Some(n), Some(c), Some(g)) = (norm, cache.norm.as_ref(), gnorm) {
            dh = n.backward(c, &dh, g);
        }
        if let Some(r) = self.upscale {
            dh = pixel_unshuffle(&dh, r).expect("shape recorded in forward");
        }
        conv.backward(&cache.conv, &dh, gconv)
    }

    pub fn forward(&self, x: &Array4<f64>) -> Result<(Array4<f64>, GatedConvCache)> {
        if self.linear.weight.dim() != self.gate.weight.dim() {
            return shape_err("gated conv: linear and gate kernels differ in shape");
        }
        let (a, lc) = self.branch_forward(&self.linear, self.linear_norm.as_ref(), x)?;
        let (g, gc) = self.branch_forward(&self.gate, self.gate_norm.as_ref(), x)?;
        let s = g.mapv(sigmoid);
        let y = &a * &s;
        Ok((
            y,
            GatedConvCache {
                linear: lc,
                gate: gc,
                a,
                s,
            },
        ))
    }

    pub fn backward(&self, cache: &GatedConvCache, dy: &Array4<f64>, grad: &mut GatedConv) -> Array4<f64> {
        let da = dy * &cache.s;
        let mut dg = Array4::<f64>::zeros(dy.dim());
        Zip::from(&mut dg)
            .and(dy)
            .and(&cache.a)
            .and(&cache.s)
            .for_each(|d, &dy, &a, &s| *d = dy * a * s * (1.0 - s));
        let dx_lin = self.branch_backward(
            &self.linear,
            self.linear_norm.as_ref(),
            &cache.linear,
            da,
            &mut grad.linear,
            grad.linear_norm.as_mut(),
        );
        let dx_gate = self.branch_backward(
            &self.gate,
            self.gate_norm.as_ref(),
            &cache.gate,
            dg,
            &mut grad.gate,
            grad.gate_norm.as_mut(),
        );
        dx_lin + dx_gate
    }
}

impl Params for GatedConv {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.linear.visit(&join(prefix, "linear"), f);
        self.gate.visit(&join(prefix, "gate"), f);
        if let Some(n) = &self.linear_norm {
            n.visit(&join(prefix, "linear_norm"), f);
        }
        if let Some(n) = &self.gate_norm {
            n.visit(&join(prefix, "gate_norm"), f);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.linear.visit_mut(&join(prefix, "linear"), f);
        self.gate.visit_mut(&join(prefix, "gate"), f);
        if let Some(n) = &mut self.linear_norm {
            n.visit_mut(&join(prefix, "linear_norm"), f);
        }
        if let Some(n) = &mut self.gate_norm {
            n.visit_mut(&join(prefix, "gate_norm"), f);
        }
    }
}

/// One gated layer on `(batch, channels, frames)` tensors.
pub fn glu_forward(x: &Array3<f64>, layer: &GatedConv) -> Result<Array3<f64>> {
    let (b, c, t) = x.dim();
    let x4 = x.to_shape((b, c, 1, t)).unwrap().to_owned();
    let (y, _) = layer.forward(&x4)?;
    let (b, c, h, t) = y.dim();
    debug_assert_eq!(h, 1);
    Ok(y.into_shape_with_order((b, c, t)).unwrap())
}
