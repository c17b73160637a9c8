use ndarray::{Array1, Array2, Array4};

use super::params::{join, Params};
use crate::error::{shape_err, Result};

pub const INSTANCE_NORM_EPS: f64 = 1e-5;

/// Per-instance, per-channel standardization over all spatial positions,
/// followed by a learned per-channel affine map.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceNorm {
    pub scale: Array1<f64>,
    pub shift: Array1<f64>,
    pub eps: f64,
}

pub struct NormCache {
    xhat: Array4<f64>,
    inv_std: Array2<f64>,
}

impl InstanceNorm {
    pub fn new(channels: usize) -> Self {
        Self {
            scale: Array1::ones(channels),
            shift: Array1::zeros(channels),
            eps: INSTANCE_NORM_EPS,
        }
    }

    pub fn forward(&self, x: &Array4<f64>) -> Result<(Array4<f64>, NormCache)> {
        let (b, c, h, w) = x.dim();
        if c != self.scale.len() {
            return shape_err(format!(
                "instance norm over {} channels got {c}",
                self.scale.len()
            ));
        }
        let n = h * w;
        if n == 0 {
            return shape_err("instance norm needs at least one position");
        }
        let x = x.as_standard_layout();
        let xs = x.as_slice().unwrap();
        let mut xhat = Array4::<f64>::zeros((b, c, h, w));
        let mut y = Array4::<f64>::zeros((b, c, h, w));
        let mut inv_std = Array2::<f64>::zeros((b, c));
        {
            let xh = xhat.as_slice_mut().unwrap();
            let ys = y.as_slice_mut().unwrap();
            for bi in 0..b {
                for ci in 0..c {
                    let off = (bi * c + ci) * n;
                    let seg = &xs[off..off + n];
                    let mean = seg.iter().sum::<f64>() / n as f64;
                    let var = seg.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                    let is = 1.0 / (var + self.eps).sqrt();
                    inv_std[[bi, ci]] = is;
                    let (g, s) = (self.scale[ci], self.shift[ci]);
                    for k in 0..n {
                        let z = (seg[k] - mean) * is;
                        xh[off + k] = z;
                        ys[off + k] = g * z + s;
                    }
                }
            }
        }
        Ok((y, NormCache { xhat, inv_std }))
    }

    pub fn backward(&self, cache: &NormCache, dy: &Array4<f64>, grad: &mut InstanceNorm) -> Array4<f64> {
        let (b, c, h, w) = cache.xhat.dim();
        assert_eq!(dy.dim(), (b, c, h, w), "instance norm gradient shape");
        let n = h * w;
        let dy = dy.as_standard_layout();
        let dys = dy.as_slice().unwrap();
        let xh = cache.xhat.as_slice().unwrap();
        let mut dx = Array4::<f64>::zeros((b, c, h, w));
        let dxs = dx.as_slice_mut().unwrap();
        for bi in 0..b {
            for ci in 0..c {
                let off = (bi * c + ci) * n;
                let g = self.scale[ci];
                let mut sum_dy = 0.0;
                let mut sum_dy_xh = 0.0;
                for k in 0..n {
                    sum_dy += dys[off + k];
                    sum_dy_xh += dys[off + k] * xh[off + k];
                }
                grad.shift[ci] += sum_dy;
                grad.scale[ci] += sum_dy_xh;
                // d xhat = g * dy; mean terms reduce to the two sums above.
                let is = cache.inv_std[[bi, ci]];
                let nf = n as f64;
                for k in 0..n {
                    dxs[off + k] =
                        g * is / nf * (nf * dys[off + k] - sum_dy - xh[off + k] * sum_dy_xh);
                }
            }
        }
        dx
    }
}

impl Params for InstanceNorm {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        f(&join(prefix, "scale"), self.scale.shape(), self.scale.as_slice().unwrap());
        f(&join(prefix, "shift"), self.shift.shape(), self.shift.as_slice().unwrap());
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        let shape = self.scale.shape().to_vec();
        f(&join(prefix, "scale"), &shape, self.scale.as_slice_mut().unwrap());
        f(&join(prefix, "shift"), &shape, self.shift.as_slice_mut().unwrap());
    }
}
