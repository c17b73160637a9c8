use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Array4, ArrayView2, Axis};

use super::params::{join, Params};
use crate::error::{shape_err, Result};

/// 2D convolution with zero "same" padding (`k / 2` on each side).
///
/// One-dimensional convolutions are the `kh = 1` special case over tensors
/// of height one.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv2d {
    /// `(out_channels, in_channels, kh, kw)`
    pub weight: Array4<f64>,
    pub bias: Array1<f64>,
    pub stride: (usize, usize),
}

pub struct ConvCache {
    cols: Vec<Array2<f64>>,
    input_dim: (usize, usize, usize, usize),
    out_hw: (usize, usize),
}

impl Conv2d {
    pub fn new(in_ch: usize, out_ch: usize, kernel: (usize, usize), stride: (usize, usize)) -> Self {
        assert!(kernel.0 % 2 == 1 && kernel.1 % 2 == 1, "kernel sizes must be odd");
        assert!(stride.0 > 0 && stride.1 > 0);
        Self {
            weight: Array4::zeros((out_ch, in_ch, kernel.0, kernel.1)),
            bias: Array1::zeros(out_ch),
            stride,
        }
    }

    /// 1D convolution over the width axis.
    pub fn new_1d(in_ch: usize, out_ch: usize, kernel: usize, stride: usize) -> Self {
        Self::new(in_ch, out_ch, (1, kernel), (1, stride))
    }

    pub fn in_channels(&self) -> usize {
        self.weight.dim().1
    }

    pub fn out_channels(&self) -> usize {
        self.weight.dim().0
    }

    fn padding(&self) -> (usize, usize) {
        let (_, _, kh, kw) = self.weight.dim();
        (kh / 2, kw / 2)
    }

    pub fn output_hw(&self, h: usize, w: usize) -> (usize, usize) {
        let (_, _, kh, kw) = self.weight.dim();
        let (ph, pw) = self.padding();
        (
            (h + 2 * ph - kh) / self.stride.0 + 1,
            (w + 2 * pw - kw) / self.stride.1 + 1,
        )
    }

    fn weight_matrix(&self) -> ArrayView2<'_, f64> {
        let (o, i, kh, kw) = self.weight.dim();
        self.weight
            .view()
            .into_shape_with_order((o, i * kh * kw))
            .expect("conv weight is contiguous")
    }

    fn im2col(&self, x: &[f64], c: usize, h: usize, w: usize, out_hw: (usize, usize)) -> Array2<f64> {
        let (_, _, kh, kw) = self.weight.dim();
        let (ph, pw) = self.padding();
        let (oh, ow) = out_hw;
        let (sh, sw) = self.stride;
        let mut cols = Array2::<f64>::zeros((c * kh * kw, oh * ow));
        let buf = cols.as_slice_mut().expect("fresh array");
        for ci in 0..c {
            for ki in 0..kh {
                for kj in 0..kw {
                    let row = (ci * kh + ki) * kw + kj;
                    let dst = &mut buf[row * oh * ow..(row + 1) * oh * ow];
                    for oy in 0..oh {
                        let iy = (oy * sh + ki) as isize - ph as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let src = &x[(ci * h + iy as usize) * w..(ci * h + iy as usize + 1) * w];
                        let drow = &mut dst[oy * ow..(oy + 1) * ow];
                        for (ox, d) in drow.iter_mut().enumerate() {
                            let ix = (ox * sw + kj) as isize - pw as isize;
                            if ix >= 0 && ix < w as isize {
                                *d = src[ix as usize];
                            }
                        }
                    }
                }
            }
        }
        cols
    }

    fn col2im(&self, cols: &Array2<f64>, dx: &mut [f64], h: usize, w: usize, out_hw: (usize, usize)) {
        let (_, c, kh, kw) = self.weight.dim();
        let (ph, pw) = self.padding();
        let (oh, ow) = out_hw;
        let (sh, sw) = self.stride;
        let buf = cols.as_slice().expect("standard layout");
        for ci in 0..c {
            for ki in 0..kh {
                for kj in 0..kw {
                    let row = (ci * kh + ki) * kw + kj;
                    let src = &buf[row * oh * ow..(row + 1) * oh * ow];
                    for oy in 0..oh {
                        let iy = (oy * sh + ki) as isize - ph as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let base = (ci * h + iy as usize) * w;
                        for ox in 0..ow {
                            let ix = (ox * sw + kj) as isize - pw as isize;
                            if ix >= 0 && ix < w as isize {
                                dx[base + ix as usize] += src[oy * ow + ox];
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn forward(&self, x: &Array4<f64>) -> Result<(Array4<f64>, ConvCache)> {
        let (b, c, h, w) = x.dim();
        if c != self.in_channels() {
            return shape_err(format!(
                "conv expects {} input channels, got {c}",
                self.in_channels()
            ));
        }
        if h == 0 || w == 0 {
            return shape_err("conv input has an empty spatial axis");
        }
        let out_hw = self.output_hw(h, w);
        let o = self.out_channels();
        let x = x.as_standard_layout();
        let xs = x.as_slice().expect("standard layout");
        let wm = self.weight_matrix();
        let mut y = Array4::<f64>::zeros((b, o, out_hw.0, out_hw.1));
        let mut cols_all = Vec::with_capacity(b);
        for bi in 0..b {
            let cols = self.im2col(&xs[bi * c * h * w..(bi + 1) * c * h * w], c, h, w, out_hw);
            let mut yb = Array2::<f64>::zeros((o, out_hw.0 * out_hw.1));
            general_mat_mul(1.0, &wm, &cols, 0.0, &mut yb);
            for (mut row, &bias) in yb.outer_iter_mut().zip(self.bias.iter()) {
                row += bias;
            }
            y.index_axis_mut(Axis(0), bi)
                .assign(&yb.into_shape_with_order((o, out_hw.0, out_hw.1)).expect("contiguous"));
            cols_all.push(cols);
        }
        Ok((
            y,
            ConvCache {
                cols: cols_all,
                input_dim: (b, c, h, w),
                out_hw,
            },
        ))
    }

    /// Accumulates parameter gradients into `grad` and returns the input gradient.
    pub fn backward(&self, cache: &ConvCache, dy: &Array4<f64>, grad: &mut Conv2d) -> Array4<f64> {
        let (b, c, h, w) = cache.input_dim;
        let o = self.out_channels();
        let (oh, ow) = cache.out_hw;
        assert_eq!(dy.dim(), (b, o, oh, ow), "conv output gradient shape");
        let wm = self.weight_matrix();
        let (go, gi, gkh, gkw) = grad.weight.dim();
        let mut gw = grad
            .weight
            .view_mut()
            .into_shape_with_order((go, gi * gkh * gkw))
            .expect("contiguous");
        let mut dx = Array4::<f64>::zeros((b, c, h, w));
        let dxs = dx.as_slice_mut().expect("fresh array");
        for bi in 0..b {
            let dyb = dy
                .index_axis(Axis(0), bi)
                .to_owned()
                .into_shape_with_order((o, oh * ow))
                .expect("contiguous");
            let cols = &cache.cols[bi];
            general_mat_mul(1.0, &dyb, &cols.t(), 1.0, &mut gw);
            grad.bias += &dyb.sum_axis(Axis(1));
            let mut dcols = Array2::<f64>::zeros(cols.dim());
            general_mat_mul(1.0, &wm.t(), &dyb, 0.0, &mut dcols);
            self.col2im(&dcols, &mut dxs[bi * c * h * w..(bi + 1) * c * h * w], h, w, cache.out_hw);
        }
        dx
    }
}

impl Params for Conv2d {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        f(&join(prefix, "weight"), self.weight.shape(), self.weight.as_slice().unwrap());
        f(&join(prefix, "bias"), self.bias.shape(), self.bias.as_slice().unwrap());
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        let shape = self.weight.shape().to_vec();
        f(&join(prefix, "weight"), &shape, self.weight.as_slice_mut().unwrap());
        let shape = self.bias.shape().to_vec();
        f(&join(prefix, "bias"), &shape, self.bias.as_slice_mut().unwrap());
    }
}
