use ndarray::{Array3, Array4};

use crate::error::{shape_err, Result};

/// Sub-pixel upsampling along the width (time) axis:
/// `(B, C·r, H, T) → (B, C, H, T·r)` with `out[b, c, h, t·r + i] = in[b, c·r + i, h, t]`.
pub fn pixel_shuffle(x: &Array4<f64>, r: usize) -> Result<Array4<f64>> {
    let (b, cr, h, t) = x.dim();
    if r == 0 || cr % r != 0 {
        return shape_err(format!("pixel shuffle: {cr} channels not divisible by {r}"));
    }
    let c = cr / r;
    let mut out = Array4::<f64>::zeros((b, c, h, t * r));
    for bi in 0..b {
        for ci in 0..c {
            for i in 0..r {
                for hi in 0..h {
                    for ti in 0..t {
                        out[[bi, ci, hi, ti * r + i]] = x[[bi, ci * r + i, hi, ti]];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Inverse of [`pixel_shuffle`]; also its backward pass.
pub fn pixel_unshuffle(x: &Array4<f64>, r: usize) -> Result<Array4<f64>> {
    let (b, c, h, tr) = x.dim();
    if r == 0 || tr % r != 0 {
        return shape_err(format!("pixel unshuffle: length {tr} not divisible by {r}"));
    }
    let t = tr / r;
    let mut out = Array4::<f64>::zeros((b, c * r, h, t));
    for bi in 0..b {
        for ci in 0..c {
            for i in 0..r {
                for hi in 0..h {
                    for ti in 0..t {
                        out[[bi, ci * r + i, hi, ti]] = x[[bi, ci, hi, ti * r + i]];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// [`pixel_shuffle`] on `(batch, channels, frames)` tensors.
pub fn pixel_shuffle_1d(x: &Array3<f64>, r: usize) -> Result<Array3<f64>> {
    let (b, c, t) = x.dim();
    let x4 = x.to_shape((b, c, 1, t)).unwrap().to_owned();
    let y = pixel_shuffle(&x4, r)?;
    let (b, c, _, t) = y.dim();
    Ok(y.into_shape_with_order((b, c, t)).unwrap())
}

pub fn pixel_unshuffle_1d(x: &Array3<f64>, r: usize) -> Result<Array3<f64>> {
    let (b, c, t) = x.dim();
    let x4 = x.to_shape((b, c, 1, t)).unwrap().to_owned();
    let y = pixel_unshuffle(&x4, r)?;
    let (b, c, _, t) = y.dim();
    Ok(y.into_shape_with_order((b, c, t)).unwrap())
}
