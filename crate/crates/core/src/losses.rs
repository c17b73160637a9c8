//! Objective terms for cycle-consistent adversarial training.
//!
//! The adversarial terms use least-squares targets (1 for real, 0 for
//! converted). L1 distances are means over elements, so weights do not
//! depend on the crop length.

use ndarray::{Array, Dimension, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

fn check_nonempty<D: Dimension>(a: &Array<f64, D>, what: &str) -> Result<()> {
    if a.is_empty() {
        return Err(Error::InvalidInput(format!("{what}: empty score set")));
    }
    Ok(())
}

fn check_same<D: Dimension>(a: &Array<f64, D>, b: &Array<f64, D>, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return shape_err(format!("{what}: {:?} vs {:?}", a.shape(), b.shape()));
    }
    if a.is_empty() {
        return Err(Error::InvalidInput(format!("{what}: empty tensors")));
    }
    Ok(())
}

fn mean_sq_dev<D: Dimension>(a: &Array<f64, D>, target: f64) -> f64 {
    a.iter().map(|v| (v - target) * (v - target)).sum::<f64>() / a.len() as f64
}

/// `mean((real − 1)²) + mean(fake²)`
pub fn adv_loss_discriminator<D: Dimension>(real: &Array<f64, D>, fake: &Array<f64, D>) -> Result<f64> {
    check_nonempty(real, "discriminator loss (real)")?;
    check_nonempty(fake, "discriminator loss (fake)")?;
    Ok(mean_sq_dev(real, 1.0) + mean_sq_dev(fake, 0.0))
}

/// Gradients of [`adv_loss_discriminator`] with respect to the real and fake scores.
pub fn adv_loss_discriminator_grad<D: Dimension>(
    real: &Array<f64, D>,
    fake: &Array<f64, D>,
) -> (Array<f64, D>, Array<f64, D>) {
    let nr = real.len() as f64;
    let nf = fake.len() as f64;
    (real.mapv(|r| 2.0 * (r - 1.0) / nr), fake.mapv(|f| 2.0 * f / nf))
}

/// `mean((fake − 1)²)`
pub fn adv_loss_generator<D: Dimension>(fake: &Array<f64, D>) -> Result<f64> {
    check_nonempty(fake, "generator adversarial loss")?;
    Ok(mean_sq_dev(fake, 1.0))
}

pub fn adv_loss_generator_grad<D: Dimension>(fake: &Array<f64, D>) -> Array<f64, D> {
    let n = fake.len() as f64;
    fake.mapv(|f| 2.0 * (f - 1.0) / n)
}

/// Log-likelihood form `mean(log D(real)) + mean(log(1 − D(fake)))`.
/// Reported for reference only; training uses the least-squares terms.
pub fn log_likelihood_objective<D: Dimension>(real: &Array<f64, D>, fake: &Array<f64, D>) -> Result<f64> {
    check_nonempty(real, "log-likelihood objective (real)")?;
    check_nonempty(fake, "log-likelihood objective (fake)")?;
    let r = real.iter().map(|v| v.ln()).sum::<f64>() / real.len() as f64;
    let f = fake.iter().map(|v| (1.0 - v).ln()).sum::<f64>() / fake.len() as f64;
    Ok(r + f)
}

/// Mean absolute error.
pub fn l1_mean<D: Dimension>(a: &Array<f64, D>, b: &Array<f64, D>) -> Result<f64> {
    check_same(a, b, "l1 distance")?;
    let mut s = 0.0;
    Zip::from(a).and(b).for_each(|x, y| s += (x - y).abs());
    Ok(s / a.len() as f64)
}

/// Gradient of [`l1_mean`] with respect to `pred`.
pub fn l1_mean_grad<D: Dimension>(pred: &Array<f64, D>, target: &Array<f64, D>) -> Array<f64, D> {
    let n = pred.len() as f64;
    let mut g = pred.clone();
    Zip::from(&mut g).and(pred).and(target).for_each(|g, &p, &t| {
        let d = p - t;
        *g = if d > 0.0 {
            1.0 / n
        } else if d < 0.0 {
            -1.0 / n
        } else {
            0.0
        };
    });
    g
}

/// `|G_yx(G_xy(x)) − x|₁ + |G_xy(G_yx(y)) − y|₁`
pub fn cycle_loss<D: Dimension>(
    x: &Array<f64, D>,
    x_roundtrip: &Array<f64, D>,
    y: &Array<f64, D>,
    y_roundtrip: &Array<f64, D>,
) -> Result<f64> {
    Ok(l1_mean(x_roundtrip, x)? + l1_mean(y_roundtrip, y)?)
}

/// `|G_xy(y) − y|₁ + |G_yx(x) − x|₁`
pub fn identity_loss<D: Dimension>(
    y: &Array<f64, D>,
    g_xy_of_y: &Array<f64, D>,
    x: &Array<f64, D>,
    g_yx_of_x: &Array<f64, D>,
) -> Result<f64> {
    Ok(l1_mean(g_xy_of_y, y)? + l1_mean(g_yx_of_x, x)?)
}

/// Unweighted loss terms of one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub adv_g_xy: f64,
    pub adv_g_yx: f64,
    pub adv_d_x: f64,
    pub adv_d_y: f64,
    pub cyc: f64,
    pub id: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub adv_g_xy: f64,
    pub adv_g_yx: f64,
    pub adv_d_x: f64,
    pub adv_d_y: f64,
    pub cyc: f64,
    pub id: f64,
    pub total_g: f64,
    pub total_d_x: f64,
    pub total_d_y: f64,
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        [
            self.adv_g_xy,
            self.adv_g_yx,
            self.adv_d_x,
            self.adv_d_y,
            self.cyc,
            self.id,
            self.total_g,
            self.total_d_x,
            self.total_d_y,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// `total_g = adv_g_xy + adv_g_yx + λ_cyc·cyc + λ_id·id`; each critic's total
/// is its own adversarial term.
pub fn total_losses(parts: LossParts, lambda_cyc: f64, lambda_id: f64) -> Result<LossBreakdown> {
    if !(lambda_cyc >= 0.0 && lambda_id >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "loss weights must be non-negative (cyc {lambda_cyc}, id {lambda_id})"
        )));
    }
    let mut total_g = parts.adv_g_xy + parts.adv_g_yx + lambda_cyc * parts.cyc;
    // A zero weight drops the term entirely, even if it is non-finite.
    if lambda_id > 0.0 {
        total_g += lambda_id * parts.id;
    }
    Ok(LossBreakdown {
        adv_g_xy: parts.adv_g_xy,
        adv_g_yx: parts.adv_g_yx,
        adv_d_x: parts.adv_d_x,
        adv_d_y: parts.adv_d_y,
        cyc: parts.cyc,
        id: parts.id,
        total_g,
        total_d_x: parts.adv_d_x,
        total_d_y: parts.adv_d_y,
    })
}
