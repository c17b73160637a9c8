//! One alternating update: both critics on their least-squares losses with
//! the converted features held fixed, then both generators jointly on the
//! combined generator objective.

use ndarray::{Array2, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainingConfig;
use super::schedule::{lambda_id_at, lr_at};
use crate::error::{Error, Result};
use crate::losses::{
    adv_loss_discriminator, adv_loss_discriminator_grad, adv_loss_generator, adv_loss_generator_grad,
    l1_mean, l1_mean_grad, total_losses, LossBreakdown, LossParts,
};
use crate::model::{as_image, from_image, CycleModels, Discriminator, Generator};
use crate::nn::params::{all_finite, zeros_like};
use crate::optim::Adam;

/// Complete mutable state of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainerState {
    pub iteration: u64,
    pub models: CycleModels,
    pub opt_g_xy: Adam,
    pub opt_g_yx: Adam,
    pub opt_d_x: Adam,
    pub opt_d_y: Adam,
    pub rng: ChaCha8Rng,
}

impl TrainerState {
    /// Fresh state: seeded weights, zero optimizer moments, and a crop RNG
    /// derived from the same seed on a separate stream.
    pub fn new(cfg: &TrainingConfig) -> Result<Self> {
        cfg.validate()?;
        let models = CycleModels::init(&cfg.model, cfg.crop_frames, cfg.seed)?;
        let (b1, b2, eps) = (cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
        let opt_g_xy = Adam::new(&models.g_xy, b1, b2, eps);
        let opt_g_yx = Adam::new(&models.g_yx, b1, b2, eps);
        let opt_d_x = Adam::new(&models.d_x, b1, b2, eps);
        let opt_d_y = Adam::new(&models.d_y, b1, b2, eps);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);
        Ok(Self {
            iteration: 0,
            models,
            opt_g_xy,
            opt_g_yx,
            opt_d_x,
            opt_d_y,
            rng,
        })
    }
}

/// Least-squares critic loss on real and converted batches, with its
/// parameter gradient.
pub fn discriminator_objective(
    d: &Discriminator,
    real: &Array3<f64>,
    fake: &Array3<f64>,
) -> Result<(f64, Discriminator)> {
    let (real_s, real_c) = d.forward_train(&as_image(real))?;
    let (fake_s, fake_c) = d.forward_train(&as_image(fake))?;
    let loss = adv_loss_discriminator(&real_s, &fake_s)?;
    let (gr, gf) = adv_loss_discriminator_grad(&real_s, &fake_s);
    let mut grad = zeros_like(d);
    d.backward(&real_c, &gr, &mut grad);
    d.backward(&fake_c, &gf, &mut grad);
    Ok((loss, grad))
}

/// `mean((D(fake) − 1)²)` and its gradient with respect to `fake`.
fn adversarial_input_grad(d: &Discriminator, fake: &Array3<f64>) -> Result<(f64, Array3<f64>)> {
    let (s, c) = d.forward_train(&as_image(fake))?;
    let loss = adv_loss_generator(&s)?;
    let mut scratch = zeros_like(d);
    let dimg = d.backward(&c, &adv_loss_generator_grad(&s), &mut scratch);
    Ok((loss, from_image(dimg)))
}

pub struct GeneratorObjective {
    pub parts: LossParts,
    pub total: f64,
    pub grad_xy: Generator,
    pub grad_yx: Generator,
}

/// Generator objective
/// `adv(G_xy, D_y) + adv(G_yx, D_x) + λ_cyc·cyc + λ_id·id` with the gradient
/// for both generators. Critic parameters are read but never modified.
pub fn generator_objective(
    models: &CycleModels,
    x: &Array3<f64>,
    y: &Array3<f64>,
    lambda_cyc: f64,
    lambda_id: f64,
) -> Result<GeneratorObjective> {
    let CycleModels { g_xy, g_yx, d_x, d_y } = models;
    let (fake_y, c_fake_y) = g_xy.forward_train(x)?;
    let (fake_x, c_fake_x) = g_yx.forward_train(y)?;
    let (adv_g_xy, d_fake_y_adv) = adversarial_input_grad(d_y, &fake_y)?;
    let (adv_g_yx, d_fake_x_adv) = adversarial_input_grad(d_x, &fake_x)?;

    let (cyc_x, c_cyc_x) = g_yx.forward_train(&fake_y)?;
    let (cyc_y, c_cyc_y) = g_xy.forward_train(&fake_x)?;
    let cyc = l1_mean(&cyc_x, x)? + l1_mean(&cyc_y, y)?;

    let (id_y, c_id_y) = g_xy.forward_train(y)?;
    let (id_x, c_id_x) = g_yx.forward_train(x)?;
    let id = l1_mean(&id_y, y)? + l1_mean(&id_x, x)?;

    let mut grad_xy = zeros_like(g_xy);
    let mut grad_yx = zeros_like(g_yx);

    let d_fake_y_cyc = g_yx.backward(&c_cyc_x, &(l1_mean_grad(&cyc_x, x) * lambda_cyc), &mut grad_yx);
    let d_fake_x_cyc = g_xy.backward(&c_cyc_y, &(l1_mean_grad(&cyc_y, y) * lambda_cyc), &mut grad_xy);
    g_xy.backward(&c_fake_y, &(d_fake_y_adv + d_fake_y_cyc), &mut grad_xy);
    g_yx.backward(&c_fake_x, &(d_fake_x_adv + d_fake_x_cyc), &mut grad_yx);
    if lambda_id > 0.0 {
        g_xy.backward(&c_id_y, &(l1_mean_grad(&id_y, y) * lambda_id), &mut grad_xy);
        g_yx.backward(&c_id_x, &(l1_mean_grad(&id_x, x) * lambda_id), &mut grad_yx);
    }

    let parts = LossParts {
        adv_g_xy,
        adv_g_yx,
        cyc,
        id,
        ..Default::default()
    };
    let total = total_losses(parts, lambda_cyc, lambda_id)?.total_g;
    Ok(GeneratorObjective {
        parts,
        total,
        grad_xy,
        grad_yx,
    })
}

fn ensure_finite(iteration: u64, what: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite {
            iteration,
            what: format!("{what} = {v}"),
        })
    }
}

/// One training iteration on normalized `(batch, D, crop_frames)` crops.
/// On error the state is left as it was before the call.
pub fn train_step(
    state: &mut TrainerState,
    crop_x: &Array3<f64>,
    crop_y: &Array3<f64>,
    cfg: &TrainingConfig,
) -> Result<LossBreakdown> {
    let it = state.iteration;
    let (lr_g, lr_d) = lr_at(it, cfg);
    let lambda_id = lambda_id_at(it, cfg);
    let m = &state.models;

    // Critics first, on converted features from the current generators.
    let fake_y = m.g_xy.forward(crop_x)?;
    let fake_x = m.g_yx.forward(crop_y)?;
    let (adv_d_y, grad_d_y) = discriminator_objective(&m.d_y, crop_y, &fake_y)?;
    let (adv_d_x, grad_d_x) = discriminator_objective(&m.d_x, crop_x, &fake_x)?;
    ensure_finite(it, "critic loss D_y", adv_d_y)?;
    ensure_finite(it, "critic loss D_x", adv_d_x)?;

    let mut d_y = m.d_y.clone();
    let mut d_x = m.d_x.clone();
    let mut opt_d_y = state.opt_d_y.clone();
    let mut opt_d_x = state.opt_d_x.clone();
    opt_d_y.update(&mut d_y, &grad_d_y, lr_d);
    opt_d_x.update(&mut d_x, &grad_d_x, lr_d);

    // Generators against the updated critics.
    let mut models = CycleModels {
        g_xy: m.g_xy.clone(),
        g_yx: m.g_yx.clone(),
        d_x,
        d_y,
    };
    let obj = generator_objective(&models, crop_x, crop_y, cfg.lambda_cyc, lambda_id)?;
    ensure_finite(it, "generator total loss", obj.total)?;
    let mut opt_g_xy = state.opt_g_xy.clone();
    let mut opt_g_yx = state.opt_g_yx.clone();
    opt_g_xy.update(&mut models.g_xy, &obj.grad_xy, lr_g);
    opt_g_yx.update(&mut models.g_yx, &obj.grad_yx, lr_g);

    if !all_finite(&models) {
        return Err(Error::NonFinite {
            iteration: it,
            what: "parameters after update".into(),
        });
    }

    let parts = LossParts {
        adv_d_x,
        adv_d_y,
        ..obj.parts
    };
    let losses = total_losses(parts, cfg.lambda_cyc, lambda_id)?;

    state.models = models;
    state.opt_d_x = opt_d_x;
    state.opt_d_y = opt_d_y;
    state.opt_g_xy = opt_g_xy;
    state.opt_g_yx = opt_g_yx;
    state.iteration += 1;
    Ok(losses)
}

/// Critic scores for a batch, for diagnostics.
pub fn critic_scores(d: &Discriminator, batch: &Array3<f64>) -> Result<Array2<f64>> {
    d.forward(&as_image(batch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::nn::params::flatten;

    fn cfg() -> TrainingConfig {
        TrainingConfig {
            crop_frames: 16,
            model: ModelConfig::tiny(),
            seed: 11,
            ..Default::default()
        }
    }

    fn crops(phase: f64) -> Array3<f64> {
        Array3::from_shape_fn((1, 24, 16), |(_, d, t)| ((d as f64 * 0.7 + t as f64 * 0.4) + phase).sin())
    }

    #[test]
    fn zero_learning_rates_leave_parameters() {
        let mut c = cfg();
        c.lr_const_iters = 0;
        c.lr_decay_iters = 0;
        let mut s = TrainerState::new(&cfg()).unwrap();
        let before = s.models.clone();
        let l = train_step(&mut s, &crops(0.0), &crops(1.0), &c).unwrap();
        assert_eq!(s.models, before);
        assert_eq!(s.iteration, 1);
        assert!(l.is_finite() && l.total_g > 0.0);
    }

    #[test]
    fn updates_are_isolated_per_network_kind() {
        let mut c = cfg();
        c.lr_d = 0.0;
        let mut s = TrainerState::new(&cfg()).unwrap();
        let before = s.models.clone();
        train_step(&mut s, &crops(0.0), &crops(1.0), &c).unwrap();
        assert_eq!(s.models.d_x, before.d_x);
        assert_eq!(s.models.d_y, before.d_y);
        assert_ne!(s.models.g_xy, before.g_xy);
        assert_ne!(s.models.g_yx, before.g_yx);

        let mut c = cfg();
        c.lr_g = 0.0;
        let mut s = TrainerState::new(&cfg()).unwrap();
        train_step(&mut s, &crops(0.0), &crops(1.0), &c).unwrap();
        assert_eq!(s.models.g_xy, before.g_xy);
        assert_eq!(s.models.g_yx, before.g_yx);
        assert_ne!(s.models.d_x, before.d_x);
        assert_ne!(s.models.d_y, before.d_y);
    }

    #[test]
    fn uninformative_critics_and_zero_weights_give_no_gradient() {
        let s = TrainerState::new(&cfg()).unwrap();
        let mut m = s.models.clone();
        m.d_x = zeros_like(&m.d_x);
        m.d_y = zeros_like(&m.d_y);
        let (x, y) = (crops(0.0), crops(2.0));
        let o = generator_objective(&m, &x, &y, 0.0, 0.0).unwrap();
        assert!(flatten(&o.grad_xy).iter().all(|&g| g == 0.0));
        assert!(flatten(&o.grad_yx).iter().all(|&g| g == 0.0));
        assert_eq!(o.total, 0.25 + 0.25);

        let o = generator_objective(&m, &x, &y, 1.0, 0.0).unwrap();
        assert!(flatten(&o.grad_xy).iter().any(|&g| g != 0.0));
    }

    #[test]
    fn seeded_steps_are_reproducible() {
        let c = cfg();
        let run = || {
            let mut s = TrainerState::new(&c).unwrap();
            for k in 0..3 {
                train_step(&mut s, &crops(k as f64), &crops(k as f64 + 0.5), &c).unwrap();
            }
            s
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_input_aborts_without_mutation() {
        let c = cfg();
        let mut s = TrainerState::new(&c).unwrap();
        let before = s.clone();
        let mut x = crops(0.0);
        x[[0, 3, 3]] = f64::NAN;
        let r = train_step(&mut s, &x, &crops(1.0), &c);
        assert!(matches!(r, Err(Error::NonFinite { iteration: 0, .. })));
        assert_eq!(s, before);
    }
}
