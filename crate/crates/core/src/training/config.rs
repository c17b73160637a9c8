use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::ModelConfig;

/// Every hyperparameter of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub lambda_cyc: f64,
    pub lambda_id: f64,
    /// Identity-mapping loss is applied for iterations `< id_active_iters`.
    pub id_active_iters: u64,
    pub crop_frames: usize,
    pub batch_size: usize,
    pub lr_g: f64,
    pub lr_d: f64,
    pub lr_const_iters: u64,
    pub lr_decay_iters: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    pub checkpoint_every: u64,
    pub total_iters: u64,
    pub model: ModelConfig,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            lambda_cyc: 10.0,
            lambda_id: 5.0,
            id_active_iters: 10_000,
            crop_frames: 128,
            batch_size: 1,
            lr_g: 2e-4,
            lr_d: 1e-4,
            lr_const_iters: 200_000,
            lr_decay_iters: 200_000,
            adam_beta1: 0.5,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            checkpoint_every: 10_000,
            total_iters: 400_000,
            model: ModelConfig::default(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.lambda_cyc >= 0.0 && self.lambda_id >= 0.0) {
            return bad("loss weights must be non-negative");
        }
        if !(self.lr_g > 0.0 && self.lr_d > 0.0) {
            return bad("learning rates must be positive");
        }
        if self.crop_frames == 0 || self.batch_size == 0 || self.checkpoint_every == 0 {
            return bad("crop_frames, batch_size and checkpoint_every must be positive");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            return bad("Adam epsilon must be positive");
        }
        self.model.validate()?;
        let m = self.model.generator.length_multiple();
        if self.crop_frames % m != 0 {
            return Err(Error::Config(format!(
                "crop_frames {} must be a multiple of {m}",
                self.crop_frames
            )));
        }
        Ok(())
    }

    /// Digest of every field that changes the trajectory of a run. The run
    /// length and checkpoint interval are excluded so a run can be extended.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.total_iters = 0;
        c.checkpoint_every = 0;
        let json = serde_json::to_vec(&c).expect("config serializes");
        let d = Sha256::digest(&json);
        d[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
