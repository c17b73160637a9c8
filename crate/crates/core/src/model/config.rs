use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer widths and kernel sizes of the 1D gated generator.
///
/// Channel counts are measured after gating. Each downsampling stage halves
/// the frame rate and each upsampling stage doubles it through a pixel
/// shuffle, so the two lists must have equal length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub feature_dim: usize,
    pub input_channels: usize,
    pub input_kernel: usize,
    pub down_channels: Vec<usize>,
    pub down_kernel: usize,
    pub residual_blocks: usize,
    pub residual_inner_channels: usize,
    pub residual_kernel: usize,
    pub up_channels: Vec<usize>,
    pub up_kernel: usize,
    pub output_kernel: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            feature_dim: 24,
            input_channels: 128,
            input_kernel: 15,
            down_channels: vec![256, 512],
            down_kernel: 5,
            residual_blocks: 6,
            residual_inner_channels: 1024,
            residual_kernel: 3,
            up_channels: vec![512, 256],
            up_kernel: 5,
            output_kernel: 15,
        }
    }
}

impl GeneratorConfig {
    /// Small variant used by the smoke tests and the toy experiment.
    pub fn tiny() -> Self {
        Self {
            feature_dim: 24,
            input_channels: 32,
            input_kernel: 15,
            down_channels: vec![32, 32],
            down_kernel: 5,
            residual_blocks: 2,
            residual_inner_channels: 64,
            residual_kernel: 3,
            up_channels: vec![32, 32],
            up_kernel: 5,
            output_kernel: 15,
        }
    }

    /// Frame counts must be multiples of this.
    pub fn length_multiple(&self) -> usize {
        1 << self.down_channels.len()
    }

    pub fn validate(&self) -> Result<()> {
        let odd = [
            self.input_kernel,
            self.down_kernel,
            self.residual_kernel,
            self.up_kernel,
            self.output_kernel,
        ];
        if odd.iter().any(|k| k % 2 == 0) {
            return Err(Error::Config("generator kernel sizes must be odd".into()));
        }
        if self.down_channels.len() != self.up_channels.len() {
            return Err(Error::Config(
                "generator needs as many upsampling as downsampling stages".into(),
            ));
        }
        let widths = [self.feature_dim, self.input_channels, self.residual_inner_channels];
        if widths.iter().chain(&self.down_channels).chain(&self.up_channels).any(|&c| c == 0) {
            return Err(Error::Config("generator channel counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscriminatorHead {
    /// Flatten and project to one score per crop.
    Dense,
    /// 3×3 convolution to one channel; one score per output position.
    Patch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscriminatorConfig {
    pub stem_channels: usize,
    pub stage_channels: Vec<usize>,
    pub kernel: usize,
    pub head: DiscriminatorHead,
    /// Skip the final sigmoid and emit raw scores.
    #[serde(default)]
    pub raw_scores: bool,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self {
            stem_channels: 128,
            stage_channels: vec![128, 256, 512],
            kernel: 3,
            head: DiscriminatorHead::Dense,
            raw_scores: false,
        }
    }
}

impl DiscriminatorConfig {
    pub fn tiny() -> Self {
        Self {
            stem_channels: 8,
            stage_channels: vec![16, 16, 16],
            kernel: 3,
            head: DiscriminatorHead::Dense,
            raw_scores: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel % 2 == 0 {
            return Err(Error::Config("discriminator kernel must be odd".into()));
        }
        if self.stem_channels == 0 || self.stage_channels.iter().any(|&c| c == 0) {
            return Err(Error::Config("discriminator channel counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
}

impl ModelConfig {
    pub fn tiny() -> Self {
        Self {
            generator: GeneratorConfig::tiny(),
            discriminator: DiscriminatorConfig::tiny(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.discriminator.validate()
    }
}
