use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;
pub const DEFAULT_FRAME_PERIOD_MS: f64 = 5.0;
pub const DEFAULT_MCEP_ORDER: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        let w = Self {
            samples,
            sample_rate,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::InvalidInput("sample rate must be positive".into()));
        }
        if let Some(i) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample at index {i}")));
        }
        Ok(())
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Mel-cepstral frames, `T × D`.
#[derive(Clone, Debug, PartialEq)]
pub struct McepSequence {
    pub frames: Array2<f64>,
    pub frame_period_ms: f64,
}

impl McepSequence {
    pub fn new(frames: Array2<f64>, frame_period_ms: f64) -> Self {
        Self {
            frames,
            frame_period_ms,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.frames.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() || self.dim() == 0 {
            return Err(Error::InvalidInput("empty MCEP sequence".into()));
        }
        if self.frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite MCEP value".into()));
        }
        Ok(())
    }
}

/// Fundamental frequency in Hz with a voicing mask. Values on unvoiced
/// frames carry no meaning (conventionally 0).
#[derive(Clone, Debug, PartialEq)]
pub struct F0Track {
    pub values: Vec<f64>,
    pub voiced: Vec<bool>,
}

impl F0Track {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.voiced.len() {
            return Err(Error::InvalidInput(format!(
                "F0 track has {} values but {} voicing flags",
                self.values.len(),
                self.voiced.len()
            )));
        }
        for (t, (&v, &voiced)) in self.values.iter().zip(&self.voiced).enumerate() {
            if voiced && !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("voiced frame {t} has F0 {v}")));
            }
        }
        Ok(())
    }
}

/// Band aperiodicities, `T × B`.
#[derive(Clone, Debug, PartialEq)]
pub struct ApSequence {
    pub frames: Array2<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSet {
    pub mcep: McepSequence,
    pub f0: F0Track,
    pub ap: ApSequence,
}

impl FeatureSet {
    pub fn frames(&self) -> usize {
        self.mcep.len()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.mcep.len();
        if t == 0 {
            return Err(Error::InvalidInput("feature set has no frames".into()));
        }
        if self.f0.len() != t || self.ap.frames.nrows() != t {
            return Err(Error::InvalidInput(format!(
                "frame counts disagree: mcep {t}, f0 {}, ap {}",
                self.f0.len(),
                self.ap.frames.nrows()
            )));
        }
        self.mcep.validate()?;
        self.f0.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzerConfig {
    #[serde(default = "default_sample_rate")]
    pub sample_rate: u32,
    #[serde(default = "default_frame_period")]
    pub frame_period_ms: f64,
    #[serde(default = "default_mcep_order")]
    pub mcep_order: usize,
}

fn default_sample_rate() -> u32 {
    DEFAULT_SAMPLE_RATE
}
fn default_frame_period() -> f64 {
    DEFAULT_FRAME_PERIOD_MS
}
fn default_mcep_order() -> usize {
    DEFAULT_MCEP_ORDER
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        Self {
            sample_rate: DEFAULT_SAMPLE_RATE,
            frame_period_ms: DEFAULT_FRAME_PERIOD_MS,
            mcep_order: DEFAULT_MCEP_ORDER,
        }
    }
}

impl AnalyzerConfig {
    /// Samples per frame shift.
    pub fn hop(&self) -> usize {
        (self.sample_rate as f64 * self.frame_period_ms / 1000.0).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 || !(self.frame_period_ms > 0.0) || self.mcep_order == 0 {
            return Err(Error::Config(format!("invalid analyzer config {self:?}")));
        }
        if self.hop() == 0 {
            return Err(Error::Config("frame period shorter than one sample".into()));
        }
        Ok(())
    }
}
