//! Utterance conversion with a trained generator.

use std::path::Path;

use ndarray::{Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    convert_f0, denormalize, normalize, AnalyzerConfig, FeatureSet, McepSequence, SpeakerStats, Vocoder, Waveform,
};
use crate::model::store::{load_generator, save_generator};
use crate::model::Generator;

/// A sequence-to-sequence map over `(batch, D, T)` arrays.
pub trait FeatureMapper {
    fn feature_dim(&self) -> usize;
    /// Accepted frame counts are multiples of this.
    fn length_multiple(&self) -> usize;
    fn map(&self, x: &Array3<f64>) -> Result<Array3<f64>>;
}

impl FeatureMapper for Generator {
    fn feature_dim(&self) -> usize {
        Generator::feature_dim(self)
    }

    fn length_multiple(&self) -> usize {
        Generator::length_multiple(self)
    }

    fn map(&self, x: &Array3<f64>) -> Result<Array3<f64>> {
        self.forward(x)
    }
}

/// Index into `0..len` reflecting about the last frame, without repeating it.
fn reflect_index(i: usize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len - 1);
    let j = i % period;
    if j < len {
        j
    } else {
        period - j
    }
}

/// Appends reflected frames so the frame count is a multiple of `m`.
pub fn pad_to_multiple(frames: &Array2<f64>, m: usize) -> Array2<f64> {
    let t = frames.nrows();
    let padded = t.div_ceil(m) * m;
    if padded == t {
        return frames.clone();
    }
    let idx: Vec<usize> = (0..padded).map(|i| reflect_index(i, t)).collect();
    frames.select(Axis(0), &idx)
}

/// One conversion direction: a mapper plus both speakers' statistics.
#[derive(Clone, Debug)]
pub struct VoiceConverter<M> {
    pub mapper: M,
    pub source: SpeakerStats,
    pub target: SpeakerStats,
    pub analyzer: AnalyzerConfig,
}

#[derive(Serialize, Deserialize)]
struct ConverterMeta {
    source: SpeakerStats,
    target: SpeakerStats,
    analyzer: AnalyzerConfig,
}

impl<M: FeatureMapper> VoiceConverter<M> {
    pub fn new(mapper: M, source: SpeakerStats, target: SpeakerStats, analyzer: AnalyzerConfig) -> Result<Self> {
        let d = mapper.feature_dim();
        for (who, s) in [("source", &source), ("target", &target)] {
            if s.mcep.dim() != d || s.mcep.std.len() != d {
                return Err(Error::Shape(format!(
                    "{who} statistics have dimension {}, mapper expects {d}",
                    s.mcep.dim()
                )));
            }
        }
        analyzer.validate()?;
        Ok(Self {
            mapper,
            source,
            target,
            analyzer,
        })
    }

    /// Maps MCEPs and F0; aperiodicity is copied. Frame count is preserved.
    pub fn convert_features(&self, f: &FeatureSet) -> Result<FeatureSet> {
        f.validate().map_err(|e| e.at("input features"))?;
        let norm = normalize(&f.mcep, &self.source.mcep).map_err(|e| e.at("normalize"))?;
        let t = norm.len();
        let padded = pad_to_multiple(&norm.frames, self.mapper.length_multiple());
        let input = padded.t().insert_axis(Axis(0)).to_owned();
        let out = self.mapper.map(&input).map_err(|e| e.at("generator"))?;
        let mapped = out.index_axis(Axis(0), 0).t().slice(ndarray::s![..t, ..]).to_owned();
        let mcep = denormalize(&McepSequence::new(mapped, f.mcep.frame_period_ms), &self.target.mcep)
            .map_err(|e| e.at("denormalize"))?;
        let f0 = convert_f0(&f.f0, &self.source.f0, &self.target.f0).map_err(|e| e.at("f0 conversion"))?;
        Ok(FeatureSet {
            mcep,
            f0,
            ap: f.ap.clone(),
        })
    }

    /// Analysis, [`Self::convert_features`], then synthesis.
    pub fn convert_utterance(&self, w: &Waveform, vocoder: &dyn Vocoder) -> Result<Waveform> {
        if w.sample_rate != self.analyzer.sample_rate {
            return Err(Error::InvalidInput(format!(
                "waveform sample rate {} differs from analyzer rate {}",
                w.sample_rate, self.analyzer.sample_rate
            ))
            .at("analysis"));
        }
        let f = vocoder.analyze(w, &self.analyzer).map_err(|e| e.at("analysis"))?;
        let converted = self.convert_features(&f)?;
        vocoder
            .synthesize(&converted, &self.analyzer)
            .map_err(|e| e.at("synthesis"))
    }
}

impl VoiceConverter<Generator> {
    /// Writes the generator, topology and statistics to one file.
    pub fn save(&self, path: &Path, cfg: &crate::model::GeneratorConfig) -> Result<()> {
        let meta = ConverterMeta {
            source: self.source.clone(),
            target: self.target.clone(),
            analyzer: self.analyzer.clone(),
        };
        save_generator(path, &self.mapper, cfg, serde_json::to_value(meta)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (g, _, extra) = load_generator(path)?;
        let meta: ConverterMeta = serde_json::from_value(extra)
            .map_err(|e| Error::format(path, format!("missing converter statistics: {e}")))?;
        Self::new(g, meta.source, meta.target, meta.analyzer)
    }
}
