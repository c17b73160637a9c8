//! Per-speaker statistics, MCEP normalization and the log-Gaussian F0 map.
//!
//! All variances are population variances. Standard deviations are clamped
//! below at [`STD_FLOOR`].

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::types::{F0Track, McepSequence};
use crate::error::{shape_err, Error, Result};

pub const STD_FLOOR: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Mean 0, std 1.
    pub fn neutral(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct F0Stats {
    pub log_mean: f64,
    pub log_std: f64,
}

/// Statistics of one speaker's corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeakerStats {
    pub mcep: NormStats,
    pub f0: F0Stats,
}

fn mean_and_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let (sum, n) = values.clone().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt(), n)
}

/// Per-dimension mean and std over every frame of every utterance.
pub fn compute_mcep_stats(corpus: &[McepSequence]) -> Result<NormStats> {
    let first = corpus
        .first()
        .ok_or_else(|| Error::InvalidInput("cannot compute MCEP statistics of an empty corpus".into()))?;
    let dim = first.dim();
    if let Some(bad) = corpus.iter().find(|m| m.dim() != dim) {
        return shape_err(format!("corpus mixes MCEP dimensions {dim} and {}", bad.dim()));
    }
    let total: usize = corpus.iter().map(McepSequence::len).sum();
    if total == 0 {
        return Err(Error::InvalidInput("corpus has no frames".into()));
    }
    let mut mean = Array1::<f64>::zeros(dim);
    for m in corpus {
        mean += &m.frames.sum_axis(Axis(0));
    }
    mean /= total as f64;
    let mut var = Array1::<f64>::zeros(dim);
    for m in corpus {
        let centered = &m.frames - &mean;
        var += &(&centered * &centered).sum_axis(Axis(0));
    }
    var /= total as f64;
    Ok(NormStats {
        mean: mean.to_vec(),
        std: var.iter().map(|v| v.sqrt().max(STD_FLOOR)).collect(),
    })
}

fn check_dim(m: &McepSequence, s: &NormStats) -> Result<()> {
    if m.dim() != s.dim() || s.std.len() != s.dim() {
        return shape_err(format!(
            "MCEP dimension {} does not match statistics dimension {}",
            m.dim(),
            s.dim()
        ));
    }
    Ok(())
}

/// `(x − mean) / std` per dimension.
pub fn normalize(m: &McepSequence, s: &NormStats) -> Result<McepSequence> {
    check_dim(m, s)?;
    let mean = Array1::from(s.mean.clone());
    let std = Array1::from(s.std.clone());
    let frames: Array2<f64> = (&m.frames - &mean) / &std;
    Ok(McepSequence::new(frames, m.frame_period_ms))
}

/// `x · std + mean` per dimension; inverse of [`normalize`].
pub fn denormalize(m: &McepSequence, s: &NormStats) -> Result<McepSequence> {
    check_dim(m, s)?;
    let mean = Array1::from(s.mean.clone());
    let std = Array1::from(s.std.clone());
    let frames: Array2<f64> = &m.frames * &std + &mean;
    Ok(McepSequence::new(frames, m.frame_period_ms))
}

/// Mean and std of `ln f0` over voiced frames of all tracks.
pub fn compute_f0_stats(tracks: &[F0Track]) -> Result<F0Stats> {
    let voiced = tracks.iter().flat_map(|t| {
        t.values
            .iter()
            .zip(&t.voiced)
            .filter(|(_, &v)| v)
            .map(|(&f, _)| f.ln())
    });
    if voiced.clone().next().is_none() {
        return Err(Error::InvalidInput("no voiced frames for F0 statistics".into()));
    }
    let (log_mean, log_std, _) = mean_and_std(voiced);
    Ok(F0Stats {
        log_mean,
        log_std: log_std.max(STD_FLOOR),
    })
}

/// Log-Gaussian normalized F0 transform on voiced frames:
/// `ln f0' = (ln f0 − μ_src)·σ_tgt/σ_src + μ_tgt`. Unvoiced frames and the
/// voicing mask pass through unchanged.
pub fn convert_f0(track: &F0Track, src: &F0Stats, tgt: &F0Stats) -> Result<F0Track> {
    if !(src.log_std >= STD_FLOOR) {
        return Err(Error::InvalidInput(format!(
            "source log-F0 std {} below floor {STD_FLOOR}",
            src.log_std
        )));
    }
    track.validate()?;
    let ratio = tgt.log_std / src.log_std;
    let values = track
        .values
        .iter()
        .zip(&track.voiced)
        .map(|(&f, &v)| {
            if v {
                ((f.ln() - src.log_mean) * ratio + tgt.log_mean).exp()
            } else {
                f
            }
        })
        .collect();
    Ok(F0Track {
        values,
        voiced: track.voiced.clone(),
    })
}
