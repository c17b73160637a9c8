//! Objective measures of over-smoothing: global variance and modulation
//! spectra of MCEP trajectories, and reports built from them.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::features::McepSequence;

pub const MS_FLOOR: f64 = 1e-10;
pub const REPORT_VERSION: u32 = 1;

/// Per-dimension variance averaged over utterances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GvProfile {
    pub values: Vec<f64>,
}

fn check_corpus(corpus: &[McepSequence]) -> Result<usize> {
    let first = corpus
        .first()
        .ok_or_else(|| Error::InvalidInput("metric needs a non-empty corpus".into()))?;
    let dim = first.dim();
    for m in corpus {
        if m.dim() != dim {
            return shape_err(format!("corpus mixes dimensions {dim} and {}", m.dim()));
        }
        if m.is_empty() {
            return Err(Error::InvalidInput("corpus contains an empty utterance".into()));
        }
    }
    Ok(dim)
}

/// Population variance over time per utterance and dimension, then the mean
/// over utterances.
pub fn global_variance(corpus: &[McepSequence]) -> Result<GvProfile> {
    let dim = check_corpus(corpus)?;
    let mut acc = vec![0.0; dim];
    for m in corpus {
        for (a, col) in acc.iter_mut().zip(m.frames.columns()) {
            *a += col.var(0.0);
        }
    }
    let n = corpus.len() as f64;
    Ok(GvProfile {
        values: acc.into_iter().map(|v| v / n).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MsConfig {
    /// DFT size; a power of two.
    pub fft_len: usize,
    /// Split trajectories into segments of this many frames instead of
    /// using whole utterances.
    pub segment_frames: Option<usize>,
}

impl Default for MsConfig {
    fn default() -> Self {
        Self {
            fft_len: 512,
            segment_frames: None,
        }
    }
}

impl MsConfig {
    pub fn bins(&self) -> usize {
        self.fft_len / 2 + 1
    }

    pub fn validate(&self) -> Result<()> {
        if !self.fft_len.is_power_of_two() || self.fft_len < 2 {
            return Err(Error::Config(format!("fft_len {} must be a power of two ≥ 2", self.fft_len)));
        }
        match self.segment_frames {
            Some(0) => Err(Error::Config("segment_frames must be positive".into())),
            Some(s) if s > self.fft_len => Err(Error::Config(format!(
                "segment_frames {s} exceeds fft_len {}",
                self.fft_len
            ))),
            _ => Ok(()),
        }
    }
}

/// `D × F` log power in dB over modulation frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MsProfile {
    pub fft_len: usize,
    pub frame_period_ms: f64,
    pub db: Vec<Vec<f64>>,
}

impl MsProfile {
    pub fn dim(&self) -> usize {
        self.db.len()
    }

    /// Modulation frequency in Hz of each bin.
    pub fn frequencies(&self) -> Vec<f64> {
        let fs = 1000.0 / self.frame_period_ms;
        (0..self.fft_len / 2 + 1)
            .map(|k| k as f64 * fs / self.fft_len as f64)
            .collect()
    }

    /// Mean over dimensions at each frequency.
    pub fn mean_over_dims(&self) -> Vec<f64> {
        let f = self.db.first().map_or(0, Vec::len);
        (0..f)
            .map(|k| self.db.iter().map(|row| row[k]).sum::<f64>() / self.db.len() as f64)
            .collect()
    }
}

/// `|X_k|² / N` for all `N = fft_len` bins of the mean-removed, zero-padded
/// trajectory. Summed over bins this equals the trajectory's energy.
pub fn power_spectrum_full(trajectory: &[f64], fft_len: usize) -> Result<Vec<f64>> {
    if trajectory.len() > fft_len {
        return shape_err(format!("trajectory of {} frames exceeds fft_len {fft_len}", trajectory.len()));
    }
    let mean = trajectory.iter().sum::<f64>() / trajectory.len().max(1) as f64;
    let mut buf: Vec<Complex<f64>> = trajectory.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    buf.resize(fft_len, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(fft_len).process(&mut buf);
    Ok(buf.iter().map(|c| c.norm_sqr() / fft_len as f64).collect())
}

fn segments(len: usize, cfg: &MsConfig) -> Vec<(usize, usize)> {
    let step = cfg.segment_frames.unwrap_or(cfg.fft_len);
    if cfg.segment_frames.is_none() && len <= cfg.fft_len {
        return vec![(0, len)];
    }
    (0..len).step_by(step).map(|s| (s, (s + step).min(len))).collect()
}

/// Power averaged over every segment of every utterance, floored at
/// [`MS_FLOOR`] and converted to dB.
pub fn modulation_spectrum(corpus: &[McepSequence], cfg: &MsConfig) -> Result<MsProfile> {
    cfg.validate()?;
    let dim = check_corpus(corpus)?;
    let bins = cfg.bins();
    let mut acc = Array2::<f64>::zeros((dim, bins));
    let mut count = 0usize;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(cfg.fft_len);
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.fft_len];
    for m in corpus {
        for (s, e) in segments(m.len(), cfg) {
            count += 1;
            for d in 0..dim {
                let col = m.frames.column(d);
                let seg = col.slice(ndarray::s![s..e]);
                let mean = seg.mean().unwrap_or(0.0);
                buf.fill(Complex::new(0.0, 0.0));
                for (b, &v) in buf.iter_mut().zip(seg.iter()) {
                    b.re = v - mean;
                }
                fft.process(&mut buf);
                for k in 0..bins {
                    acc[[d, k]] += buf[k].norm_sqr() / cfg.fft_len as f64;
                }
            }
        }
    }
    let db = acc
        .rows()
        .into_iter()
        .map(|row| row.iter().map(|&p| 10.0 * (p / count as f64).max(MS_FLOOR).log10()).collect())
        .collect();
    Ok(MsProfile {
        fft_len: cfg.fft_len,
        frame_period_ms: corpus[0].frame_period_ms,
        db,
    })
}

/// Root mean square difference over every `(dimension, frequency)` cell, in dB.
pub fn ms_rmse(a: &MsProfile, b: &MsProfile) -> Result<f64> {
    let shape = |p: &MsProfile| (p.db.len(), p.db.first().map_or(0, Vec::len));
    if shape(a) != shape(b) || a.db.iter().zip(&b.db).any(|(x, y)| x.len() != y.len()) {
        return shape_err(format!("MS profiles have shapes {:?} and {:?}", shape(a), shape(b)));
    }
    let (mut sum, mut n) = (0.0, 0usize);
    for (x, y) in a.db.iter().zip(&b.db) {
        for (u, v) in x.iter().zip(y) {
            sum += (u - v) * (u - v);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty MS profiles".into()));
    }
    Ok((sum / n as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusProfiles {
    pub id: String,
    pub utterances: usize,
    pub gv: GvProfile,
    pub ms: MsProfile,
}

/// GV and MS of source, target and converted corpora with the MS distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub version: u32,
    pub model_id: Option<String>,
    pub ms_config: MsConfig,
    pub source: CorpusProfiles,
    pub target: CorpusProfiles,
    pub converted: CorpusProfiles,
    /// `ms_rmse(target, converted)`.
    pub ms_rmse_converted: f64,
    /// `ms_rmse(target, source)`, the unconverted baseline.
    pub ms_rmse_source: f64,
}

fn profiles(id: &str, corpus: &[McepSequence], cfg: &MsConfig) -> Result<CorpusProfiles> {
    let stage = |e: Error| Error::InvalidInput(format!("{id} corpus: {e}"));
    Ok(CorpusProfiles {
        id: id.to_string(),
        utterances: corpus.len(),
        gv: global_variance(corpus).map_err(stage)?,
        ms: modulation_spectrum(corpus, cfg).map_err(stage)?,
    })
}

pub fn build_report(
    source: (&str, &[McepSequence]),
    target: (&str, &[McepSequence]),
    converted: (&str, &[McepSequence]),
    cfg: &MsConfig,
    model_id: Option<String>,
) -> Result<MetricsReport> {
    let source = profiles(source.0, source.1, cfg)?;
    let target = profiles(target.0, target.1, cfg)?;
    let converted = profiles(converted.0, converted.1, cfg)?;
    Ok(MetricsReport {
        version: REPORT_VERSION,
        model_id,
        ms_config: cfg.clone(),
        ms_rmse_converted: ms_rmse(&target.ms, &converted.ms)?,
        ms_rmse_source: ms_rmse(&target.ms, &source.ms)?,
        source,
        target,
        converted,
    })
}

fn write_series(path: &Path, header: &str, xs: impl Iterator<Item = f64>, ys: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let go = || -> std::io::Result<()> {
        writeln!(f, "# {header}")?;
        for (x, y) in xs.zip(ys) {
            writeln!(f, "{x}\t{y}")?;
        }
        f.flush()
    };
    go().map_err(|e| Error::io(path, e))
}

impl MetricsReport {
    /// Writes `report.json` and two-column plot series into `dir`:
    /// `gv_<role>.tsv` (MCEP index, variance) and `ms_<role>.tsv`
    /// (modulation frequency in Hz, dB averaged over dimensions).
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("report.json");
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        for (role, p) in [("source", &self.source), ("target", &self.target), ("converted", &self.converted)] {
            write_series(
                &dir.join(format!("gv_{role}.tsv")),
                &format!("{} GV: mcep_index variance", p.id),
                (0..p.gv.values.len()).map(|i| i as f64),
                &p.gv.values,
            )?;
            write_series(
                &dir.join(format!("ms_{role}.tsv")),
                &format!("{} MS: modulation_hz mean_db", p.id),
                p.ms.frequencies().into_iter(),
                &p.ms.mean_over_dims(),
            )?;
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let r: Self = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        if r.version != REPORT_VERSION {
            return Err(Error::format(path, format!("unsupported report version {}", r.version)));
        }
        Ok(r)
    }
}
