//! Analysis/synthesis backends.
//!
//! [`StubVocoder`] is a self-contained sinusoid-bank analyser used by the
//! test-suite and the `stub` CLI backend. [`ExternalVocoder`] delegates to an
//! external program (for example a WORLD wrapper) through the feature cache
//! and WAV formats.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;

use ndarray::Array2;

use super::audio::{read_wav, write_wav};
use super::cache::{read_feature_file, write_feature_file};
use super::types::{AnalyzerConfig, ApSequence, F0Track, FeatureSet, McepSequence, Waveform};
use crate::error::{Error, Result};

pub trait Vocoder {
    fn name(&self) -> &str;

    /// Whether `analyze` / `synthesize` may be called concurrently on one instance.
    fn is_reentrant(&self) -> bool;

    fn analyze(&self, w: &Waveform, cfg: &AnalyzerConfig) -> Result<FeatureSet>;

    fn synthesize(&self, f: &FeatureSet, cfg: &AnalyzerConfig) -> Result<Waveform>;
}

/// Frames produced for `n` samples: one per hop plus the frame at the end.
pub fn frame_count(n: usize, hop: usize) -> usize {
    n / hop + 1
}

/// Deterministic in-memory backend.
///
/// Each frame is described by the log-amplitudes of `mcep_order` fixed
/// sinusoids spread over `(0, sr/2)`, an autocorrelation pitch estimate and a
/// single aperiodicity band. Synthesis sums the sinusoid bank (plus a voiced
/// partial at F0) with continuous phase.
#[derive(Clone, Debug)]
pub struct StubVocoder {
    pub window: usize,
    pub f0_floor: f64,
    pub f0_ceil: f64,
    pub voicing_threshold: f64,
    pub silence_rms: f64,
}

impl Default for StubVocoder {
    fn default() -> Self {
        Self {
            window: 512,
            f0_floor: 60.0,
            f0_ceil: 400.0,
            voicing_threshold: 0.7,
            silence_rms: 1e-4,
        }
    }
}

const LOG_AMP_FLOOR: f64 = 1e-6;

impl StubVocoder {
    fn bank_freqs(cfg: &AnalyzerConfig) -> Vec<f64> {
        let d = cfg.mcep_order;
        let nyq = cfg.sample_rate as f64 / 2.0;
        (0..d).map(|i| (i as f64 + 0.5) * nyq / d as f64).collect()
    }

    fn frame(&self, x: &[f64], center: usize) -> Vec<f64> {
        let half = self.window / 2;
        (0..self.window)
            .map(|i| {
                let idx = center as isize + i as isize - half as isize;
                if idx >= 0 && (idx as usize) < x.len() {
                    x[idx as usize]
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn pitch(&self, frame: &[f64], sr: f64) -> (bool, f64, f64) {
        let n = frame.len();
        let energy: f64 = frame.iter().map(|v| v * v).sum();
        if (energy / n as f64).sqrt() < self.silence_rms {
            return (false, 0.0, 0.0);
        }
        let min_lag = (sr / self.f0_ceil).floor().max(1.0) as usize;
        let max_lag = ((sr / self.f0_floor).ceil() as usize).min(n / 2);
        let mut best = (0usize, 0.0f64);
        for lag in min_lag..=max_lag {
            let (mut num, mut e0, mut e1) = (0.0, 0.0, 0.0);
            for i in 0..n - lag {
                num += frame[i] * frame[i + lag];
                e0 += frame[i] * frame[i];
                e1 += frame[i + lag] * frame[i + lag];
            }
            let r = if e0 > 0.0 && e1 > 0.0 { num / (e0 * e1).sqrt() } else { 0.0 };
            if r > best.1 {
                best = (lag, r);
            }
        }
        let voiced = best.1 >= self.voicing_threshold && best.0 > 0;
        (voiced, if voiced { sr / best.0 as f64 } else { 0.0 }, best.1.max(0.0))
    }
}

impl Vocoder for StubVocoder {
    fn name(&self) -> &str {
        "stub"
    }

    fn is_reentrant(&self) -> bool {
        true
    }

    fn analyze(&self, w: &Waveform, cfg: &AnalyzerConfig) -> Result<FeatureSet> {
        cfg.validate()?;
        w.validate()?;
        if w.sample_rate != cfg.sample_rate {
            return Err(Error::Analysis(format!(
                "waveform is {} Hz but the analyzer expects {} Hz",
                w.sample_rate, cfg.sample_rate
            )));
        }
        let hop = cfg.hop();
        if w.samples.len() < hop {
            return Err(Error::Analysis(format!(
                "waveform of {} samples is shorter than one frame ({hop})",
                w.samples.len()
            )));
        }
        let sr = cfg.sample_rate as f64;
        let t = frame_count(w.samples.len(), hop);
        let freqs = Self::bank_freqs(cfg);
        let win: Vec<f64> = (0..self.window)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / self.window as f64).cos())
            .collect();
        let win_sum: f64 = win.iter().sum();
        let mut mcep = Array2::<f64>::zeros((t, cfg.mcep_order));
        let mut f0 = vec![0.0; t];
        let mut voiced = vec![false; t];
        let mut ap = Array2::<f64>::zeros((t, 1));
        for ti in 0..t {
            let frame = self.frame(&w.samples, ti * hop);
            for (d, &f) in freqs.iter().enumerate() {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, (&x, &wv)) in frame.iter().zip(&win).enumerate() {
                    let ph = 2.0 * PI * f * i as f64 / sr;
                    re += x * wv * ph.cos();
                    im -= x * wv * ph.sin();
                }
                // Amplitude of a sinusoid under the window is |X| * 2 / sum(w).
                let amp = 2.0 * (re * re + im * im).sqrt() / win_sum;
                mcep[[ti, d]] = amp.max(LOG_AMP_FLOOR).ln();
            }
            let (v, pitch, periodicity) = self.pitch(&frame, sr);
            voiced[ti] = v;
            f0[ti] = pitch;
            ap[[ti, 0]] = (1.0 - periodicity).clamp(0.0, 1.0);
        }
        Ok(FeatureSet {
            mcep: McepSequence::new(mcep, cfg.frame_period_ms),
            f0: F0Track { values: f0, voiced },
            ap: ApSequence { frames: ap },
        })
    }

    fn synthesize(&self, f: &FeatureSet, cfg: &AnalyzerConfig) -> Result<Waveform> {
        cfg.validate()?;
        f.validate()?;
        if f.mcep.dim() != cfg.mcep_order {
            return Err(Error::InvalidInput(format!(
                "features have {} MCEP dimensions, analyzer expects {}",
                f.mcep.dim(),
                cfg.mcep_order
            )));
        }
        let hop = cfg.hop();
        let sr = cfg.sample_rate as f64;
        let freqs = Self::bank_freqs(cfg);
        let mut phases = vec![0.0f64; freqs.len()];
        let mut f0_phase = 0.0f64;
        let t = f.frames();
        let mut out = Vec::with_capacity(t * hop);
        for ti in 0..t {
            let amps: Vec<f64> = f.mcep.frames.row(ti).iter().map(|v| v.exp()).collect();
            let periodic = if f.f0.voiced[ti] {
                (1.0 - f.ap.frames[[ti, 0]]).clamp(0.0, 1.0) * amps.iter().cloned().fold(0.0, f64::max)
            } else {
                0.0
            };
            for _ in 0..hop {
                let mut s = 0.0;
                for ((ph, &fr), &a) in phases.iter_mut().zip(&freqs).zip(&amps) {
                    if a > LOG_AMP_FLOOR {
                        s += a * ph.sin();
                    }
                    *ph = (*ph + 2.0 * PI * fr / sr) % (2.0 * PI);
                }
                if periodic > 0.0 {
                    s += periodic * f0_phase.sin();
                    f0_phase = (f0_phase + 2.0 * PI * f.f0.values[ti] / sr) % (2.0 * PI);
                }
                out.push(s);
            }
        }
        Waveform::new(out, cfg.sample_rate)
    }
}

/// Backend that shells out to an external analysis/synthesis program.
///
/// The program is invoked as
/// `PROGRAM analyze IN.wav OUT.feat SAMPLE_RATE FRAME_PERIOD_MS MCEP_ORDER` and
/// `PROGRAM synthesize IN.feat OUT.wav SAMPLE_RATE FRAME_PERIOD_MS MCEP_ORDER`,
/// exchanging 16-bit mono WAV files and feature cache records.
#[derive(Clone, Debug)]
pub struct ExternalVocoder {
    program: PathBuf,
}

/// Environment variable naming the external vocoder program.
pub const VOCODER_CMD_ENV: &str = "CYCLEVC_VOCODER_CMD";

impl ExternalVocoder {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        Self {
            program: program.into(),
        }
    }

    /// Reads the program path from [`VOCODER_CMD_ENV`].
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(VOCODER_CMD_ENV) {
            Some(p) if !p.is_empty() => Ok(Self::new(p)),
            _ => Err(Error::Backend(format!(
                "no external vocoder configured; set {VOCODER_CMD_ENV} or use the stub backend"
            ))),
        }
    }

    fn run(&self, verb: &str, input: &Path, output: &Path, cfg: &AnalyzerConfig) -> Result<()> {
        let status = Command::new(&self.program)
            .arg(verb)
            .arg(input)
            .arg(output)
            .arg(cfg.sample_rate.to_string())
            .arg(cfg.frame_period_ms.to_string())
            .arg(cfg.mcep_order.to_string())
            .status()
            .map_err(|e| Error::Backend(format!("cannot run {}: {e}", self.program.display())))?;
        if !status.success() {
            return Err(Error::Backend(format!(
                "{} {verb} exited with {status}",
                self.program.display()
            )));
        }
        Ok(())
    }
}

impl Vocoder for ExternalVocoder {
    fn name(&self) -> &str {
        "external"
    }

    fn is_reentrant(&self) -> bool {
        true
    }

    fn analyze(&self, w: &Waveform, cfg: &AnalyzerConfig) -> Result<FeatureSet> {
        cfg.validate()?;
        let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let wav = dir.path().join("in.wav");
        let feat = dir.path().join("out.feat");
        write_wav(&wav, w)?;
        self.run("analyze", &wav, &feat, cfg)?;
        let f = read_feature_file(&feat)?;
        f.validate()?;
        Ok(f)
    }

    fn synthesize(&self, f: &FeatureSet, cfg: &AnalyzerConfig) -> Result<Waveform> {
        cfg.validate()?;
        f.validate()?;
        let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let feat = dir.path().join("in.feat");
        let wav = dir.path().join("out.wav");
        write_feature_file(&feat, f)?;
        self.run("synthesize", &feat, &wav, cfg)?;
        read_wav(&wav)
    }
}
