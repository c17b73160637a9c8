//! Alternating adversarial training of both mappings and both critics.

pub mod checkpoint;
pub mod config;
pub mod sampling;
pub mod schedule;
pub mod step;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::Serialize;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::TrainingConfig;
pub use sampling::{sample_batch, sample_crop};
pub use schedule::{lambda_id_at, lr_at};
pub use step::{discriminator_objective, generator_objective, train_step, GeneratorObjective, TrainerState};

use crate::error::{Error, Result};
use crate::losses::LossBreakdown;

/// Hooks called by [`train`]. Both default to doing nothing.
pub trait TrainingObserver {
    /// After each completed step. `iteration` counts completed steps and
    /// `lrs` holds the `(lr_g, lr_d)` the step used.
    fn on_step(&mut self, _iteration: u64, _losses: &LossBreakdown, _lrs: (f64, f64)) -> Result<()> {
        Ok(())
    }

    /// When a checkpoint is due.
    fn on_checkpoint(&mut self, _state: &TrainerState, _cfg: &TrainingConfig) -> Result<()> {
        Ok(())
    }
}

/// Observer that ignores everything.
pub struct NoObserver;

impl TrainingObserver for NoObserver {}

/// Runs from `state.iteration` up to `cfg.total_iters`. Corpora hold
/// normalized `T × D` matrices. Checkpoints fire every `checkpoint_every`
/// completed steps and after the final step.
pub fn train(
    cfg: &TrainingConfig,
    corpus_x: &[Array2<f64>],
    corpus_y: &[Array2<f64>],
    mut state: TrainerState,
    observer: &mut dyn TrainingObserver,
) -> Result<TrainerState> {
    cfg.validate()?;
    let dim = cfg.model.generator.feature_dim;
    for (side, corpus) in [("source", corpus_x), ("target", corpus_y)] {
        if corpus.is_empty() {
            return Err(Error::InvalidInput(format!("{side} corpus is empty")));
        }
        if let Some(u) = corpus.iter().find(|u| u.ncols() != dim) {
            return Err(Error::Shape(format!(
                "{side} corpus has {} feature dims, model expects {dim}",
                u.ncols()
            )));
        }
    }
    while state.iteration < cfg.total_iters {
        let x = sample_batch(corpus_x, cfg.crop_frames, cfg.batch_size, &mut state.rng)?;
        let y = sample_batch(corpus_y, cfg.crop_frames, cfg.batch_size, &mut state.rng)?;
        let lrs = lr_at(state.iteration, cfg);
        let losses = train_step(&mut state, &x, &y, cfg)?;
        let it = state.iteration;
        let at = |e: Error| Error::AtIteration {
            iteration: it,
            source: Box::new(e),
        };
        observer.on_step(it, &losses, lrs).map_err(at)?;
        if it % cfg.checkpoint_every == 0 || it == cfg.total_iters {
            observer.on_checkpoint(&state, cfg).map_err(at)?;
        }
    }
    Ok(state)
}

#[derive(Serialize)]
struct ProgressRecord<'a> {
    iteration: u64,
    #[serde(flatten)]
    losses: &'a LossBreakdown,
    lr_g: f64,
    lr_d: f64,
}

/// Writes one JSON line per step and saves checkpoints as
/// `<dir>/checkpoint_<iteration>.cvc`, also copied to `<dir>/latest.cvc`.
pub struct ProgressLog {
    dir: PathBuf,
    log: BufWriter<File>,
    log_every: u64,
}

impl ProgressLog {
    /// Appends to `<dir>/progress.jsonl`.
    pub fn create(dir: &Path, log_every: u64) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("progress.jsonl");
        let f = File::options()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            log: BufWriter::new(f),
            log_every: log_every.max(1),
        })
    }

    pub fn checkpoint_path(dir: &Path, iteration: u64) -> PathBuf {
        dir.join(format!("checkpoint_{iteration:08}.cvc"))
    }
}

impl TrainingObserver for ProgressLog {
    fn on_step(&mut self, iteration: u64, losses: &LossBreakdown, (lr_g, lr_d): (f64, f64)) -> Result<()> {
        if iteration % self.log_every == 0 {
            let line = serde_json::to_string(&ProgressRecord {
                iteration,
                losses,
                lr_g,
                lr_d,
            })?;
            let path = self.dir.join("progress.jsonl");
            writeln!(self.log, "{line}").map_err(|e| Error::io(&path, e))?;
            log::info!(
                "iter {iteration}: total_g {:.4} cyc {:.4} id {:.4} d_x {:.4} d_y {:.4}",
                losses.total_g,
                losses.cyc,
                losses.id,
                losses.adv_d_x,
                losses.adv_d_y
            );
        }
        Ok(())
    }

    fn on_checkpoint(&mut self, state: &TrainerState, cfg: &TrainingConfig) -> Result<()> {
        let path = Self::checkpoint_path(&self.dir, state.iteration);
        save_checkpoint(&path, state, cfg)?;
        let latest = self.dir.join("latest.cvc");
        std::fs::copy(&path, &latest).map_err(|e| Error::io(&latest, e))?;
        self.log.flush().map_err(|e| Error::io(&self.dir, e))?;
        log::info!("saved {}", path.display());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn corpus(n: usize, t: usize, phase: f64) -> Vec<Array2<f64>> {
        (0..n)
            .map(|k| Array2::from_shape_fn((t + k, 24), |(i, d)| ((i + d) as f64 * 0.3 + phase).sin()))
            .collect()
    }

    fn cfg(total: u64, every: u64) -> TrainingConfig {
        TrainingConfig {
            crop_frames: 16,
            total_iters: total,
            checkpoint_every: every,
            model: ModelConfig::tiny(),
            ..Default::default()
        }
    }

    #[derive(Default)]
    struct Record {
        steps: Vec<u64>,
        ckpts: Vec<u64>,
    }

    impl TrainingObserver for Record {
        fn on_step(&mut self, it: u64, l: &LossBreakdown, _: (f64, f64)) -> Result<()> {
            assert!(l.is_finite());
            self.steps.push(it);
            Ok(())
        }
        fn on_checkpoint(&mut self, s: &TrainerState, _: &TrainingConfig) -> Result<()> {
            self.ckpts.push(s.iteration);
            Ok(())
        }
    }

    #[test]
    fn checkpoint_schedule_includes_final_step() {
        let c = cfg(5, 2);
        let mut rec = Record::default();
        let st = train(&c, &corpus(2, 20, 0.0), &corpus(2, 18, 1.0), TrainerState::new(&c).unwrap(), &mut rec).unwrap();
        assert_eq!(st.iteration, 5);
        assert_eq!(rec.steps, vec![1, 2, 3, 4, 5]);
        assert_eq!(rec.ckpts, vec![2, 4, 5]);
    }

    #[test]
    fn zero_total_iters_returns_initial_state() {
        let c = cfg(0, 10);
        let init = TrainerState::new(&c).unwrap();
        let mut rec = Record::default();
        let st = train(&c, &corpus(1, 20, 0.0), &corpus(1, 20, 1.0), init.clone(), &mut rec).unwrap();
        assert_eq!(st, init);
        assert!(rec.steps.is_empty() && rec.ckpts.is_empty());
    }

    #[test]
    fn schedule_of_ten_every_twenty_five() {
        let c = cfg(25, 10);
        let mut rec = Record::default();
        train(&c, &corpus(1, 20, 0.0), &corpus(1, 20, 1.0), TrainerState::new(&c).unwrap(), &mut rec).unwrap();
        assert_eq!(rec.ckpts, vec![10, 20, 25]);
    }

    #[test]
    fn wrong_feature_dim_rejected() {
        let c = cfg(1, 1);
        let bad = vec![Array2::zeros((20, 10))];
        let r = train(&c, &bad, &corpus(1, 20, 0.0), TrainerState::new(&c).unwrap(), &mut NoObserver);
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    #[test]
    fn progress_log_writes_lines_and_checkpoints() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(3, 2);
        let mut log = ProgressLog::create(dir.path(), 1).unwrap();
        train(&c, &corpus(2, 20, 0.0), &corpus(2, 20, 1.0), TrainerState::new(&c).unwrap(), &mut log).unwrap();
        drop(log);
        let text = std::fs::read_to_string(dir.path().join("progress.jsonl")).unwrap();
        assert_eq!(text.lines().count(), 3);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["iteration"], 1);
        assert!(first["total_g"].is_number());
        assert_eq!(first["lr_g"], 2e-4);
        assert!(ProgressLog::checkpoint_path(dir.path(), 2).exists());
        assert!(ProgressLog::checkpoint_path(dir.path(), 3).exists());
        let latest = load_checkpoint(&dir.path().join("latest.cvc")).unwrap();
        assert_eq!(latest.state.iteration, 3);
    }
}
