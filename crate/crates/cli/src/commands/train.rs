use std::path::{Path, PathBuf};

use clap::Args;
use cyclevc::conversion::VoiceConverter;
use cyclevc::features::{normalize, SpeakerStats};
use cyclevc::training::{load_checkpoint, train, ProgressLog, TrainerState};
use ndarray::Array2;

use crate::config::RunConfig;
use crate::corpus::{load_features, load_stats, resolve_speaker_dir};
use crate::error::{CliError, CliResult};

pub const X_TO_Y: &str = "x_to_y.cvc";
pub const Y_TO_X: &str = "y_to_x.cvc";

/// Train both conversion directions between two featurized speakers.
#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Source speaker feature directory (or name under the cache root)
    #[arg(long)]
    pub source: Option<PathBuf>,

    /// Target speaker feature directory (or name under the cache root)
    #[arg(long)]
    pub target: Option<PathBuf>,

    /// Cache root for resolving speaker names
    #[arg(long, env = crate::config::CACHE_ENV)]
    pub cache: Option<PathBuf>,

    /// Run directory for checkpoints, progress log and exported models
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Stop after this many iterations in total
    #[arg(long)]
    pub total_iters: Option<u64>,

    /// Continue from a checkpoint file
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

fn normalized(dir: &Path, stats: &SpeakerStats) -> CliResult<Vec<Array2<f64>>> {
    load_features(dir)?
        .into_iter()
        .map(|(_, f)| Ok(normalize(&f.mcep, &stats.mcep)?.frames))
        .collect()
}

fn required<'a>(flag: &'a Option<PathBuf>, file: &'a Option<PathBuf>, name: &str) -> CliResult<&'a Path> {
    flag.as_deref()
        .or(file.as_deref())
        .ok_or_else(|| CliError::Usage(format!("--{name} is required (flag or config key)")))
}

pub fn run(args: &TrainArgs, cfg: &mut RunConfig) -> CliResult<()> {
    if let Some(n) = args.total_iters {
        cfg.training.total_iters = n;
    }
    let cache = cfg.cache_root(args.cache.as_deref());
    let src_dir = resolve_speaker_dir(required(&args.source, &cfg.source, "source")?, &cache)?;
    let tgt_dir = resolve_speaker_dir(required(&args.target, &cfg.target, "target")?, &cache)?;
    let out = required(&args.out, &cfg.out_dir, "out")?.to_path_buf();
    cfg.validate()?;

    let src_stats = load_stats(&src_dir)?;
    let tgt_stats = load_stats(&tgt_dir)?;
    let corpus_x = normalized(&src_dir, &src_stats)?;
    let corpus_y = normalized(&tgt_dir, &tgt_stats)?;

    let tc = &cfg.training;
    let state = match &args.resume {
        Some(path) => {
            let ckpt = load_checkpoint(path)?;
            if ckpt.config.model != tc.model {
                return Err(CliError::path(path, "checkpoint architecture differs from the configured model"));
            }
            if ckpt.config_hash != tc.hash() {
                log::warn!(
                    "checkpoint config hash {} differs from current config hash {}; continuing with current config",
                    ckpt.config_hash,
                    tc.hash()
                );
            }
            log::info!("resuming from iteration {}", ckpt.state.iteration);
            ckpt.state
        }
        None => TrainerState::new(tc)?,
    };
    cfg.write_into(&out)?;
    let mut progress = ProgressLog::create(&out, 1)?;
    let state = train(tc, &corpus_x, &corpus_y, state, &mut progress)?;

    let g = &tc.model.generator;
    let fwd = VoiceConverter::new(state.models.g_xy, src_stats.clone(), tgt_stats.clone(), cfg.analyzer.clone())?;
    fwd.save(&out.join(X_TO_Y), g)?;
    let bwd = VoiceConverter::new(state.models.g_yx, tgt_stats, src_stats, cfg.analyzer.clone())?;
    bwd.save(&out.join(Y_TO_X), g)?;
    log::info!("trained to iteration {}; models in {}", state.iteration, out.display());
    Ok(())
}
