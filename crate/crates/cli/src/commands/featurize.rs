use std::path::PathBuf;

use clap::Args;
use cyclevc::features::{
    compute_f0_stats, compute_mcep_stats, read_wav, write_feature_file, FeatureSet, SpeakerStats,
};

use crate::config::RunConfig;
use crate::corpus::{create_dir, list_files, stem, write_stats, FEATURE_EXT};
use crate::error::{CliError, CliResult};

/// Analyze a directory of mono WAV files into a speaker feature cache.
#[derive(Args, Debug)]
pub struct FeaturizeArgs {
    /// Directory of input .wav files
    #[arg(long)]
    pub input: PathBuf,

    /// Speaker name; defaults to the input directory name
    #[arg(long)]
    pub speaker: Option<String>,

    /// Cache root; features go to <cache>/<speaker>
    #[arg(long, env = crate::config::CACHE_ENV)]
    pub cache: Option<PathBuf>,

    /// Output directory, overriding <cache>/<speaker>
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &FeaturizeArgs, cfg: &RunConfig) -> CliResult<()> {
    cfg.analyzer.validate()?;
    let vocoder = cfg.backend.vocoder()?;
    let speaker = args.speaker.clone().unwrap_or_else(|| stem(&args.input));
    let out = match &args.out {
        Some(o) => o.clone(),
        None => cfg.cache_root(args.cache.as_deref()).join(&speaker),
    };
    let inputs = list_files(&args.input, "wav")?;
    if inputs.is_empty() {
        return Err(CliError::path(&args.input, "contains no .wav files"));
    }
    create_dir(&out)?;

    let mut done: Vec<FeatureSet> = Vec::new();
    for path in &inputs {
        let analyzed = read_wav(path).and_then(|w| {
            if w.sample_rate != cfg.analyzer.sample_rate {
                return Err(cyclevc::Error::InvalidInput(format!(
                    "sample rate {} differs from configured {}",
                    w.sample_rate, cfg.analyzer.sample_rate
                )));
            }
            vocoder.analyze(&w, &cfg.analyzer)
        });
        match analyzed {
            Ok(f) => {
                write_feature_file(&out.join(format!("{}.{FEATURE_EXT}", stem(path))), &f)?;
                done.push(f);
            }
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }
    if done.is_empty() {
        return Err(CliError::path(&args.input, "no file could be analyzed"));
    }
    let mceps: Vec<_> = done.iter().map(|f| f.mcep.clone()).collect();
    let f0s: Vec<_> = done.iter().map(|f| f.f0.clone()).collect();
    let stats = SpeakerStats {
        mcep: compute_mcep_stats(&mceps)?,
        f0: compute_f0_stats(&f0s)?,
    };
    write_stats(&out, &stats)?;
    cfg.write_into(&out)?;
    log::info!(
        "featurized {} of {} files for speaker {speaker} into {}",
        done.len(),
        inputs.len(),
        out.display()
    );
    Ok(())
}
