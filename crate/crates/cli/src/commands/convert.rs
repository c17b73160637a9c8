use std::path::PathBuf;

use clap::Args;
use cyclevc::conversion::VoiceConverter;
use cyclevc::features::{read_feature_file, read_wav, write_feature_file, write_wav};
use cyclevc::model::Generator;

use crate::config::RunConfig;
use crate::corpus::{create_dir, list_files, stem, FEATURE_EXT};
use crate::error::{CliError, CliResult};

/// Convert utterances with an exported model.
#[derive(Args, Debug)]
pub struct ConvertArgs {
    /// Exported converter (x_to_y.cvc or y_to_x.cvc from a training run)
    #[arg(long)]
    pub model: PathBuf,

    /// Directory of .wav files, or .feat files with --features-only
    #[arg(long)]
    pub input: PathBuf,

    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Convert cached features without a vocoder
    #[arg(long)]
    pub features_only: bool,
}

pub fn run(args: &ConvertArgs, cfg: &RunConfig) -> CliResult<()> {
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .ok_or_else(|| CliError::Usage("--out is required (flag or config key)".into()))?;
    let vc: VoiceConverter<Generator> = VoiceConverter::load(&args.model)?;
    let ext = if args.features_only { FEATURE_EXT } else { "wav" };
    let inputs = list_files(&args.input, ext)?;
    if inputs.is_empty() {
        return Err(CliError::path(&args.input, format!("contains no .{ext} files")));
    }
    create_dir(&out)?;
    if args.features_only {
        for p in &inputs {
            let f = vc.convert_features(&read_feature_file(p)?)?;
            write_feature_file(&out.join(format!("{}.{FEATURE_EXT}", stem(p))), &f)?;
        }
    } else {
        let vocoder = cfg.backend.vocoder()?;
        for p in &inputs {
            let w = vc.convert_utterance(&read_wav(p)?, vocoder.as_ref())?;
            write_wav(&out.join(format!("{}.wav", stem(p))), &w)?;
        }
    }
    cfg.write_into(&out)?;
    log::info!("converted {} files into {}", inputs.len(), out.display());
    Ok(())
}
