use std::path::{Path, PathBuf};

use clap::Args;
use cyclevc::features::McepSequence;
use cyclevc::metrics::build_report;

use crate::config::RunConfig;
use crate::corpus::{load_features, stem};
use crate::error::{CliError, CliResult};

/// Compare GV and modulation spectra of source, target and converted features.
#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Source speaker .feat directory
    #[arg(long)]
    pub source: PathBuf,

    /// Target speaker .feat directory
    #[arg(long)]
    pub target: PathBuf,

    /// Converted .feat directory
    #[arg(long)]
    pub converted: PathBuf,

    /// Report directory
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Modulation spectrum DFT length
    #[arg(long)]
    pub fft_len: Option<usize>,

    /// Identifier of the evaluated model, recorded in the report
    #[arg(long)]
    pub model_id: Option<String>,
}

fn mceps(dir: &Path) -> CliResult<Vec<McepSequence>> {
    Ok(load_features(dir)?.into_iter().map(|(_, f)| f.mcep).collect())
}

pub fn run(args: &EvaluateArgs, cfg: &mut RunConfig) -> CliResult<()> {
    if let Some(n) = args.fft_len {
        cfg.metrics.fft_len = n;
    }
    cfg.metrics.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .ok_or_else(|| CliError::Usage("--out is required (flag or config key)".into()))?;
    let (s, t, c) = (mceps(&args.source)?, mceps(&args.target)?, mceps(&args.converted)?);
    let report = build_report(
        (&stem(&args.source), &s),
        (&stem(&args.target), &t),
        (&stem(&args.converted), &c),
        &cfg.metrics,
        args.model_id.clone(),
    )?;
    report.write(&out)?;
    cfg.write_into(&out)?;
    println!("ms_rmse(target, converted) = {:.4} dB", report.ms_rmse_converted);
    println!("ms_rmse(target, source)    = {:.4} dB", report.ms_rmse_source);
    Ok(())
}
