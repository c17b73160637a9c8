use std::path::{Path, PathBuf};

use cyclevc::features::{AnalyzerConfig, ExternalVocoder, StubVocoder, Vocoder};
use cyclevc::metrics::MsConfig;
use cyclevc::training::TrainingConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CACHE_ENV: &str = "CYCLEVC_CACHE_DIR";
pub const EFFECTIVE_CONFIG: &str = "config.toml";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Built-in deterministic sinusoidal analyzer.
    #[default]
    Stub,
    /// External analysis/synthesis program named by CYCLEVC_VOCODER_CMD.
    #[value(alias = "real")]
    #[serde(alias = "real")]
    External,
}

impl Backend {
    pub fn vocoder(self) -> CliResult<Box<dyn Vocoder>> {
        Ok(match self {
            Backend::Stub => Box::new(StubVocoder::default()),
            Backend::External => Box::new(ExternalVocoder::from_env()?),
        })
    }
}

/// Everything a command reads, loaded from TOML and overridden by flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub backend: Backend,
    pub cache_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub analyzer: AnalyzerConfig,
    pub training: TrainingConfig,
    pub metrics: MsConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::path(path, e.to_string()))?;
        toml::from_str(&text).map_err(|e| CliError::ConfigFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    /// `--cache`, then the config file, then `$CYCLEVC_CACHE_DIR`, then `./cache`.
    pub fn cache_root(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.cache_dir.clone())
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("cache"))
    }

    pub fn validate(&self) -> CliResult<()> {
        self.analyzer.validate()?;
        self.training.validate()?;
        self.metrics.validate()?;
        if self.analyzer.mcep_order != self.training.model.generator.feature_dim {
            return Err(CliError::Usage(format!(
                "analyzer.mcep_order {} differs from generator feature_dim {}",
                self.analyzer.mcep_order, self.training.model.generator.feature_dim
            )));
        }
        Ok(())
    }

    /// Writes the effective configuration as `config.toml` into `dir`.
    pub fn write_into(&self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::path(dir, e.to_string()))?;
        let text = toml::to_string(self).map_err(|e| CliError::Internal(format!("serializing config: {e}")))?;
        let path = dir.join(EFFECTIVE_CONFIG);
        std::fs::write(&path, text).map_err(|e| CliError::path(&path, e.to_string()))
    }
}
