//! Standalone generator files for inference. Weights are stored as f32.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::GeneratorConfig;
use super::generator::Generator;
use crate::container::{params_to_tensors, tensors_to_params, Container, DType};
use crate::error::{Error, Result};

pub const GENERATOR_KIND: &str = "cyclevc-generator";
pub const GENERATOR_FORMAT: u32 = 1;

#[derive(Serialize, Deserialize)]
struct GeneratorMeta {
    kind: String,
    format_version: u32,
    config: GeneratorConfig,
    #[serde(default)]
    extra: serde_json::Value,
}

/// Saves `g` with its topology and caller-defined `extra` metadata.
pub fn save_generator(path: &Path, g: &Generator, cfg: &GeneratorConfig, extra: serde_json::Value) -> Result<()> {
    let meta = GeneratorMeta {
        kind: GENERATOR_KIND.into(),
        format_version: GENERATOR_FORMAT,
        config: cfg.clone(),
        extra,
    };
    Container {
        dtype: DType::F32,
        metadata: serde_json::to_string(&meta)?,
        tensors: params_to_tensors(g, "generator"),
    }
    .save(path)
}

/// Loads a generator and returns it with its config and the `extra` metadata.
pub fn load_generator(path: &Path) -> Result<(Generator, GeneratorConfig, serde_json::Value)> {
    let c = Container::load(path)?;
    let meta: GeneratorMeta =
        serde_json::from_str(&c.metadata).map_err(|e| Error::format(path, format!("bad generator metadata: {e}")))?;
    if meta.kind != GENERATOR_KIND || meta.format_version != GENERATOR_FORMAT {
        return Err(Error::format(
            path,
            format!("expected {GENERATOR_KIND} v{GENERATOR_FORMAT}, found {} v{}", meta.kind, meta.format_version),
        ));
    }
    let mut g = Generator::new(&meta.config)?;
    tensors_to_params(&c, &mut g, "generator").map_err(|r| Error::format(path, r))?;
    Ok((g, meta.config, meta.extra))
}
