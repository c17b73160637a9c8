//! Full training snapshots: weights, optimizer moments, RNG position and the
//! effective configuration. Values are stored as f64 so a resumed run is
//! bit-identical to an uninterrupted one.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainingConfig;
use super::step::TrainerState;
use crate::container::{params_to_tensors, tensors_to_params, Container, DType, Tensor};
use crate::error::{Error, Result};
use crate::model::CycleModels;
use crate::nn::params::Params;
use crate::optim::Adam;

pub const CHECKPOINT_KIND: &str = "cyclevc-checkpoint";
pub const CHECKPOINT_FORMAT: u32 = 1;

const NETS: [&str; 4] = ["g_xy", "g_yx", "d_x", "d_y"];

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RngState {
    seed: String,
    stream: u64,
    /// u128 as a decimal string; JSON numbers cannot hold it.
    word_pos: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CheckpointMeta {
    kind: String,
    format_version: u32,
    iteration: u64,
    config_hash: String,
    config: TrainingConfig,
    rng: RngState,
    adam_steps: [u64; 4],
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Option<[u8; 32]> {
    if s.len() != 64 {
        return None;
    }
    let mut out = [0u8; 32];
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(s.get(2 * i..2 * i + 2)?, 16).ok()?;
    }
    Some(out)
}

fn optimizers(state: &TrainerState) -> [&Adam; 4] {
    [&state.opt_g_xy, &state.opt_g_yx, &state.opt_d_x, &state.opt_d_y]
}

fn moment_tensors<P: Params>(net: &P, opt: &Adam, prefix: &str) -> Vec<Tensor> {
    let mut out = Vec::new();
    let mut idx = 0;
    for (kind, bufs) in [("m", &opt.m), ("v", &opt.v)] {
        idx = 0;
        net.visit(&format!("adam.{prefix}.{kind}"), &mut |name, shape, _| {
            out.push(Tensor {
                name: name.to_string(),
                shape: shape.to_vec(),
                data: bufs[idx].clone(),
            });
            idx += 1;
        });
    }
    debug_assert_eq!(idx, opt.m.len());
    out
}

fn load_moments<P: Params + Clone>(c: &Container, net: &P, opt: &mut Adam, prefix: &str) -> std::result::Result<(), String> {
    for kind in ["m", "v"] {
        let mut buf = net.clone();
        tensors_to_params(c, &mut buf, &format!("adam.{prefix}.{kind}"))?;
        let mut bufs = Vec::new();
        buf.visit("", &mut |_, _, v| bufs.push(v.to_vec()));
        match kind {
            "m" => opt.m = bufs,
            _ => opt.v = bufs,
        }
    }
    Ok(())
}

/// Writes `state` and `cfg` to `path` atomically.
pub fn save_checkpoint(path: &Path, state: &TrainerState, cfg: &TrainingConfig) -> Result<()> {
    let opts = optimizers(state);
    let meta = CheckpointMeta {
        kind: CHECKPOINT_KIND.into(),
        format_version: CHECKPOINT_FORMAT,
        iteration: state.iteration,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        rng: RngState {
            seed: hex(&state.rng.get_seed()),
            stream: state.rng.get_stream(),
            word_pos: state.rng.get_word_pos().to_string(),
        },
        adam_steps: opts.map(|o| o.step),
    };
    let m = &state.models;
    let mut tensors = params_to_tensors(m, "params");
    tensors.extend(moment_tensors(&m.g_xy, opts[0], NETS[0]));
    tensors.extend(moment_tensors(&m.g_yx, opts[1], NETS[1]));
    tensors.extend(moment_tensors(&m.d_x, opts[2], NETS[2]));
    tensors.extend(moment_tensors(&m.d_y, opts[3], NETS[3]));
    Container {
        dtype: DType::F64,
        metadata: serde_json::to_string(&meta)?,
        tensors,
    }
    .save(path)
}

/// A restored run: the state and the configuration it was saved with.
pub struct Checkpoint {
    pub state: TrainerState,
    pub config: TrainingConfig,
    pub config_hash: String,
}

/// Reads a checkpoint written by [`save_checkpoint`]. Every tensor's name and
/// shape is validated against the architecture in the stored configuration.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let c = Container::load(path)?;
    let fmt = |r: String| Error::format(path, r);
    let meta: CheckpointMeta =
        serde_json::from_str(&c.metadata).map_err(|e| fmt(format!("bad checkpoint metadata: {e}")))?;
    if meta.kind != CHECKPOINT_KIND {
        return Err(fmt(format!("not a checkpoint (kind {:?})", meta.kind)));
    }
    if meta.format_version != CHECKPOINT_FORMAT {
        return Err(fmt(format!("unsupported checkpoint version {}", meta.format_version)));
    }
    if c.dtype != DType::F64 {
        return Err(fmt("checkpoint tensors must be f64".into()));
    }
    let cfg = meta.config;
    let mut state = TrainerState::new(&cfg)?;
    state.iteration = meta.iteration;
    let mut models: CycleModels = state.models.clone();
    tensors_to_params(&c, &mut models, "params").map_err(fmt)?;
    load_moments(&c, &models.g_xy, &mut state.opt_g_xy, NETS[0]).map_err(fmt)?;
    load_moments(&c, &models.g_yx, &mut state.opt_g_yx, NETS[1]).map_err(fmt)?;
    load_moments(&c, &models.d_x, &mut state.opt_d_x, NETS[2]).map_err(fmt)?;
    load_moments(&c, &models.d_y, &mut state.opt_d_y, NETS[3]).map_err(fmt)?;
    state.opt_g_xy.step = meta.adam_steps[0];
    state.opt_g_yx.step = meta.adam_steps[1];
    state.opt_d_x.step = meta.adam_steps[2];
    state.opt_d_y.step = meta.adam_steps[3];
    state.models = models;

    let seed = unhex(&meta.rng.seed).ok_or_else(|| fmt("bad RNG seed".into()))?;
    let word_pos: u128 = meta.rng.word_pos.parse().map_err(|_| fmt("bad RNG position".into()))?;
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(meta.rng.stream);
    rng.set_word_pos(word_pos);
    state.rng = rng;

    if cfg.hash() != meta.config_hash {
        log::warn!(
            "checkpoint {} records config hash {} but its config hashes to {}",
            path.display(),
            meta.config_hash,
            cfg.hash()
        );
    }
    Ok(Checkpoint {
        state,
        config_hash: meta.config_hash,
        config: cfg,
    })
}
