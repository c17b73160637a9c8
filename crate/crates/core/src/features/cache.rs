//! Binary per-utterance feature records.
//!
//! Layout (all little-endian):
//!
//! | field          | type        |
//! |----------------|-------------|
//! | magic          | `b"CVCFEAT\0"` |
//! | version        | u32 (= 1)   |
//! | frames `T`     | u32         |
//! | mcep dim `D`   | u32         |
//! | ap bands `B`   | u32         |
//! | frame period   | f32, ms     |
//! | mcep           | `T·D` f32, row-major |
//! | f0             | `T` f32     |
//! | voiced         | `T` bytes (0/1) |
//! | ap             | `T·B` f32, row-major |
//!
//! Values are stored as f32, so a write/read/write cycle is byte-stable.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::types::{ApSequence, F0Track, FeatureSet, McepSequence};
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 8] = b"CVCFEAT\0";
pub const FEATURE_VERSION: u32 = 1;

pub fn encode_features(f: &FeatureSet) -> Result<Vec<u8>> {
    f.validate()?;
    let t = f.frames();
    let d = f.mcep.dim();
    let b = f.ap.frames.ncols();
    let mut out = Vec::with_capacity(28 + 4 * t * (d + b + 1) + t);
    out.extend_from_slice(FEATURE_MAGIC);
    for v in [FEATURE_VERSION, t as u32, d as u32, b as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(f.mcep.frame_period_ms as f32).to_le_bytes());
    for v in f.mcep.frames.iter() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    for v in &f.f0.values {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out.extend(f.f0.voiced.iter().map(|&v| v as u8));
    for v in f.ap.frames.iter() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).ok_or("length overflow")?;
        if end > self.buf.len() {
            return Err(format!("truncated at byte {} (need {n} more)", self.pos));
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> std::result::Result<Vec<f64>, String> {
        let raw = self.take(n.checked_mul(4).ok_or("length overflow")?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }
}

pub fn decode_features(buf: &[u8]) -> std::result::Result<FeatureSet, String> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != FEATURE_MAGIC {
        return Err("bad magic".into());
    }
    let version = r.u32()?;
    if version != FEATURE_VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let t = r.u32()? as usize;
    let d = r.u32()? as usize;
    let b = r.u32()? as usize;
    let fp = f32::from_le_bytes(r.take(4)?.try_into().unwrap()) as f64;
    let mcep = r.f32s(t * d)?;
    let f0 = r.f32s(t)?;
    let voiced = r.take(t)?.iter().map(|&v| v != 0).collect();
    let ap = r.f32s(t * b)?;
    if r.pos != buf.len() {
        return Err(format!("{} trailing bytes", buf.len() - r.pos));
    }
    let f = FeatureSet {
        mcep: McepSequence::new(Array2::from_shape_vec((t, d), mcep).unwrap(), fp),
        f0: F0Track { values: f0, voiced },
        ap: ApSequence {
            frames: Array2::from_shape_vec((t, b), ap).unwrap(),
        },
    };
    f.validate().map_err(|e| e.to_string())?;
    Ok(f)
}

pub fn write_feature_file(path: &Path, f: &FeatureSet) -> Result<()> {
    let bytes = encode_features(f)?;
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_feature_file(path: &Path) -> Result<FeatureSet> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    decode_features(&buf).map_err(|reason| Error::format(path, reason))
}
