//! Versioned single-file tensor container.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic        8 bytes  b"CVCTENS\0"
//! version      u32
//! dtype        u8       0 = f32, 1 = f64
//! meta_len     u32
//! metadata     meta_len bytes of UTF-8 JSON
//! count        u32
//! manifest     count × { name_len u16, name, ndim u8, dims u64 × ndim }
//! data         tensors in manifest order
//! digest       32-byte SHA-256 of every preceding byte
//! ```
//!
//! The manifest lets a loader validate every shape before touching the data,
//! and the trailing digest rejects truncated or corrupted files outright.

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::params::Params;

pub const CONTAINER_MAGIC: &[u8; 8] = b"CVCTENS\0";
pub const CONTAINER_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DType {
    F32,
    F64,
}

impl DType {
    fn tag(self) -> u8 {
        match self {
            DType::F32 => 0,
            DType::F64 => 1,
        }
    }

    fn width(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub dtype: DType,
    pub metadata: String,
    pub tensors: Vec<Tensor>,
}

impl Container {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(CONTAINER_MAGIC);
        out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
        out.push(self.dtype.tag());
        out.extend_from_slice(&(self.metadata.len() as u32).to_le_bytes());
        out.extend_from_slice(self.metadata.as_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            if t.shape.iter().product::<usize>() != t.data.len() {
                return Err(Error::Shape(format!(
                    "tensor {} has shape {:?} but {} values",
                    t.name,
                    t.shape,
                    t.data.len()
                )));
            }
            let name = t.name.as_bytes();
            if name.len() > u16::MAX as usize || t.shape.len() > u8::MAX as usize {
                return Err(Error::InvalidInput(format!("tensor name or rank too large: {}", t.name)));
            }
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name);
            out.push(t.shape.len() as u8);
            for &d in &t.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
        }
        for t in &self.tensors {
            match self.dtype {
                DType::F32 => t.data.iter().for_each(|v| out.extend_from_slice(&(*v as f32).to_le_bytes())),
                DType::F64 => t.data.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn decode(buf: &[u8]) -> std::result::Result<Self, String> {
        if buf.len() < CONTAINER_MAGIC.len() + 32 {
            return Err("file too short".into());
        }
        let (body, digest) = buf.split_at(buf.len() - 32);
        if &buf[..8] != CONTAINER_MAGIC {
            return Err("bad magic".into());
        }
        if Sha256::digest(body).as_slice() != digest {
            return Err("checksum mismatch (truncated or corrupted)".into());
        }
        let mut pos = 8usize;
        let mut take = |n: usize| -> std::result::Result<&[u8], String> {
            let end = pos.checked_add(n).ok_or("length overflow")?;
            if end > body.len() {
                return Err(format!("truncated at byte {pos}"));
            }
            let s = &body[pos..end];
            pos = end;
            Ok(s)
        };
        let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
        if version != CONTAINER_VERSION {
            return Err(format!("unsupported container version {version}"));
        }
        let dtype = match take(1)?[0] {
            0 => DType::F32,
            1 => DType::F64,
            t => return Err(format!("unknown dtype tag {t}")),
        };
        let meta_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let metadata = String::from_utf8(take(meta_len)?.to_vec()).map_err(|e| e.to_string())?;
        let count = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let mut manifest = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let nlen = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
            let name = String::from_utf8(take(nlen)?.to_vec()).map_err(|e| e.to_string())?;
            let ndim = take(1)?[0] as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize);
            }
            manifest.push((name, shape));
        }
        let mut tensors = Vec::with_capacity(manifest.len());
        for (name, shape) in manifest {
            let n = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .ok_or("tensor size overflow")?;
            let raw = take(n.checked_mul(dtype.width()).ok_or("tensor size overflow")?)?;
            let data = match dtype {
                DType::F32 => raw
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                    .collect(),
                DType::F64 => raw
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            };
            tensors.push(Tensor { name, shape, data });
        }
        if pos != body.len() {
            return Err(format!("{} unexpected trailing bytes", body.len() - pos));
        }
        Ok(Container {
            dtype,
            metadata,
            tensors,
        })
    }

    /// Writes to a temporary file in the target directory, then renames.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.encode()?;
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
        tmp.write_all(&bytes).map_err(|e| Error::io(path, e))?;
        tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
        tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&buf).map_err(|r| Error::format(path, r))
    }
}

/// Every parameter of `p` as a tensor named `prefix.<path>`.
pub fn params_to_tensors<P: Params>(p: &P, prefix: &str) -> Vec<Tensor> {
    let mut out = Vec::new();
    p.visit(prefix, &mut |name, shape, v| {
        out.push(Tensor {
            name: name.to_string(),
            shape: shape.to_vec(),
            data: v.to_vec(),
        })
    });
    out
}

/// Fills `p` from tensors named `prefix.<path>`. Every parameter must be
/// present with a matching shape.
pub fn tensors_to_params<P: Params>(c: &Container, p: &mut P, prefix: &str) -> std::result::Result<(), String> {
    let mut err = None;
    p.visit_mut(prefix, &mut |name, shape, v| {
        if err.is_some() {
            return;
        }
        match c.get(name) {
            None => err = Some(format!("missing tensor {name}")),
            Some(t) if t.shape != shape => {
                err = Some(format!("tensor {name} has shape {:?}, expected {:?}", t.shape, shape))
            }
            Some(t) => v.copy_from_slice(&t.data),
        }
    });
    err.map_or(Ok(()), Err)
}
