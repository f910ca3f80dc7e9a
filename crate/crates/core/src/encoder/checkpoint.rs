//! Binary checkpoint container.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic        8 bytes   "HGRMCKPT"
//! version      u32       1
//! curvature    f64
//! activation   u8        0 = relu, 1 = identity
//! n_dims       u32
//! layer_dims   n_dims × u32
//! n_tensors    u32
//! per tensor:
//!   name_len   u32
//!   name       name_len bytes, UTF-8
//!   group      u8        0 = euclidean-tangent, 1 = manifold
//!   rank       u32
//!   shape      rank × u64
//!   data       prod(shape) × f64
//! ```

use std::fs;
use std::path::Path;

use super::params::{Activation, Arch, ParameterSet};
use crate::error::{Error, Result};
use crate::hyperbolic::Curvature;
use crate::params::{ParamGroup, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"HGRMCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn to_bytes(p: &ParameterSet) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&p.curvature().value().to_le_bytes());
    out.push(p.activation().tag());
    out.extend_from_slice(&(p.layer_dims().len() as u32).to_le_bytes());
    for &d in p.layer_dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(p.tensors().len() as u32).to_le_bytes());
    for t in p.tensors() {
        out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.push(t.group.tag());
        out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &s in &t.shape {
            out.extend_from_slice(&(s as u64).to_le_bytes());
        }
        for &x in &t.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let Some(end) = end else {
            return Err(Error::Validation(format!(
                "checkpoint truncated at byte {}",
                self.pos
            )));
        };
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<ParameterSet> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Validation("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Validation(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let curvature = Curvature::new(r.f64()?).map_err(|e| Error::Validation(e.to_string()))?;
    let activation = Activation::from_tag(r.u8()?)
        .ok_or_else(|| Error::Validation("unknown activation tag".into()))?;
    let n_dims = r.u32()? as usize;
    let layer_dims = (0..n_dims)
        .map(|_| r.u32().map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let n_tensors = r.u32()? as usize;
    let mut tensors = Vec::with_capacity(n_tensors.min(1024));
    for _ in 0..n_tensors {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::Validation("tensor name is not UTF-8".into()))?
            .to_string();
        let group = ParamGroup::from_tag(r.u8()?)
            .ok_or_else(|| Error::Validation(format!("tensor {name}: unknown group tag")))?;
        let rank = r.u32()? as usize;
        let shape = (0..rank)
            .map(|_| r.u64().map(|s| s as usize))
            .collect::<Result<Vec<_>>>()?;
        let count = shape.iter().try_fold(1usize, |a, &s| a.checked_mul(s));
        let Some(count) = count.filter(|&c| c <= buf.len() / 8) else {
            return Err(Error::Validation(format!(
                "tensor {name}: implausible shape {shape:?}"
            )));
        };
        let data = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        tensors.push(
            Tensor::new(name, shape, group, data).map_err(|e| Error::Validation(e.to_string()))?,
        );
    }
    if r.pos != buf.len() {
        return Err(Error::Validation(format!(
            "{} trailing bytes in checkpoint",
            buf.len() - r.pos
        )));
    }
    ParameterSet::from_tensors(
        tensors,
        Arch {
            layer_dims,
            curvature,
            activation,
        },
    )
}

/// Writes atomically: the file is assembled under a temporary name and then
/// renamed, so an interrupted write never leaves a partial checkpoint.
pub fn save_checkpoint(p: &ParameterSet, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, to_bytes(p)).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ParameterSet> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&buf)
}
