//! Binary checkpoint format.
//!
//! Layout (little-endian): magic `MTGW`, u16 version, u16 vocab size, u32
//! hidden, latent and fc sizes, u64 seed, u32 tensor count, then per tensor
//! u32 name length, name bytes, u32 rows, u32 cols and rows·cols f32 values
//! in row-major order.

use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::linalg::Matrix;
use super::params::{ModelDims, VaeParams};
use super::VaeError;

pub const MAGIC: &[u8; 4] = b"MTGW";
pub const FORMAT_VERSION: u16 = 1;

pub fn to_bytes(p: &VaeParams) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(p.dims.vocab as u16).to_le_bytes());
    for d in [p.dims.hidden, p.dims.latent, p.dims.fc] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&p.seed.to_le_bytes());
    let tensors = p.tensors();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, m) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(m.rows as u32).to_le_bytes());
        out.extend_from_slice(&(m.cols as u32).to_le_bytes());
        for &x in &m.data {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], VaeError> {
        if self.pos + n > self.buf.len() {
            return Err(VaeError::Format(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, VaeError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("two bytes")))
    }

    fn u32(&mut self) -> Result<u32, VaeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("four bytes")))
    }

    fn u64(&mut self) -> Result<u64, VaeError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("eight bytes")))
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<VaeParams, VaeError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(VaeError::Format("bad magic".into()));
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(VaeError::Format(format!("unsupported version {version}")));
    }
    let vocab = r.u16()? as usize;
    let (hidden, latent, fc) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    let seed = r.u64()?;
    let count = r.u32()? as usize;
    let mut read = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| VaeError::Format("tensor name is not UTF-8".into()))?;
        let (rows, cols) = (r.u32()? as usize, r.u32()? as usize);
        let bytes = r.take(rows.checked_mul(cols).and_then(|n| n.checked_mul(4)).ok_or_else(|| VaeError::Format("tensor too large".into()))?)?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("four bytes")) as f64)
            .collect();
        read.push((name, Matrix { rows, cols, data }));
    }
    if r.pos != buf.len() {
        return Err(VaeError::Format("trailing bytes".into()));
    }
    let feed_z = read.iter().any(|(n, _)| n == "dec_wz");
    let dims = ModelDims {
        vocab,
        hidden,
        latent,
        fc,
        feed_z,
    };
    let mut p = VaeParams::zeros(dims);
    p.seed = seed;
    let mut slots = p.tensors_mut();
    if slots.len() != read.len() {
        return Err(VaeError::Shape(format!("expected {} tensors, found {}", slots.len(), read.len())));
    }
    for ((name, slot), (rname, m)) in slots.iter_mut().zip(read) {
        if *name != rname {
            return Err(VaeError::Shape(format!("expected tensor {name}, found {rname}")));
        }
        if (slot.rows, slot.cols) != (m.rows, m.cols) {
            return Err(VaeError::Shape(format!(
                "{name}: expected {}x{}, found {}x{}",
                slot.rows, slot.cols, m.rows, m.cols
            )));
        }
        **slot = m;
    }
    drop(slots);
    Ok(p)
}

pub fn save_checkpoint(p: &VaeParams, path: &Path) -> Result<(), VaeError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&to_bytes(p))?;
    f.sync_all()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<VaeParams, VaeError> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    from_bytes(&buf)
}

/// Loads and checks the vocabulary size against the caller's.
pub fn load_checkpoint_for(path: &Path, vocab_size: usize) -> Result<VaeParams, VaeError> {
    let p = load_checkpoint(path)?;
    if p.dims.vocab != vocab_size {
        return Err(VaeError::Shape(format!(
            "checkpoint vocabulary {} does not match {vocab_size}",
            p.dims.vocab
        )));
    }
    Ok(p)
}

/// Hex SHA-256 of the serialized parameters.
pub fn digest(p: &VaeParams) -> String {
    hex::encode(Sha256::digest(to_bytes(p)))
}
