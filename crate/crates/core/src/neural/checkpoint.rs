//! Flat parameter container: an 8-byte magic, a little-endian `u32` format
//! version, a little-endian `u64` header length, a JSON header naming every
//! tensor with its shape and byte offset, then the raw little-endian `f64`
//! data.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"HOPSCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset into the data section.
    pub offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    tensors: Vec<TensorEntry>,
    meta: serde_json::Value,
}

/// A decoded checkpoint: named tensors in file order plus caller metadata.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub tensors: Vec<(String, Tensor)>,
    pub meta: serde_json::Value,
}

pub fn encode(store: &ParamStore, meta: serde_json::Value) -> Result<Vec<u8>> {
    let mut tensors = Vec::with_capacity(store.len());
    let mut offset = 0;
    for id in store.ids() {
        let v = store.value(id);
        tensors.push(TensorEntry {
            name: store.name(id).to_string(),
            shape: v.shape().to_vec(),
            offset,
        });
        offset += v.len() * 8;
    }
    let header = serde_json::to_vec(&Header { tensors, meta })
        .map_err(|e| Error::json("checkpoint header", e))?;
    let mut out = Vec::with_capacity(20 + header.len() + offset);
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for id in store.ids() {
        for v in store.value(id).data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let corrupt = |m: &str| Error::CorruptCheckpoint(m.to_string());
    if bytes.len() < 20 {
        return Err(corrupt("file shorter than the fixed preamble"));
    }
    if bytes[..8] != CHECKPOINT_MAGIC {
        return Err(corrupt("bad magic bytes"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let data_start = usize::try_from(header_len)
        .ok()
        .and_then(|h| h.checked_add(20))
        .filter(|&s| s <= bytes.len())
        .ok_or_else(|| corrupt("header extends past end of file"))?;
    let header: Header = serde_json::from_slice(&bytes[20..data_start])
        .map_err(|e| Error::CorruptCheckpoint(format!("unreadable header: {e}")))?;
    let data = &bytes[data_start..];
    let mut expected_offset = 0usize;
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for entry in header.tensors {
        let n = entry
            .shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| corrupt("tensor shape overflows"))?;
        if entry.offset != expected_offset {
            return Err(Error::CorruptCheckpoint(format!(
                "tensor `{}` has offset {}, expected {expected_offset}",
                entry.name, entry.offset
            )));
        }
        let end = n
            .checked_mul(8)
            .and_then(|b| b.checked_add(entry.offset))
            .filter(|&e| e <= data.len())
            .ok_or_else(|| {
                Error::CorruptCheckpoint(format!("data for `{}` is truncated", entry.name))
            })?;
        let values = data[entry.offset..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        tensors.push((entry.name, Tensor::from_vec(&entry.shape, values)?));
        expected_offset = end;
    }
    if expected_offset != data.len() {
        return Err(corrupt("trailing bytes after tensor data"));
    }
    Ok(Checkpoint {
        tensors,
        meta: header.meta,
    })
}

pub fn write_checkpoint(path: &Path, store: &ParamStore, meta: serde_json::Value) -> Result<()> {
    crate::io::write_atomic(path, &encode(store, meta)?)
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Copies checkpoint tensors into `store` by name; every parameter must be
/// present with an identical shape.
pub fn restore(store: &mut ParamStore, ckpt: &Checkpoint) -> Result<()> {
    if ckpt.tensors.len() != store.len() {
        return Err(Error::Shape(format!(
            "checkpoint holds {} tensors, model has {}",
            ckpt.tensors.len(),
            store.len()
        )));
    }
    for (name, t) in &ckpt.tensors {
        let id = store.find(name).ok_or_else(|| Error::Unknown {
            what: "checkpoint tensor",
            name: name.clone(),
        })?;
        store.set_value(id, t.clone())?;
    }
    Ok(())
}
