//! Flat binary checkpoint format.
//!
//! ```text
//! "FFORGE1"
//! repeated until end of file:
//!     u64 LE   name length in bytes
//!     [u8]     UTF-8 name
//!     u64 LE   rank
//!     u64 LE   extent, one per axis
//!     f32 LE   values, row-major
//! ```
//!
//! Tensors are always written with rank 4. Text metadata travels as a
//! record whose values are the UTF-8 bytes of the text, one per float.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{Element, ParamStore, Tensor};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 7] = b"FFORGE1";

const MAX_RANK: u64 = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub name: String,
    pub tensor: Tensor<f32>,
}

impl Record {
    pub fn new(name: impl Into<String>, tensor: Tensor<f32>) -> Self {
        Self {
            name: name.into(),
            tensor,
        }
    }

    pub fn text(name: impl Into<String>, text: &str) -> Self {
        let bytes: Vec<f32> = text.bytes().map(f32::from).collect();
        Self::new(name, Tensor::vector(bytes))
    }

    pub fn as_text(&self) -> Result<String> {
        let bytes = self
            .tensor
            .data()
            .iter()
            .map(|&v| {
                if v.fract() == 0.0 && (0.0..=255.0).contains(&v) {
                    Ok(v as u8)
                } else {
                    Err(Error::Checkpoint(format!("record '{}' is not text", self.name)))
                }
            })
            .collect::<Result<Vec<u8>>>()?;
        String::from_utf8(bytes)
            .map_err(|_| Error::Checkpoint(format!("record '{}' is not UTF-8", self.name)))
    }
}

pub fn encode(records: &[Record]) -> Vec<u8> {
    let mut out = Vec::from(&MAGIC[..]);
    for r in records {
        out.extend_from_slice(&(r.name.len() as u64).to_le_bytes());
        out.extend_from_slice(r.name.as_bytes());
        let shape = r.tensor.shape();
        out.extend_from_slice(&(shape.len() as u64).to_le_bytes());
        for e in shape {
            out.extend_from_slice(&(e as u64).to_le_bytes());
        }
        for v in r.tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn take<'a>(buf: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if buf.len() < n {
        return Err(Error::Checkpoint(format!("truncated checkpoint while reading {what}")));
    }
    let (head, tail) = buf.split_at(n);
    *buf = tail;
    Ok(head)
}

fn take_u64(buf: &mut &[u8], what: &str) -> Result<u64> {
    let b = take(buf, 8, what)?;
    Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
}

pub fn decode(bytes: &[u8]) -> Result<Vec<Record>> {
    let mut buf = bytes;
    if take(&mut buf, MAGIC.len(), "magic")? != MAGIC {
        return Err(Error::Checkpoint("bad magic; not an FFORGE1 checkpoint".into()));
    }
    let mut records = Vec::new();
    while !buf.is_empty() {
        let name_len = take_u64(&mut buf, "name length")? as usize;
        let name = std::str::from_utf8(take(&mut buf, name_len, "name")?)
            .map_err(|_| Error::Checkpoint("record name is not UTF-8".into()))?
            .to_owned();
        let rank = take_u64(&mut buf, "rank")?;
        if rank > MAX_RANK {
            return Err(Error::Checkpoint(format!("record '{name}' has rank {rank}")));
        }
        let mut extents = Vec::with_capacity(rank as usize);
        for _ in 0..rank {
            extents.push(take_u64(&mut buf, "extent")? as usize);
        }
        if extents.len() > 4 && extents[..extents.len() - 4].iter().any(|&e| e != 1) {
            return Err(Error::Checkpoint(format!("record '{name}' needs more than four axes")));
        }
        let mut shape = [1usize; 4];
        for (dst, &e) in shape.iter_mut().rev().zip(extents.iter().rev()) {
            *dst = e;
        }
        let count = extents
            .iter()
            .try_fold(1usize, |a, &e| a.checked_mul(e))
            .ok_or_else(|| Error::Checkpoint(format!("record '{name}' is too large")))?;
        let raw = take(&mut buf, count.checked_mul(4).unwrap_or(usize::MAX), "values")?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        records.push(Record::new(name, Tensor::new(shape, data)?));
    }
    Ok(records)
}

pub fn save(path: impl AsRef<Path>, records: &[Record]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(records))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Vec<Record>> {
    let mut bytes = Vec::new();
    fs::File::open(path.as_ref())
        .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.as_ref().display())))?
        .read_to_end(&mut bytes)?;
    decode(&bytes)
}

/// Every entry of `store` as an f32 record, in store order.
pub fn records_from_store<T: Element>(store: &ParamStore<T>) -> Vec<Record> {
    store
        .iter()
        .map(|p| Record::new(p.name.clone(), p.value.cast()))
        .collect()
}

/// Overwrite the values of `store` from matching records. Every entry of the
/// store must be present with an identical shape; unrelated records are ignored.
pub fn restore_store<T: Element>(store: &mut ParamStore<T>, records: &[Record]) -> Result<()> {
    let names: Vec<String> = store.iter().map(|p| p.name.clone()).collect();
    for name in names {
        let rec = records
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::Checkpoint(format!("missing parameter '{name}'")))?;
        let dst = store.value_mut(&name)?;
        if dst.shape() != rec.tensor.shape() {
            return Err(Error::Checkpoint(format!(
                "parameter '{name}' has shape {:?} in the checkpoint but {:?} in the model",
                rec.tensor.shape(),
                dst.shape()
            )));
        }
        *dst = rec.tensor.cast();
    }
    Ok(())
}
