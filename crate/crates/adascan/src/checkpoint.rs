//! ASC1 trainer checkpoints.
//!
//! Layout, little-endian: magic `ASC1`, `u32` version, `u32` tensor count;
//! per tensor a `u16` name length, the UTF-8 name, a `u8` rank, `u32`
//! extents and `f32` values; then the generator seed (32 bytes), stream
//! (`u64`) and word position (`u128`); then the `u64` iteration counter.

use std::path::Path;

use adascan_core::crdpg::{RngState, Snapshot};
use adascan_core::numcore::Tensor;
use anyhow::Context;

use crate::format::{put_f32s, FormatError, Reader};
use crate::fsio::atomic_write;

pub const MAGIC: [u8; 4] = *b"ASC1";
pub const VERSION: u32 = 1;

pub fn encode(snap: &Snapshot) -> Result<Vec<u8>, FormatError> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(snap.tensors.len() as u32).to_le_bytes());
    for (name, t) in &snap.tensors {
        let offset = out.len();
        let invalid = |message: String| FormatError::Invalid { offset, message };
        let len = u16::try_from(name.len()).map_err(|_| invalid(format!("tensor name {name:?} is too long")))?;
        let rank = u8::try_from(t.rank()).map_err(|_| invalid(format!("tensor {name} has rank {}", t.rank())))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(rank);
        for &d in t.shape() {
            let d = u32::try_from(d).map_err(|_| invalid(format!("tensor {name} extent {d} is too large")))?;
            out.extend_from_slice(&d.to_le_bytes());
        }
        put_f32s(&mut out, t.data());
    }
    out.extend_from_slice(&snap.rng.seed);
    out.extend_from_slice(&snap.rng.stream.to_le_bytes());
    out.extend_from_slice(&snap.rng.word_pos.to_le_bytes());
    out.extend_from_slice(&snap.iteration.to_le_bytes());
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(FormatError::Version {
            found: version,
            expected: VERSION,
        });
    }
    let count = r.u32()? as usize;
    let mut tensors = Vec::with_capacity(count.min(4096));
    for _ in 0..count {
        let len = r.u16()? as usize;
        let at = r.pos();
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| FormatError::Invalid {
                offset: at,
                message: "tensor name is not UTF-8".into(),
            })?
            .to_string();
        let rank = r.u8()? as usize;
        let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let at = r.pos();
        let n = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or_else(|| r.invalid("tensor size overflows"))?;
        let data = r.f32s(n)?;
        let t = Tensor::new(&shape, data).map_err(|e| FormatError::Invalid {
            offset: at,
            message: format!("tensor {name}: {e}"),
        })?;
        tensors.push((name, t));
    }
    let seed = r.array::<32>()?;
    let stream = r.u64()?;
    let word_pos = r.u128()?;
    let iteration = r.u64()?;
    r.finish()?;
    Ok(Snapshot {
        tensors,
        rng: RngState { seed, stream, word_pos },
        iteration,
    })
}

pub fn load(path: &Path) -> anyhow::Result<Snapshot> {
    let bytes = std::fs::read(path).with_context(|| format!("reading checkpoint {}", path.display()))?;
    decode(&bytes).with_context(|| format!("loading checkpoint {}", path.display()))
}

pub fn save(snap: &Snapshot, path: &Path) -> anyhow::Result<()> {
    atomic_write(path, &encode(snap)?)
}
