//! Flat binary container for sample batches.
//!
//! Layout (all integers little-endian `u64` unless noted):
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0      | 8    | magic `b"MDEPBAT1"` |
//! | 8      | 8    | `p` |
//! | 16     | 8    | `m`, dependence order of the stored sequence |
//! | 24     | 8    | `n` |
//! | 32     | 8    | `R` |
//! | 40     | 8    | `master_seed` |
//! | 48     | 8    | block size (0 for raw process output) |
//! | 56     | 8    | original `n` before blocking (equals `n` for raw output) |
//! | 64     | 32   | SHA-256 of the sidecar's canonical process JSON |
//! | 96     | ...  | `R * n * p` little-endian `f64`, replicate-major |
//!
//! The JSON sidecar (`<path>.json`) stores the process and block metadata.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::batch::{BatchSource, RemainderPolicy, SampleBatch};
use crate::error::{Error, Result};
use crate::procgen::{ProcessSpec, ProcessSpecRepr};

pub const MAGIC: &[u8; 8] = b"MDEPBAT1";
pub const HEADER_LEN: usize = 96;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub process: ProcessSpecRepr,
    pub block: usize,
    pub original_n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<RemainderPolicy>,
    pub digest: String,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write `batch` to `path` plus its JSON sidecar.
pub fn write_batch(batch: &SampleBatch, path: &Path) -> Result<()> {
    let spec = batch.source().process();
    let digest = spec.digest();
    let (block, original_n, policy) = match batch.source() {
        BatchSource::Process(_) => (0, batch.n(), None),
        BatchSource::Blocked { block, original_n, policy, .. } => (*block, *original_n, Some(*policy)),
    };
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    for v in [
        batch.p() as u64,
        batch.source().dependence() as u64,
        batch.n() as u64,
        batch.replicates() as u64,
        batch.master_seed(),
        block as u64,
        original_n as u64,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&digest)?;
    for v in batch.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    let side = Sidecar { process: spec.to_repr(), block, original_n, policy, digest: hex(&digest) };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)? + "\n")?;
    Ok(())
}

/// Read a batch written by [`write_batch`], checking the digest.
pub fn read_batch(path: &Path) -> Result<SampleBatch> {
    let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    let spec = Arc::new(ProcessSpec::from_repr(&side.process)?);
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[..8] != MAGIC {
        return Err(Error::Input(format!("{} is not a batch container", path.display())));
    }
    let field = |i: usize| u64::from_le_bytes(header[8 + 8 * i..16 + 8 * i].try_into().unwrap());
    let (p, n, reps, seed, block, original_n) =
        (field(0) as usize, field(2) as usize, field(3) as usize, field(4), field(5) as usize, field(6) as usize);
    if header[64..96] != spec.digest() {
        return Err(Error::Validation("sidecar process does not match the container digest".into()));
    }
    let count = reps
        .checked_mul(n)
        .and_then(|v| v.checked_mul(p))
        .ok_or_else(|| Error::Input("header sizes overflow".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::Input(format!("expected {} data bytes, found {}", count * 8, bytes.len())));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let source = if block == 0 {
        BatchSource::Process(spec)
    } else {
        BatchSource::Blocked { parent: spec, block, original_n, policy: side.policy.unwrap_or(RemainderPolicy::Absorb) }
    };
    SampleBatch::new(data, reps, n, p, source, seed)
}
