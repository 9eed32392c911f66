//! Checkpoint byte layout (all integers little-endian):
//!
//! ```text
//! magic            4 bytes  "XQPV"
//! version          u32      1
//! seed             u64      initialization seed
//! input            u32
//! hidden count     u32, then one u32 per backbone width
//! policy           u32
//! value count      u32, then one u32 per value-branch hidden width
//! parameters       f64 each, per layer weights (row-major, out x in) then
//!                  bias; backbone, policy head, value branch, value output
//! ```
//!
//! Nothing follows the last parameter.

use std::io::{Read, Write};
use std::path::Path;

use super::{ModelConfig, ModelError, ModelParams};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"XQPV";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

impl ModelParams {
    pub fn to_bytes(&self) -> Vec<u8> {
        let config = self.config();
        let mut out = Vec::with_capacity(64 + 8 * self.parameter_count());
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.seed().to_le_bytes());
        put_u32(&mut out, config.input);
        put_u32(&mut out, config.hidden.len());
        for &h in &config.hidden {
            put_u32(&mut out, h);
        }
        put_u32(&mut out, config.policy);
        put_u32(&mut out, config.value_hidden.len());
        for &h in &config.value_hidden {
            put_u32(&mut out, h);
        }
        for t in self.tensors() {
            for v in t {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let mut r = Cursor { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(ModelError::BadCheckpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION as usize {
            return Err(ModelError::BadCheckpoint(format!(
                "unsupported version {version}"
            )));
        }
        let seed = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
        let input = r.u32()?;
        let hidden = r.list()?;
        let policy = r.u32()?;
        let value_hidden = r.list()?;
        let config = ModelConfig {
            input,
            hidden,
            policy,
            value_hidden,
        };
        let mut params = ModelParams::zeros(config);
        let expected = 8 * params.parameter_count();
        if bytes.len() - r.pos != expected {
            return Err(ModelError::BadCheckpoint(format!(
                "expected {expected} parameter bytes, found {}",
                bytes.len() - r.pos
            )));
        }
        params.set_seed(seed);
        for t in params.tensors_mut() {
            for v in t.iter_mut() {
                *v = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
            }
        }
        Ok(params)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], ModelError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(ModelError::BadCheckpoint("truncated header".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn list(&mut self) -> Result<Vec<usize>, ModelError> {
        let n = self.u32()?;
        if n > 64 {
            return Err(ModelError::BadCheckpoint(format!(
                "implausible layer count {n}"
            )));
        }
        (0..n).map(|_| self.u32()).collect()
    }
}

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<(), ModelError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&params.to_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams, ModelError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    ModelParams::from_bytes(&bytes)
}
