//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes  "STEMCKPT"
//! version    u32
//! meta_len   u64
//! meta       meta_len bytes of JSON (CheckpointMeta)
//! count      u32
//! count times:
//!   name_len u32, name (UTF-8)
//!   rank     u32, rank x u64 dims
//!   values   prod(dims) x f64
//! ```
//!
//! Tensors are stored in parameter registration order. Writing is a pure
//! function of the model and metadata, so equal models give equal bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stemcast_core::datasets::{ChannelScale, NormalizationParams};
use stemcast_core::models::{Model, ModelConfig};
use stemcast_core::ndmath::{ParamStore, Tensor};
use stemcast_core::training::PipelineConfig;

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 8] = b"STEMCKPT";
pub const VERSION: u32 = 1;
/// The output-gate peephole reads the freshly updated cell state.
pub const PEEPHOLE: &str = "post_update";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub architecture: String,
    pub peephole: String,
    pub seed: u64,
    pub n_inputs: usize,
    pub window: usize,
    /// Which parameters these are: `final` or `best_val`.
    pub snapshot: String,
    pub input_names: Vec<String>,
    pub input_scales: NormalizationParams,
    pub target_scale: ChannelScale,
    pub denoised: bool,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub params: ParamStore,
}

impl Checkpoint {
    pub fn model_config(&self) -> ModelConfig {
        self.meta.pipeline.model
    }

    /// Rebuilds the model, checking the tensors against its layout.
    pub fn model(&self) -> Result<Model> {
        Model::with_params(
            self.model_config(),
            self.meta.n_inputs,
            self.meta.window,
            self.params.clone(),
        )
        .map_err(|e| CliError::data(format!("incompatible checkpoint: {e}")))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let meta =
            serde_json::to_vec_pretty(&self.meta).map_err(|e| CliError::data(format!("checkpoint metadata: {e}")))?;
        let mut out = Vec::with_capacity(meta.len() + 8 * self.params.numel() + 64);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        for (name, tensor) in self.params.iter() {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(tensor.rank() as u32).to_le_bytes());
            for &d in tensor.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in tensor.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(CliError::data("not a stemcast checkpoint (bad magic)"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CliError::data(format!("unsupported checkpoint version {version}")));
        }
        let meta_len = r.len_u64()?;
        let meta: CheckpointMeta = serde_json::from_slice(r.take(meta_len)?)
            .map_err(|e| CliError::data(format!("checkpoint metadata: {e}")))?;
        let count = r.u32()? as usize;
        let mut params = ParamStore::new();
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| CliError::data("checkpoint tensor name is not UTF-8"))?
                .to_string();
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.len_u64()).collect::<Result<Vec<_>>>()?;
            let numel = shape
                .iter()
                .try_fold(1usize, |n, &d| n.checked_mul(d))
                .filter(|n| n.checked_mul(8).is_some_and(|b| b <= r.remaining()))
                .ok_or_else(|| CliError::data(format!("checkpoint tensor `{name}` exceeds the file")))?;
            let data = r
                .take(numel * 8)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            let tensor =
                Tensor::new(&shape, data).map_err(|e| CliError::data(format!("checkpoint tensor `{name}`: {e}")))?;
            if params.find(&name).is_some() {
                return Err(CliError::data(format!("duplicate checkpoint tensor `{name}`")));
            }
            params.insert(&name, tensor);
        }
        if r.remaining() != 0 {
            return Err(CliError::data("trailing bytes after checkpoint tensors"));
        }
        if meta.peephole != PEEPHOLE {
            return Err(CliError::data(format!(
                "unsupported peephole convention `{}`",
                meta.peephole
            )));
        }
        Ok(Checkpoint { meta, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Checkpoint::from_bytes(&bytes).map_err(|e| match e {
            CliError::Data(msg) => CliError::data(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(CliError::data("truncated checkpoint"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn len_u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| CliError::data("checkpoint length overflows usize"))
    }
}
