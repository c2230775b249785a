//! Versioned checkpoint files: network parameters, optimizer moments, the
//! entropy coefficient and RNG state, wrapped in a checksummed envelope and
//! written atomically.

use super::adam::{AdamState, ScalarAdam};
use super::mlp::Mlp;
use super::NnError;
use crate::rng::RngSnapshot;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Complete training state of a model. Baselines without critics leave the
/// Q-side fields `None`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: String,
    pub seed: u64,
    pub config_fingerprint: String,
    pub episodes_trained: u64,
    pub policy: Mlp,
    pub q1: Option<Mlp>,
    pub q2: Option<Mlp>,
    pub target_q1: Option<Mlp>,
    pub target_q2: Option<Mlp>,
    pub log_alpha: f64,
    pub adam_policy: Option<AdamState>,
    pub adam_q1: Option<AdamState>,
    pub adam_q2: Option<AdamState>,
    pub adam_alpha: Option<ScalarAdam>,
    pub rng: RngSnapshot,
}

#[derive(Serialize, Deserialize)]
struct Envelope<'a> {
    format_version: u32,
    checksum: String,
    #[serde(borrow)]
    body: &'a serde_json::value::RawValue,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Checkpoint {
    fn all_finite(&self) -> bool {
        let net_ok = |n: &Mlp| n.flat_params().iter().all(|v| v.is_finite());
        net_ok(&self.policy)
            && self.log_alpha.is_finite()
            && [&self.q1, &self.q2, &self.target_q1, &self.target_q2]
                .iter()
                .all(|q| q.as_ref().map_or(true, |n| net_ok(n)))
    }
}

/// Serialize and write atomically (write-then-rename), with a SHA-256
/// checksum over the body text.
pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), NnError> {
    if !ckpt.all_finite() {
        return Err(NnError::NonFiniteParameter);
    }
    let body = serde_json::to_string(ckpt)?;
    let raw = serde_json::value::RawValue::from_string(body.clone())?;
    let envelope = Envelope {
        format_version: CHECKPOINT_FORMAT_VERSION,
        checksum: sha256_hex(body.as_bytes()),
        body: &raw,
    };
    let text = serde_json::to_string(&envelope)?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Read and verify a checkpoint; a corrupted file fails the checksum.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, NnError> {
    let text = std::fs::read_to_string(path)?;
    let envelope: Envelope = serde_json::from_str(&text)?;
    if envelope.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(NnError::UnsupportedFormatVersion(envelope.format_version));
    }
    let body = envelope.body.get();
    let computed = sha256_hex(body.as_bytes());
    if computed != envelope.checksum {
        return Err(NnError::ChecksumMismatch {
            expected: envelope.checksum,
            computed,
        });
    }
    Ok(serde_json::from_str(body)?)
}
