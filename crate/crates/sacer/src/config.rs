//! Run configuration: every training and evaluation knob with its calibrated
//! default, file round-trip, and `key=value` overrides.

use crate::reward::RewardWeights;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("bad override {0:?}: expected key=value")]
    BadOverride(String),
    #[error("unknown or mistyped key in {context}: {message}")]
    UnknownKey { context: String, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// All run parameters. Defaults are the calibrated settings; any key can be
/// overridden from a config file or `key=value` pairs, and unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed; fixed default, never wall-clock.
    pub seed: u64,
    /// Training episodes.
    pub episodes: u64,
    /// Learning rate of the policy network.
    pub lr_policy: f64,
    /// Learning rate of the Q-value networks.
    pub lr_q: f64,
    /// Learning rate of the entropy coefficient.
    pub lr_alpha: f64,
    /// Discount coefficient.
    pub gamma: f64,
    /// Soft-update parameter for the target networks.
    pub tau: f64,
    /// Target entropy of the policy.
    pub target_entropy: f64,
    /// Replay buffer capacity.
    pub buffer_capacity: usize,
    /// Minimum buffer fill before updates start.
    pub buffer_min: usize,
    /// Mini-batch size.
    pub batch_size: usize,
    /// Simulation frequency, Hz.
    pub sim_frequency: f64,
    /// Policy update frequency, Hz (must equal the simulation frequency).
    pub policy_frequency: f64,
    /// Hidden width of the two hidden layers of every network.
    pub hidden_width: usize,
    /// Reward weights.
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    /// Average both vehicles' orientation errors in the SVO reward instead of
    /// using the ego's alone.
    pub svo_error_both: bool,
    /// Drop the bootstrap term of the Q target on terminal transitions
    /// (collision or reaching); time-limit truncation always bootstraps.
    pub mask_bootstrap_on_done: bool,
    /// Exclude collision episodes from the episode-length-error average.
    pub exclude_collisions_from_length_error: bool,
    /// Behavior-cloning epochs.
    pub bc_epochs: u64,
    /// Behavior-cloning learning rate.
    pub bc_lr: f64,
    /// Behavior-cloning mini-batch size.
    pub bc_batch_size: usize,
    /// Number of scenarios assigned to the test split at ingest.
    pub test_count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            episodes: 35_000,
            lr_policy: 1e-4,
            lr_q: 1e-3,
            lr_alpha: 1e-4,
            gamma: 0.99,
            tau: 0.005,
            target_entropy: -2.0,
            buffer_capacity: 100_000,
            buffer_min: 1_000,
            batch_size: 512,
            sim_frequency: 10.0,
            policy_frequency: 10.0,
            hidden_width: 256,
            alpha1: -1.0,
            alpha2: -2.0,
            alpha3: -1.0,
            alpha4: 1.0,
            svo_error_both: false,
            mask_bootstrap_on_done: true,
            exclude_collisions_from_length_error: true,
            bc_epochs: 2_000,
            bc_lr: 1e-4,
            bc_batch_size: 512,
            test_count: 17,
        }
    }
}

impl RunConfig {
    /// Scaled-down settings for single-core desk runs: smaller networks and
    /// batches, 3000 episodes. Everything else keeps the calibrated defaults.
    pub fn desk_scale() -> Self {
        Self {
            episodes: 3_000,
            hidden_width: 64,
            batch_size: 64,
            lr_policy: 3e-4,
            ..Self::default()
        }
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sim_frequency
    }

    pub fn weights(&self) -> RewardWeights {
        RewardWeights {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            alpha3: self.alpha3,
            alpha4: self.alpha4,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        for (name, v) in [
            ("lr_policy", self.lr_policy),
            ("lr_q", self.lr_q),
            ("lr_alpha", self.lr_alpha),
            ("bc_lr", self.bc_lr),
            ("tau", self.tau),
            ("sim_frequency", self.sim_frequency),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if self.tau > 1.0 {
            return bad(format!("tau must lie in (0, 1], got {}", self.tau));
        }
        if self.batch_size == 0 || self.bc_batch_size == 0 {
            return bad("batch sizes must be positive".into());
        }
        if self.buffer_min == 0 || self.buffer_min > self.buffer_capacity {
            return bad(format!(
                "buffer_min {} must lie in [1, buffer_capacity = {}]",
                self.buffer_min, self.buffer_capacity
            ));
        }
        if self.hidden_width == 0 {
            return bad("hidden_width must be positive".into());
        }
        if (self.sim_frequency - self.policy_frequency).abs() > 1e-9 {
            return bad(format!(
                "policy_frequency {} must equal sim_frequency {}",
                self.policy_frequency, self.sim_frequency
            ));
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| ConfigError::UnknownKey {
            context: path.display().to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Apply `key=value` overrides on top of this config; unknown keys and
    /// mistyped values are rejected.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), ConfigError> {
        if overrides.is_empty() {
            return Ok(());
        }
        let mut doc = serde_json::to_value(&*self).expect("config serializes");
        let map = doc.as_object_mut().unwrap();
        for pair in overrides {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| ConfigError::BadOverride(pair.clone()))?;
            let parsed: serde_json::Value = serde_json::from_str(value.trim())
                .unwrap_or_else(|_| serde_json::Value::String(value.trim().to_string()));
            map.insert(key.trim().to_string(), parsed);
        }
        let updated: Self = serde_json::from_value(doc).map_err(|e| ConfigError::UnknownKey {
            context: "overrides".into(),
            message: e.to_string(),
        })?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, recorded in checkpoints.
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
