//! Run configuration: one serializable struct covering every stage, hashed
//! into each output file header.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use edaqc::baseline::RuleConfig;
use edaqc::io::RunMeta;
use edaqc::labeling::LabelConfig;
use edaqc::ml::PipelineConfig;
use edaqc::synth::SynthConfig;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Entropy bins and band-filter lengths are deliberately absent: they are
/// pinned by the feature-map version, not tunable per run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub win_sec: f64,
    pub label: LabelConfig,
    pub synth: SynthConfig,
    pub ml: PipelineConfig,
    pub rules: RuleConfig,
    /// Window-noise fraction above which a ground-truth mask makes a window
    /// noisy.
    pub truth_frac: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            win_sec: 5.0,
            label: LabelConfig::default(),
            synth: SynthConfig::default(),
            ml: PipelineConfig::default(),
            rules: RuleConfig::default(),
            truth_frac: 0.05,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }

    /// The master seed governs everything, including synthesis.
    pub fn apply_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = seed {
            self.seed = s;
        }
        self.synth.seed = self.seed;
    }

    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn meta(&self) -> RunMeta {
        RunMeta::new(TOOL_VERSION, &self.hash(), self.seed)
    }
}
