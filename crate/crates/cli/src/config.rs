use std::path::Path;

use echobeat_core::beats::BeatConfig;
use echobeat_core::decode::DecodeConfig;
use echobeat_core::eval::BootstrapConfig;
use echobeat_core::heatmap::Extent;
use echobeat_core::labels::{JitterConfig, LossConfig};
use echobeat_core::phantom::{MockModelConfig, PhantomConfig};
use echobeat_core::study::StudyConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Every tunable of the pipeline, loadable from one JSON or TOML file.
/// Missing sections take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub extent: Extent,
    pub phantom: PhantomConfig,
    pub mock: MockModelConfig,
    pub jitter: JitterConfig,
    pub decode: DecodeConfig,
    pub beats: BeatConfig,
    pub study: StudyConfig,
    pub bootstrap: BootstrapConfig,
    pub loss: LossConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            extent: Extent {
                height: 112,
                width: 112,
            },
            phantom: PhantomConfig::default(),
            mock: MockModelConfig::default(),
            jitter: JitterConfig::default(),
            decode: DecodeConfig::default(),
            beats: BeatConfig::default(),
            study: StudyConfig::default(),
            bootstrap: BootstrapConfig::default(),
            loss: LossConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let parsed = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).map_err(|e| e.to_string()),
            _ => serde_json::from_str(&text).map_err(|e| e.to_string()),
        };
        parsed.map_err(|msg| CliError::config(path, msg))
    }

    /// Gives every seeded component the same seed.
    pub fn apply_seed(&mut self, seed: Option<u64>) {
        if let Some(seed) = seed {
            self.mock.seed = seed;
            self.jitter.seed = seed;
            self.bootstrap.seed = seed;
        }
    }
}
