use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{spatial_frequencies, NoiseSpec, RadarConfig, TargetParams};

/// Scenario file contents: radar, targets and optional noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub version: u32,
    pub radar: RadarConfig,
    pub targets: Vec<TargetParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
}

impl Scenario {
    pub fn new(radar: RadarConfig, targets: Vec<TargetParams>, noise: Option<NoiseSpec>) -> Self {
        Self { version: 1, radar, targets, noise }
    }

    /// The shipped desk scenario: desk radar, the coherent same-range pair,
    /// −20 dB input SNR.
    pub fn desk() -> Self {
        Self::new(RadarConfig::desk(), super::coherent_pair(), Some(NoiseSpec { input_snr_db: -20.0, seed: 1 }))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != 1 {
            return Err(Error::ScenarioInvalid(format!("unsupported scenario version {}", self.version)));
        }
        self.radar.validate()?;
        if self.targets.is_empty() {
            return Err(Error::ScenarioInvalid("at least one target is required".into()));
        }
        for t in &self.targets {
            spatial_frequencies(&self.radar, t)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
