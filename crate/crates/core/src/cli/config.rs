//! On-disk experiment configuration. Keys carry their units.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AoiError, Result};
use crate::model::{ChannelModel, SystemConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub slot_duration_ms: f64,
    pub bandwidth_hz: f64,
    pub packet_bits: f64,
    pub error_prob: f64,
    #[serde(default = "unit_dispersion")]
    pub dispersion: f64,
    pub max_slots: u32,
    pub avg_power_w: f64,
    pub coherence_slots: u64,
}

fn unit_dispersion() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    /// Received SNR per state at unit transmit power, linear scale.
    pub snr: Vec<f64>,
    pub probs: Vec<f64>,
}

/// The file as written. Kept alongside the derived model types so the
/// configuration can be re-emitted without unit conversions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub system: SystemSection,
    pub channel: ChannelSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| AoiError::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AoiError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config sections are plain tables")
    }

    /// SHA-256 of the canonical re-emitted text, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn system(&self) -> Result<SystemConfig> {
        let s = &self.system;
        let cfg = SystemConfig {
            slot_duration: s.slot_duration_ms * 1e-3,
            bandwidth: s.bandwidth_hz,
            packet_bits: s.packet_bits,
            error_prob: s.error_prob,
            dispersion: s.dispersion,
            max_slots: s.max_slots,
            avg_power: s.avg_power_w,
            coherence_slots: s.coherence_slots,
        };
        cfg.validate().map_err(as_config_error)?;
        Ok(cfg)
    }

    pub fn channel(&self) -> Result<ChannelModel> {
        ChannelModel::new(self.channel.snr.clone(), self.channel.probs.clone()).map_err(as_config_error)
    }

    /// Five-state channel with a 1 W budget, shipped as `configs/default.toml`.
    pub fn reference() -> Self {
        Self {
            system: SystemSection {
                slot_duration_ms: 1.0,
                bandwidth_hz: 1e5,
                packet_bits: 500.0,
                error_prob: 1e-3,
                dispersion: 1.0,
                max_slots: 5,
                avg_power_w: 1.0,
                coherence_slots: 1000,
            },
            channel: ChannelSection {
                snr: vec![1.0, 5.0, 10.0, 15.0, 20.0],
                probs: vec![0.1, 0.2, 0.4, 0.2, 0.1],
            },
        }
    }
}

fn as_config_error(e: AoiError) -> AoiError {
    match e {
        AoiError::Domain(msg) => AoiError::Config(msg),
        AoiError::Shape { what, got, expected } => {
            AoiError::Config(format!("{what} has length {got}, expected {expected}"))
        }
        other => other,
    }
}
