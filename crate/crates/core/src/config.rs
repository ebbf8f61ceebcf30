//! Configuration file (TOML) and the physics parameter set.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detection::DetectorConfig;
use crate::error::{Error, Result};
use crate::model::{TemperatureModel, ZfsThermometer};
use crate::photophysics::{EmissionParams, RechargeParams};
use crate::relaxometry::ChargeCalibrationSettings;
use crate::spectra::SpectralModel;

/// The shipped default configuration, including literature constants.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../data/default_config.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    /// Photoluminescence correction factor κ (per-center NV⁻/NV⁰ PL ratio).
    pub kappa_lambda: f64,
    /// Zero-field splitting at `zfs_ref_temperature` (Hz).
    pub zfs_ref: f64,
    /// K
    pub zfs_ref_temperature: f64,
    /// dD/dT (Hz/K)
    pub zfs_slope: f64,
    /// Hz/K
    pub zfs_slope_std: f64,
    /// eV/K
    pub boltzmann_k: f64,
    pub t1_model: TemperatureModel,
    pub recharge: RechargeParams,
    pub emission: EmissionParams,
}

impl PhysicsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_lambda > 0.0) {
            return Err(Error::config("physics.kappa_lambda", "must be > 0"));
        }
        if !(self.zfs_slope < 0.0) {
            return Err(Error::config("physics.zfs_slope", "must be < 0"));
        }
        if !(self.zfs_slope_std >= 0.0) {
            return Err(Error::config("physics.zfs_slope_std", "must be >= 0"));
        }
        if !(self.zfs_ref_temperature > 0.0) {
            return Err(Error::config("physics.zfs_ref_temperature", "must be > 0"));
        }
        if !(self.boltzmann_k > 0.0) {
            return Err(Error::config("physics.boltzmann_k", "must be > 0"));
        }
        self.t1_model.validate()?;
        self.recharge.validate()?;
        self.emission.validate()
    }

    /// `1/T1` at `temperature` with this configuration's Boltzmann constant.
    pub fn t1_rate(&self, temperature: f64) -> Result<f64> {
        self.t1_model.rate_with_k(temperature, self.boltzmann_k)
    }

    pub fn thermometer(&self) -> ZfsThermometer {
        ZfsThermometer {
            d_ref: self.zfs_ref,
            t_ref: self.zfs_ref_temperature,
            slope: self.zfs_slope,
            slope_std: self.zfs_slope_std,
        }
    }

    /// Charge state held fixed: no recharge in the dark and no conversion
    /// under illumination.
    pub fn with_frozen_charge(mut self) -> Self {
        self.recharge = RechargeParams::disabled(self.recharge.n_minus_dark_eq);
        self.emission.frozen_charge = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSettings {
    /// Readout power (W) at or above which the recharge evaluation runs.
    pub recharge_min_power: f64,
}

/// Everything a configuration file holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub physics: PhysicsConfig,
    pub detector: DetectorConfig,
    pub spectra: SpectralModel,
    pub charge_calibration: ChargeCalibrationSettings,
    pub analysis: AnalysisSettings,
}

impl Default for Config {
    fn default() -> Self {
        Config::from_toml_str(DEFAULT_CONFIG_TOML).expect("bundled default config is valid")
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        self.detector.validate()?;
        self.spectra.validate()?;
        self.charge_calibration.validate()?;
        if !(self.analysis.recharge_min_power >= 0.0) {
            return Err(Error::config("analysis.recharge_min_power", "must be >= 0"));
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Maps a deserialization error to the dotted key it refers to.
fn toml_error(text: &str, err: &toml::de::Error) -> Error {
    let message = err.message().to_string();
    let key = err
        .span()
        .map(|span| key_at(text, span.start))
        .filter(|k| !k.is_empty())
        .or_else(|| backticked(&message))
        .unwrap_or_else(|| "<document>".to_string());
    Error::Config { key, message }
}

fn backticked(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

/// Dotted key of the `key = value` line (or table header) containing
/// byte offset `pos`.
fn key_at(text: &str, pos: usize) -> String {
    let mut table = String::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let end = offset + line.len();
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            table = trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if pos < end {
                return table;
            }
        } else if pos < end {
            let name = trimmed.split('=').next().unwrap_or("").trim();
            return match (table.is_empty(), name.is_empty()) {
                (_, true) => table,
                (true, false) => name.to_string(),
                (false, false) => format!("{table}.{name}"),
            };
        }
        offset = end;
    }
    table
}
