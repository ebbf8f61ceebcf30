//! Simulation and analysis of temperature-dependent NV-center relaxometry
//! with charge-state dynamics.
//!
//! The crate is organized bottom-up: [`model`] holds shared quantities,
//! [`photophysics`] and [`detection`] generate data, [`spectra`],
//! [`fitting`] and [`relaxometry`] analyze it.

pub mod config;
pub mod detection;
pub mod error;
pub mod fitting;
pub mod model;
pub mod photophysics;
pub mod relaxometry;
mod seed;
pub mod spectra;

pub use config::{AnalysisSettings, Config, PhysicsConfig, DEFAULT_CONFIG_TOML};
pub use detection::{correct_counts, sample_counts, Channel, CorrectedRate, DetectorConfig};
pub use error::{Error, Result};
pub use model::{
    t1_rate, temperature_from_zfs, trapezoid, zfs_from_resonances, zfs_from_temperature, Estimate,
    FitResult, FitStatus, Spectrum, TemperatureModel, ZfsThermometer, BOLTZMANN_EV_PER_K,
};
pub use photophysics::{
    run_sequence, EmissionParams, EnsembleState, PulseSequence, RechargeParams,
};
pub use relaxometry::{ChargeRatioMapping, RelaxometryTrace};
pub use spectra::{BasisSet, Decomposition, ZplFit};
