//! Fixtures shared by the benchmarks.

use nvrelax_core::photophysics::log_spaced;
use nvrelax_core::{Config, PulseSequence};

/// The standard relaxometry sequence with a 30-point τ sweep.
pub fn standard_sequence(power: f64, repetitions: u64) -> PulseSequence {
    PulseSequence::standard(power, log_spaced(1e-6, 30e-3, 30), repetitions)
}

pub fn default_config() -> Config {
    Config::default()
}
