//! Photon-counting detector model: shot noise, dark counts and
//! neutral-density attenuation, and the inverse correction.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Estimate;

/// Detection channel. The NV⁻ channel sits behind a 665 nm longpass, the
/// NV⁰ channel behind a 600 nm shortpass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Minus,
    Zero,
}

impl Channel {
    pub const BOTH: [Channel; 2] = [Channel::Minus, Channel::Zero];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Minus => "minus",
            Channel::Zero => "zero",
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Channel::Minus => 0,
            Channel::Zero => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// counts/s
    pub dark_rate_minus: f64,
    /// counts/s
    pub dark_rate_zero: f64,
    /// Effective in-band transmission of the ND filter, (0, 1].
    pub nd_transmission_minus: f64,
    pub nd_transmission_zero: f64,
    /// Advisory count-rate limit; exceeding it only logs a warning.
    pub saturation_rate: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            dark_rate_minus: 0.0,
            dark_rate_zero: 0.0,
            nd_transmission_minus: 1.0,
            nd_transmission_zero: 1.0,
            saturation_rate: f64::INFINITY,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("nd_transmission_minus", self.nd_transmission_minus),
            ("nd_transmission_zero", self.nd_transmission_zero),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::config(
                    format!("detector.{key}"),
                    format!("must lie in (0, 1], got {v}"),
                ));
            }
        }
        for (key, v) in [
            ("dark_rate_minus", self.dark_rate_minus),
            ("dark_rate_zero", self.dark_rate_zero),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(
                    format!("detector.{key}"),
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        if !(self.saturation_rate > 0.0) {
            return Err(Error::config(
                "detector.saturation_rate",
                format!("must be > 0, got {}", self.saturation_rate),
            ));
        }
        Ok(())
    }

    pub fn transmission(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Minus => self.nd_transmission_minus,
            Channel::Zero => self.nd_transmission_zero,
        }
    }

    pub fn dark_rate(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Minus => self.dark_rate_minus,
            Channel::Zero => self.dark_rate_zero,
        }
    }

    /// Detected count rate for an ideal emission `rate`.
    pub fn detected_rate(&self, rate: f64, channel: Channel) -> f64 {
        rate * self.transmission(channel) + self.dark_rate(channel)
    }

    /// Logs a warning when the detected rate would exceed the advisory limit.
    pub fn check_saturation(&self, rate: f64, channel: Channel) -> bool {
        let detected = self.detected_rate(rate, channel);
        let over = detected > self.saturation_rate;
        if over {
            log::warn!(
                "{} channel rate {:.3e} counts/s exceeds saturation limit {:.3e}",
                channel.name(),
                detected,
                self.saturation_rate
            );
        }
        over
    }
}

/// Draws a Poisson count with mean `(rate * transmission + dark) * duration`.
pub fn sample_counts<R: Rng + ?Sized>(
    rate: f64,
    duration: f64,
    config: &DetectorConfig,
    channel: Channel,
    rng: &mut R,
) -> u64 {
    let mean = config.detected_rate(rate, channel) * duration;
    draw_poisson(mean, rng)
}

pub(crate) fn draw_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// Draws `n` Poisson counts with the same mean and returns their sample
/// mean and (n-1) standard deviation.
pub(crate) fn sample_repeated<R: Rng + ?Sized>(mean: f64, n: u64, rng: &mut R) -> (f64, f64) {
    if !(mean > 0.0) || n == 0 {
        return (0.0, 0.0);
    }
    let dist = Poisson::new(mean).expect("positive finite mean");
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let k: f64 = dist.sample(rng);
        sum += k;
        sum_sq += k * k;
    }
    let nf = n as f64;
    let m = sum / nf;
    let var = if n > 1 {
        ((sum_sq - nf * m * m) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// A corrected count rate. `clamped` is set when dark-count subtraction
/// produced a negative rate that was raised to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedRate {
    pub rate: f64,
    pub std_error: f64,
    pub clamped: bool,
}

impl CorrectedRate {
    pub fn estimate(&self) -> Estimate {
        Estimate::new(self.rate, self.std_error)
    }
}

/// Removes dark counts and ND attenuation from a raw count.
pub fn correct_counts(
    raw: f64,
    duration: f64,
    config: &DetectorConfig,
    channel: Channel,
) -> Result<CorrectedRate> {
    if !(duration > 0.0) {
        return Err(Error::domain(format!("duration must be > 0, got {duration}")));
    }
    let t = config.transmission(channel);
    let rate = (raw / duration - config.dark_rate(channel)) / t;
    let std_error = raw.max(0.0).sqrt() / duration / t;
    Ok(CorrectedRate {
        rate: rate.max(0.0),
        std_error,
        clamped: rate < 0.0,
    })
}
