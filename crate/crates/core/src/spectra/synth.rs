//! Synthetic two-component fluorescence spectra.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::PhysicsConfig;
use crate::detection::draw_poisson;
use crate::error::{Error, Result};
use crate::model::{trapezoid, Spectrum};
use crate::photophysics::steady_state_fraction;
use crate::seed::mix;

/// One Gaussian phonon-sideband component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidebandBand {
    /// nm
    pub center: f64,
    /// nm (Gaussian standard deviation)
    pub sigma: f64,
    pub weight: f64,
}

/// Area-normalized emission lineshape: Lorentzian ZPL plus Gaussian
/// sidebands. ZPL position and width move linearly with temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lineshape {
    /// nm at the reference temperature
    pub zpl_center: f64,
    /// nm at the reference temperature
    pub zpl_fwhm: f64,
    /// nm/K
    pub zpl_shift_per_k: f64,
    /// nm/K
    pub zpl_broadening_per_k: f64,
    /// Share of the total area in the ZPL.
    pub zpl_fraction: f64,
    pub sidebands: Vec<SidebandBand>,
}

impl Lineshape {
    fn validate(&self, key: &str) -> Result<()> {
        if !(self.zpl_fwhm > 0.0) {
            return Err(Error::config(format!("{key}.zpl_fwhm"), "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.zpl_fraction) {
            return Err(Error::config(format!("{key}.zpl_fraction"), "must lie in [0, 1]"));
        }
        if self.sidebands.is_empty() && self.zpl_fraction < 1.0 {
            return Err(Error::config(format!("{key}.sidebands"), "needs at least one band"));
        }
        for b in &self.sidebands {
            if !(b.sigma > 0.0 && b.weight > 0.0) {
                return Err(Error::config(
                    format!("{key}.sidebands"),
                    "band sigma and weight must be > 0",
                ));
            }
        }
        Ok(())
    }

    pub fn zpl_center_at(&self, temperature: f64, reference: f64) -> f64 {
        self.zpl_center + self.zpl_shift_per_k * (temperature - reference)
    }

    pub fn zpl_fwhm_at(&self, temperature: f64, reference: f64) -> f64 {
        (self.zpl_fwhm + self.zpl_broadening_per_k * (temperature - reference)).max(1e-3)
    }

    /// Spectral density (1/nm) at `lambda`.
    pub fn density(&self, lambda: f64, temperature: f64, reference: f64) -> f64 {
        let c = self.zpl_center_at(temperature, reference);
        let hw = 0.5 * self.zpl_fwhm_at(temperature, reference);
        let zpl = hw / (PI * ((lambda - c).powi(2) + hw * hw));
        let total: f64 = self.sidebands.iter().map(|b| b.weight).sum();
        let psb: f64 = self
            .sidebands
            .iter()
            .map(|b| {
                b.weight / total * (-0.5 * ((lambda - b.center) / b.sigma).powi(2)).exp()
                    / (b.sigma * (2.0 * PI).sqrt())
            })
            .sum();
        self.zpl_fraction * zpl + (1.0 - self.zpl_fraction) * if total > 0.0 { psb } else { 0.0 }
    }
}

/// Spectrometer grid, lineshapes and acquisition plan for synthetic spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralModel {
    /// nm
    pub grid_start: f64,
    /// nm
    pub grid_end: f64,
    pub grid_points: usize,
    /// Quadratic grid distortion, |warp| < 1; zero gives a uniform grid.
    pub grid_warp: f64,
    /// Detected counts/s per W of excitation per unit NV⁰-equivalent emission.
    pub gain: f64,
    /// K at which the lineshape parameters apply.
    pub reference_temperature: f64,
    pub nv_minus: Lineshape,
    pub nv_zero: Lineshape,
    /// nm window over which δ₀ minimizes the NV⁰ content of the NV⁻ basis.
    pub delta0_window: [f64; 2],
    /// nm window over which δ₋ minimizes the NV⁻ content of the NV⁰ basis.
    pub delta_minus_window: [f64; 2],
    /// Powers (W) of the dataset used for fractions and variance.
    pub powers: Vec<f64>,
    pub temperatures: Vec<f64>,
    /// s
    pub exposure: f64,
    /// NV⁻-rich reference (W).
    pub reference_power_low: f64,
    /// NV⁰-rich reference (W).
    pub reference_power_high: f64,
    pub reference_exposure: f64,
    /// Powers of the κ calibration series (W), all well below saturation.
    pub kappa_powers: Vec<f64>,
    /// NV⁻ fraction held during the κ series.
    pub kappa_n_minus: f64,
    pub kappa_exposure: f64,
}

impl SpectralModel {
    pub fn validate(&self) -> Result<()> {
        let key = |k: &str| format!("spectra.{k}");
        if !(self.grid_start < self.grid_end) {
            return Err(Error::config(key("grid_end"), "must exceed grid_start"));
        }
        if self.grid_points < 16 {
            return Err(Error::config(key("grid_points"), "must be >= 16"));
        }
        if !(self.grid_warp.abs() < 1.0) {
            return Err(Error::config(key("grid_warp"), "must satisfy |warp| < 1"));
        }
        for (k, v) in [
            ("gain", self.gain),
            ("exposure", self.exposure),
            ("reference_exposure", self.reference_exposure),
            ("kappa_exposure", self.kappa_exposure),
            ("reference_power_low", self.reference_power_low),
            ("reference_power_high", self.reference_power_high),
            ("reference_temperature", self.reference_temperature),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(key(k), "must be finite and > 0"));
            }
        }
        if !(self.reference_power_low < self.reference_power_high) {
            return Err(Error::config(key("reference_power_high"), "must exceed reference_power_low"));
        }
        if !(0.0..=1.0).contains(&self.kappa_n_minus) {
            return Err(Error::config(key("kappa_n_minus"), "must lie in [0, 1]"));
        }
        for (k, list) in [("powers", &self.powers), ("kappa_powers", &self.kappa_powers)] {
            if list.is_empty() || list.iter().any(|p| !(*p > 0.0)) {
                return Err(Error::config(key(k), "must be a non-empty list of powers > 0"));
            }
        }
        if self.temperatures.is_empty() || self.temperatures.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::config(key("temperatures"), "must be a non-empty list of values > 0"));
        }
        for (k, w) in [("delta0_window", self.delta0_window), ("delta_minus_window", self.delta_minus_window)] {
            if !(w[0] < w[1]) {
                return Err(Error::config(key(k), "must be [low, high]"));
            }
        }
        self.nv_minus.validate("spectra.nv_minus")?;
        self.nv_zero.validate("spectra.nv_zero")
    }

    /// The (slightly non-uniform) spectrometer wavelength grid.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.grid_points;
        let span = self.grid_end - self.grid_start;
        (0..n)
            .map(|i| {
                let u = i as f64 / (n - 1) as f64;
                self.grid_start + span * (u + self.grid_warp * u * (1.0 - u))
            })
            .collect()
    }

    /// Expected counts/s per bin for NV⁻ fraction `n_minus`.
    ///
    /// Each component is normalized to unit area inside the grid, so κ is
    /// the NV⁻/NV⁰ per-center brightness ratio within the detected band.
    pub fn expected_intensities(&self, power: f64, n_minus: f64, temperature: f64, kappa: f64) -> Vec<f64> {
        let grid = self.grid();
        let minus = self.component_bins(&grid, &self.nv_minus, temperature);
        let zero = self.component_bins(&grid, &self.nv_zero, temperature);
        minus
            .iter()
            .zip(&zero)
            .map(|(m, z)| self.gain * power * (kappa * n_minus * m + (1.0 - n_minus) * z))
            .collect()
    }

    /// Per-bin share of one lineshape, scaled to unit trapezoid area per
    /// mean bin width.
    fn component_bins(&self, grid: &[f64], shape: &Lineshape, temperature: f64) -> Vec<f64> {
        let n = grid.len();
        let bins: Vec<f64> = (0..n)
            .map(|i| {
                let lo = if i == 0 { grid[0] } else { 0.5 * (grid[i - 1] + grid[i]) };
                let hi = if i == n - 1 { grid[n - 1] } else { 0.5 * (grid[i] + grid[i + 1]) };
                shape.density(grid[i], temperature, self.reference_temperature) * (hi - lo)
            })
            .collect();
        let mean_width = (grid[n - 1] - grid[0]) / (n - 1) as f64;
        let scale = mean_width / trapezoid(grid, &bins);
        bins.iter().map(|b| b * scale).collect()
    }

    /// A shot-noise-limited spectrum (`seed = None` for the noise-free one).
    pub fn spectrum(
        &self,
        power: f64,
        n_minus: f64,
        temperature: f64,
        kappa: f64,
        exposure: f64,
        seed: Option<u64>,
    ) -> Result<Spectrum> {
        if !(0.0..=1.0).contains(&n_minus) {
            return Err(Error::domain(format!("n_minus {n_minus} outside [0, 1]")));
        }
        let mut y = self.expected_intensities(power, n_minus, temperature, kappa);
        if let Some(seed) = seed {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for v in &mut y {
                *v = draw_poisson(*v * exposure, &mut rng) as f64 / exposure;
            }
        }
        Spectrum::new(self.grid(), y, power, temperature, exposure)
    }
}

fn stream(seed: u64, tag: u64, temperature: f64, power: f64) -> u64 {
    mix(&[seed, tag, temperature.to_bits(), power.to_bits()])
}

/// Spectrum at the charge steady state of `power`.
pub fn simulate_steady_state_spectrum(
    model: &SpectralModel,
    physics: &PhysicsConfig,
    power: f64,
    temperature: f64,
    seed: u64,
) -> Result<Spectrum> {
    let n = steady_state_fraction(power, &physics.emission)?;
    model.spectrum(
        power,
        n,
        temperature,
        physics.kappa_lambda,
        model.exposure,
        Some(stream(seed, 1, temperature, power)),
    )
}

/// NV⁰-rich (`i0_pre`, high power) and NV⁻-rich (`i_minus_pre`, low power)
/// reference spectra.
pub fn simulate_references(
    model: &SpectralModel,
    physics: &PhysicsConfig,
    temperature: f64,
    seed: u64,
) -> Result<(Spectrum, Spectrum)> {
    let make = |power: f64, tag: u64| -> Result<Spectrum> {
        let n = steady_state_fraction(power, &physics.emission)?;
        model.spectrum(
            power,
            n,
            temperature,
            physics.kappa_lambda,
            model.reference_exposure,
            Some(stream(seed, tag, temperature, power)),
        )
    };
    Ok((make(model.reference_power_high, 2)?, make(model.reference_power_low, 3)?))
}

/// The κ calibration series at balanced populations.
pub fn simulate_kappa_series(
    model: &SpectralModel,
    physics: &PhysicsConfig,
    temperature: f64,
    seed: u64,
) -> Result<Vec<(f64, Spectrum)>> {
    model
        .kappa_powers
        .iter()
        .map(|&p| {
            let s = model.spectrum(
                p,
                model.kappa_n_minus,
                temperature,
                physics.kappa_lambda,
                model.kappa_exposure,
                Some(stream(seed, 4, temperature, p)),
            )?;
            Ok((p, s))
        })
        .collect()
}
