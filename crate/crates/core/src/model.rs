//! Shared physical quantities: measured values with uncertainties, the
//! phonon-limited spin-relaxation law, ODMR thermometry, spectra and fit
//! results.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant in eV/K (CODATA 2018, exact).
pub const BOLTZMANN_EV_PER_K: f64 = 8.617_333_262e-5;

/// A value with a one-sigma standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64) -> Self {
        Self { value, std_error }
    }

    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
        }
    }

    pub fn relative_error(&self) -> f64 {
        (self.std_error / self.value).abs()
    }

    /// `1/x` with first-order propagation.
    pub fn recip(&self) -> Estimate {
        Estimate::new(1.0 / self.value, self.std_error / (self.value * self.value))
    }

    /// Number of standard errors separating `self` from `other`, using the
    /// quadrature sum of both errors.
    pub fn pull(&self, other: &Estimate) -> f64 {
        let s = self.std_error.hypot(other.std_error);
        (self.value - other.value).abs() / s
    }
}

/// Phonon-limited longitudinal relaxation law
/// `1/T1 = A1 + A2 / (exp(Δ/kT) - 1) + A3 T^5`.
///
/// Only `a1` is sample dependent; the other three are universal constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureModel {
    /// Sample-dependent rate (1/s).
    pub a1: f64,
    /// Orbach-process amplitude (1/s).
    pub a2: f64,
    /// Raman-process coefficient (1/(s K^5)).
    pub a3: f64,
    /// Phonon energy (eV).
    pub delta: f64,
}

impl TemperatureModel {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("a1", self.a1), ("a2", self.a2), ("a3", self.a3)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(
                    format!("physics.t1_model.{key}"),
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::config(
                "physics.t1_model.delta",
                format!("must be finite and > 0, got {}", self.delta),
            ));
        }
        Ok(())
    }

    /// Sum of the fixed (sample-independent) terms at `temperature`.
    pub fn phonon_terms(&self, temperature: f64, boltzmann_k: f64) -> Result<f64> {
        if !(temperature > 0.0) {
            return Err(Error::domain(format!(
                "temperature must be > 0 K, got {temperature}"
            )));
        }
        let orbach = self.a2 / (self.delta / (boltzmann_k * temperature)).exp_m1();
        Ok(orbach + self.a3 * temperature.powi(5))
    }

    pub fn rate_with_k(&self, temperature: f64, boltzmann_k: f64) -> Result<f64> {
        Ok(self.a1 + self.phonon_terms(temperature, boltzmann_k)?)
    }
}

/// `1/T1` (1/s) at `temperature` (K).
pub fn t1_rate(model: &TemperatureModel, temperature: f64) -> Result<f64> {
    model.rate_with_k(temperature, BOLTZMANN_EV_PER_K)
}

/// Linear zero-field-splitting thermometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZfsThermometer {
    /// Splitting at the reference temperature (Hz).
    pub d_ref: f64,
    /// Reference temperature (K).
    pub t_ref: f64,
    /// dD/dT (Hz/K).
    pub slope: f64,
    /// Standard uncertainty of `slope` (Hz/K).
    pub slope_std: f64,
}

impl ZfsThermometer {
    pub fn new(d_ref: f64, t_ref: f64, slope: f64, slope_std: f64) -> Result<Self> {
        if slope == 0.0 || !slope.is_finite() {
            return Err(Error::domain("ZFS temperature slope must be non-zero"));
        }
        Ok(Self {
            d_ref,
            t_ref,
            slope,
            slope_std,
        })
    }

    /// Temperature from a measured splitting. The error combines the
    /// resonance-fit error and the slope uncertainty in quadrature.
    pub fn temperature(&self, d_measured: Estimate) -> Estimate {
        let shift = d_measured.value - self.d_ref;
        let dt = shift / self.slope;
        let from_fit = d_measured.std_error / self.slope;
        let from_slope = shift / (self.slope * self.slope) * self.slope_std;
        Estimate::new(self.t_ref + dt, from_fit.hypot(from_slope))
    }

    pub fn zfs(&self, temperature: f64) -> f64 {
        self.d_ref + self.slope * (temperature - self.t_ref)
    }
}

/// Temperature from a measured zero-field splitting; see [`ZfsThermometer`].
pub fn temperature_from_zfs(
    d_measured: Estimate,
    d_ref: f64,
    t_ref: f64,
    slope: f64,
    slope_std: f64,
) -> Result<Estimate> {
    Ok(ZfsThermometer::new(d_ref, t_ref, slope, slope_std)?.temperature(d_measured))
}

/// Inverse of [`temperature_from_zfs`], used by the simulator.
pub fn zfs_from_temperature(temperature: f64, d_ref: f64, t_ref: f64, slope: f64) -> f64 {
    d_ref + slope * (temperature - t_ref)
}

/// Splitting `D = (f+ + f-)/2` from an ODMR resonance pair.
pub fn zfs_from_resonances(f_minus: Estimate, f_plus: Estimate) -> Estimate {
    Estimate::new(
        0.5 * (f_minus.value + f_plus.value),
        0.5 * f_minus.std_error.hypot(f_plus.std_error),
    )
}

/// Wavelength-sampled fluorescence intensity with acquisition metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// nm, strictly ascending.
    pub wavelengths: Vec<f64>,
    /// counts/s per wavelength bin.
    pub intensities: Vec<f64>,
    /// W
    pub laser_power: f64,
    /// K
    pub temperature: f64,
    /// s
    pub exposure: f64,
}

impl Spectrum {
    pub fn new(
        wavelengths: Vec<f64>,
        intensities: Vec<f64>,
        laser_power: f64,
        temperature: f64,
        exposure: f64,
    ) -> Result<Self> {
        let s = Self {
            wavelengths,
            intensities,
            laser_power,
            temperature,
            exposure,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.wavelengths.len() != self.intensities.len() {
            return Err(Error::Shape(format!(
                "{} wavelengths vs {} intensities",
                self.wavelengths.len(),
                self.intensities.len()
            )));
        }
        if self.wavelengths.len() < 2 {
            return Err(Error::InsufficientData(
                "spectrum needs at least two samples".into(),
            ));
        }
        if self.wavelengths.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("wavelengths must be strictly ascending"));
        }
        if !(self.exposure > 0.0) {
            return Err(Error::domain(format!(
                "exposure must be > 0, got {}",
                self.exposure
            )));
        }
        if self.intensities.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("intensities must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelengths.is_empty()
    }

    pub fn same_grid(&self, other: &Spectrum) -> bool {
        self.wavelengths.len() == other.wavelengths.len()
            && self
                .wavelengths
                .iter()
                .zip(&other.wavelengths)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0))
    }

    /// Trapezoidal integral over the native grid.
    pub fn area(&self) -> f64 {
        trapezoid(&self.wavelengths, &self.intensities)
    }

    /// Intensities divided by a wavelength-dependent response, linearly
    /// interpolated from `(wavelength, response)` pairs and held constant
    /// outside the table.
    pub fn corrected_for_response(&self, table: &[(f64, f64)]) -> Result<Spectrum> {
        if table.is_empty() {
            return Err(Error::InsufficientData("empty response table".into()));
        }
        if table.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::domain("response table must be ascending"));
        }
        let mut out = self.clone();
        for (lam, value) in out.wavelengths.iter().zip(out.intensities.iter_mut()) {
            let r = interpolate(table, *lam);
            if !(r > 0.0) {
                return Err(Error::domain(format!("non-positive response at {lam} nm")));
            }
            *value /= r;
        }
        Ok(out)
    }
}

fn interpolate(table: &[(f64, f64)], x: f64) -> f64 {
    let first = table[0];
    let last = table[table.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let i = table.partition_point(|p| p.0 <= x);
    let (x0, y0) = table[i - 1];
    let (x1, y1) = table[i];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Convergence state of an iterative fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    /// Closed-form solution, no iteration.
    Exact,
    CostTolerance,
    GradientTolerance,
    StepTolerance,
}

/// Parameter estimates from weighted least squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub names: Vec<String>,
    pub params: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub chi_squared: f64,
    pub dof: usize,
    pub iterations: usize,
    pub status: FitStatus,
    pub warnings: Vec<String>,
}

impl FitResult {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        model: &str,
        names: &[&str],
        params: Vec<f64>,
        covariance: Vec<Vec<f64>>,
        chi_squared: f64,
        dof: usize,
        iterations: usize,
        status: FitStatus,
    ) -> Self {
        let std_errors = (0..params.len()).map(|i| covariance[i][i].max(0.0).sqrt()).collect();
        Self {
            model: model.to_string(),
            names: names.iter().map(|s| s.to_string()).collect(),
            params,
            std_errors,
            covariance,
            chi_squared,
            dof: dof.max(1),
            iterations,
            status,
            warnings: Vec::new(),
        }
    }

    pub fn reduced_chi_squared(&self) -> f64 {
        self.chi_squared / self.dof as f64
    }

    pub fn estimate(&self, i: usize) -> Estimate {
        Estimate::new(self.params[i], self.std_errors[i])
    }

    pub fn param(&self, name: &str) -> Option<Estimate> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.estimate(i))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit result serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jarmola(a1: f64) -> TemperatureModel {
        TemperatureModel {
            a1,
            a2: 2.1e3,
            a3: 2.2e-11,
            delta: 0.073,
        }
    }

    #[test]
    fn constant_term_only() {
        let m = TemperatureModel {
            a1: 657.0,
            a2: 0.0,
            a3: 0.0,
            delta: 0.05,
        };
        assert_eq!(t1_rate(&m, 294.0).unwrap(), 657.0);
    }

    #[test]
    fn rate_matches_high_precision_reference() {
        // 50-digit evaluation of the same law with k = 8.617333262e-5 eV/K.
        let cases = [
            (294.0, 830.033_189_856_221_5),
            (348.0, 971.059_602_940_075_7),
            (302.0, 847.504_086_075_648_8),
            (320.5, 892.226_298_657_786),
        ];
        for (t, want) in cases {
            let got = t1_rate(&jarmola(657.0), t).unwrap();
            assert!((got - want).abs() / want < 1e-13, "T={t}: {got} vs {want}");
        }
    }

    #[test]
    fn rate_increases_with_temperature() {
        let m = jarmola(657.0);
        assert!(t1_rate(&m, 348.0).unwrap() > t1_rate(&m, 294.0).unwrap());
    }

    #[test]
    fn non_positive_temperature_is_domain_error() {
        assert!(matches!(t1_rate(&jarmola(1.0), 0.0), Err(Error::Domain(_))));
        assert!(matches!(t1_rate(&jarmola(1.0), -3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_shift_gives_reference_temperature() {
        let t = temperature_from_zfs(Estimate::exact(2.87e9), 2.87e9, 294.0, -74.2e3, 0.7e3)
            .unwrap();
        assert_eq!(t.value, 294.0);
        assert_eq!(t.std_error, 0.0);
    }

    #[test]
    fn one_kelvin_per_slope_step() {
        let t = temperature_from_zfs(
            Estimate::exact(2.87e9 - 74.2e3),
            2.87e9,
            294.0,
            -74.2e3,
            0.7e3,
        )
        .unwrap();
        assert_eq!(t.value - 294.0, 1.0);
    }

    #[test]
    fn four_megahertz_shift() {
        let th = ZfsThermometer::new(0.0, 0.0, -74.2e3, 0.0).unwrap();
        let t = th.temperature(Estimate::exact(-4.0e6));
        assert!((t.value - 53.908_355_795_148_25).abs() < 1e-12);
    }

    #[test]
    fn zero_slope_rejected() {
        assert!(matches!(
            temperature_from_zfs(Estimate::exact(1.0), 0.0, 294.0, 0.0, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn response_correction_interpolates() {
        let s = Spectrum::new(vec![500.0, 550.0, 600.0], vec![2.0, 2.0, 2.0], 1e-3, 294.0, 1.0)
            .unwrap();
        let c = s
            .corrected_for_response(&[(500.0, 1.0), (600.0, 2.0)])
            .unwrap();
        assert_eq!(c.intensities, vec![2.0, 2.0 / 1.5, 1.0]);
    }

    #[test]
    fn spectrum_rejects_descending_grid() {
        assert!(Spectrum::new(vec![2.0, 1.0], vec![0.0, 0.0], 0.0, 294.0, 1.0).is_err());
        assert!(Spectrum::new(vec![1.0, 2.0], vec![0.0, 0.0], 0.0, 294.0, 0.0).is_err());
    }
}
