use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::trace::{Half, RelaxometryTrace};
use crate::config::PhysicsConfig;
use crate::detection::{sample_repeated, Channel, DetectorConfig};
use crate::error::{Error, Result};
use crate::fitting::{fit_power_law, PowerLaw, Model};
use crate::model::{Estimate, FitResult};
use crate::photophysics::{emission_rates, steady_state_fraction, EnsembleState, WindowLabel};
use crate::seed::mix;

/// How the simulator produces charge-ratio calibration pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeCalibrationSettings {
    /// Excitation powers (W).
    pub powers: Vec<f64>,
    /// Counting time per sample (s).
    pub dwell: f64,
    /// Samples per power and channel.
    pub samples: u64,
    /// Standard deviation of the spectrally determined NV⁻ fraction.
    pub spectral_fraction_std: f64,
}

impl ChargeCalibrationSettings {
    pub fn validate(&self) -> Result<()> {
        if self.powers.len() < 4 || self.powers.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::config(
                "charge_calibration.powers",
                "needs at least 4 powers, all > 0",
            ));
        }
        if !(self.dwell > 0.0) {
            return Err(Error::config("charge_calibration.dwell", "must be > 0"));
        }
        if self.samples < 2 {
            return Err(Error::config("charge_calibration.samples", "must be >= 2"));
        }
        if !(self.spectral_fraction_std >= 0.0) {
            return Err(Error::config("charge_calibration.spectral_fraction_std", "must be >= 0"));
        }
        Ok(())
    }
}

/// One calibration pair at a given power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub power: f64,
    /// `[NV⁻]/[NV⁰]` from spectra.
    pub charge_ratio: Estimate,
    /// Corrected NV⁻-channel over NV⁰-channel count rate.
    pub count_ratio: Estimate,
}

/// Ratio of two estimates with uncorrelated errors.
fn ratio(a: Estimate, b: Estimate) -> Estimate {
    let r = a.value / b.value;
    Estimate::new(r, r.abs() * a.relative_error().hypot(b.relative_error()))
}

/// Steady-state calibration pairs: the charge ratio from a noisy spectral
/// fraction, the count ratio from repeated SPCM samples at the same power.
pub fn simulate_charge_calibration(
    physics: &PhysicsConfig,
    detector: &DetectorConfig,
    settings: &ChargeCalibrationSettings,
    temperature: f64,
    seed: u64,
) -> Result<Vec<CalibrationPoint>> {
    settings.validate()?;
    let em = &physics.emission;
    settings
        .powers
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let n = steady_state_fraction(p, em)?;
            let s = em.spin_target(p);
            let state = EnsembleState::new(n, s, s)?;
            let (r_minus, r_zero) = emission_rates(&state, p, em);
            let key = |tag: u64| mix(&[seed, temperature.to_bits(), i as u64, tag]);
            let rate = |r: f64, ch: Channel, tag: u64| -> Estimate {
                let mut rng = ChaCha8Rng::seed_from_u64(key(tag));
                let mean = detector.detected_rate(r, ch) * settings.dwell;
                let (m, sd) = sample_repeated(mean, settings.samples, &mut rng);
                let t = detector.transmission(ch);
                Estimate::new(
                    (m / settings.dwell - detector.dark_rate(ch)) / t,
                    sd / (settings.samples as f64).sqrt() / settings.dwell / t,
                )
            };
            let count_ratio = ratio(rate(r_minus, Channel::Minus, 0), rate(r_zero, Channel::Zero, 1));
            let mut rng = ChaCha8Rng::seed_from_u64(key(2));
            let noise = Normal::new(0.0, settings.spectral_fraction_std.max(f64::MIN_POSITIVE))
                .expect("finite std")
                .sample(&mut rng);
            let n_meas = (n + noise).clamp(1e-6, 1.0 - 1e-6);
            let charge_ratio = Estimate::new(
                n_meas / (1.0 - n_meas),
                settings.spectral_fraction_std / (1.0 - n_meas).powi(2),
            );
            Ok(CalibrationPoint {
                power: p,
                charge_ratio,
                count_ratio,
            })
        })
        .collect()
}

/// Count ratio → charge ratio, `y = a x^n + c`, valid on the calibrated
/// count-ratio range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeRatioMapping {
    pub a: Estimate,
    pub n: Estimate,
    pub c: Estimate,
    /// Count-ratio validity range `[lo, hi]`.
    pub range: (f64, f64),
    pub fit: FitResult,
}

impl ChargeRatioMapping {
    pub fn eval(&self, x: f64) -> f64 {
        PowerLaw.eval(x, &self.fit.params)
    }

    pub fn slope(&self, x: f64) -> f64 {
        self.a.value * self.n.value * x.powf(self.n.value - 1.0)
    }

    fn check_range(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.range;
        if !(x >= lo && x <= hi) {
            return Err(Error::CalibrationRange { value: x, lo, hi });
        }
        Ok(())
    }

    /// Maps a count ratio, propagating its error and the fit covariance.
    pub fn apply(&self, x: Estimate) -> Result<Estimate> {
        self.check_range(x.value)?;
        let g = self.param_gradient(x.value);
        let var_fit = quad(&g, &self.fit.covariance, &g);
        let var_x = (self.slope(x.value) * x.std_error).powi(2);
        Ok(Estimate::new(self.eval(x.value), (var_fit + var_x).max(0.0).sqrt()))
    }

    fn param_gradient(&self, x: f64) -> [f64; 3] {
        let mut g = [0.0; 3];
        PowerLaw.gradient(x, &self.fit.params, &mut g);
        g
    }
}

fn quad(a: &[f64; 3], m: &[Vec<f64>], b: &[f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            if a[i] != 0.0 && b[k] != 0.0 {
                s += a[i] * m[i][k] * b[k];
            }
        }
    }
    s
}

/// Fits charge ratio against count ratio with `y = a x^n + c`, weighting
/// by the effective variance `σ_y² + (dy/dx σ_x)²`.
pub fn calibrate_charge_ratio_mapping(
    charge_ratios: &[Estimate],
    count_ratios: &[Estimate],
) -> Result<ChargeRatioMapping> {
    if charge_ratios.len() != count_ratios.len() {
        return Err(Error::Shape(format!(
            "{} charge ratios vs {} count ratios",
            charge_ratios.len(),
            count_ratios.len()
        )));
    }
    if charge_ratios.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "calibration needs at least 4 pairs, got {}",
            charge_ratios.len()
        )));
    }
    let mut pairs: Vec<(Estimate, Estimate)> = count_ratios.iter().cloned().zip(charge_ratios.iter().cloned()).collect();
    pairs.sort_by(|a, b| a.0.value.total_cmp(&b.0.value));
    let x: Vec<f64> = pairs.iter().map(|p| p.0.value).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1.value).collect();
    let floor = 1e-12 * y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let mut sigma: Vec<f64> = pairs.iter().map(|p| p.1.std_error.max(floor)).collect();
    let mut fit = fit_power_law(&x, &y, &sigma)?;
    for _ in 0..3 {
        sigma = pairs
            .iter()
            .map(|(cx, cy)| {
                let (a, n) = (fit.params[0], fit.params[1]);
                let dydx = a * n * cx.value.powf(n - 1.0);
                (cy.std_error.powi(2) + (dydx * cx.std_error).powi(2)).sqrt().max(floor)
            })
            .collect();
        fit = fit_power_law(&x, &y, &sigma)?;
    }
    let range = (x[0], x[x.len() - 1]);
    let mapping = ChargeRatioMapping {
        a: fit.estimate(0),
        n: fit.estimate(1),
        c: fit.estimate(2),
        range,
        fit,
    };
    // Strict monotonicity on the calibrated range.
    let samples: Vec<f64> = (0..=100)
        .map(|k| mapping.eval(range.0 + (range.1 - range.0) * k as f64 / 100.0))
        .collect();
    let increasing = samples.windows(2).all(|w| w[1] > w[0]);
    let decreasing = samples.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) || mapping.a.value == 0.0 {
        return Err(Error::Calibration(
            "fitted mapping is not strictly monotonic on the calibrated range".into(),
        ));
    }
    Ok(mapping)
}

/// Convenience: fit a mapping to simulated calibration points.
pub fn mapping_from_points(points: &[CalibrationPoint]) -> Result<ChargeRatioMapping> {
    let charge: Vec<Estimate> = points.iter().map(|p| p.charge_ratio).collect();
    let counts: Vec<Estimate> = points.iter().map(|p| p.count_ratio).collect();
    calibrate_charge_ratio_mapping(&charge, &counts)
}

/// Count ratio (NV⁻ over NV⁰ channel) in the without-π signal window.
pub fn signal_count_ratio(trace: &RelaxometryTrace, tau_index: usize) -> Result<Estimate> {
    let m = trace.cell(Half::WithoutPi, tau_index, WindowLabel::Signal, Channel::Minus)?;
    let z = trace.cell(Half::WithoutPi, tau_index, WindowLabel::Signal, Channel::Zero)?;
    if !(z.mean > 0.0) {
        return Err(Error::DegenerateTrace(format!(
            "NV0 signal counts are {} at tau index {tau_index}",
            z.mean
        )));
    }
    Ok(ratio(
        Estimate::new(m.mean, trace.sem(m)),
        Estimate::new(z.mean, trace.sem(z)),
    ))
}

/// `[NV⁻]/[NV⁰]` at the last τ divided by the same ratio at the first τ.
pub fn ratio_increase_statistic(trace: &RelaxometryTrace, mapping: &ChargeRatioMapping) -> Result<Estimate> {
    let last = trace.taus.len().checked_sub(1).ok_or_else(|| Error::Structure("empty trace".into()))?;
    let xf = signal_count_ratio(trace, 0)?;
    let xl = signal_count_ratio(trace, last)?;
    mapping.check_range(xf.value)?;
    mapping.check_range(xl.value)?;
    let (yf, yl) = (mapping.eval(xf.value), mapping.eval(xl.value));
    if !(yf > 0.0) {
        return Err(Error::Calibration(format!("mapped first-tau charge ratio {yf} is not positive")));
    }
    let q = yl / yf;
    // Both mapped values share the fit parameters.
    let (gf, gl) = (mapping.param_gradient(xf.value), mapping.param_gradient(xl.value));
    let mut g = [0.0; 3];
    for k in 0..3 {
        g[k] = gl[k] / yf - yl * gf[k] / (yf * yf);
    }
    let var_fit = quad(&g, &mapping.fit.covariance, &g);
    let var_x = (mapping.slope(xl.value) * xl.std_error / yf).powi(2)
        + (yl * mapping.slope(xf.value) * xf.std_error / (yf * yf)).powi(2);
    Ok(Estimate::new(q, (var_fit + var_x).max(0.0).sqrt()))
}

/// Ground truth for [`ratio_increase_statistic`] from the simulator's
/// window-averaged NV⁻ fractions.
pub fn true_ratio_increase(trace: &RelaxometryTrace) -> Result<f64> {
    let data = trace.half(Half::WithoutPi)?;
    let s = WindowLabel::Signal.index();
    let r = |n: f64| n / (1.0 - n);
    let first = data.true_n_minus.first().ok_or_else(|| Error::Structure("empty trace".into()))?[s];
    let last = data.true_n_minus.last().expect("non-empty")[s];
    Ok(r(last) / r(first))
}
