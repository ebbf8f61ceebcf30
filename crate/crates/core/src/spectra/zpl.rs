use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{levenberg_marquardt, Lorentzian, ModelSpec};
use crate::model::{Estimate, FitResult, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZplComponent {
    NvMinus,
    NvZero,
}

impl ZplComponent {
    /// Nominal room-temperature ZPL position (nm).
    pub fn nominal_center(self) -> f64 {
        match self {
            ZplComponent::NvMinus => 639.0,
            ZplComponent::NvZero => 575.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZplFit {
    pub center: Estimate,
    pub fwhm: Estimate,
    pub amplitude: Estimate,
    /// Baseline level at the window center.
    pub baseline: Estimate,
    pub fit: FitResult,
}

/// Lorentzian-plus-linear-baseline fit of the ZPL inside `window` (nm).
pub fn fit_zpl(spectrum: &Spectrum, window: (f64, f64), component: ZplComponent) -> Result<ZplFit> {
    spectrum.validate()?;
    let (lo, hi) = window;
    let nominal = component.nominal_center();
    if !(lo < nominal && nominal < hi) {
        return Err(Error::domain(format!(
            "window [{lo}, {hi}] nm does not contain the nominal ZPL at {nominal} nm"
        )));
    }
    let idx: Vec<usize> = (0..spectrum.len())
        .filter(|&i| spectrum.wavelengths[i] >= lo && spectrum.wavelengths[i] <= hi)
        .collect();
    if idx.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "ZPL window holds {} samples, need at least 8",
            idx.len()
        )));
    }
    let x: Vec<f64> = idx.iter().map(|&i| spectrum.wavelengths[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| spectrum.intensities[i]).collect();
    // Shot-noise-like weights with a floor so empty bins keep finite weight.
    let floor = y.iter().cloned().fold(0.0, f64::max) * 1e-6 + 1e-12;
    let sigma: Vec<f64> = y.iter().map(|v| v.abs().sqrt().max(floor.sqrt())).collect();

    let x_ref = 0.5 * (lo + hi);
    let model = Lorentzian { x_ref };
    let n = x.len();
    let k = (n / 8).max(1);
    let left = y[..k].iter().sum::<f64>() / k as f64;
    let right = y[n - k..].iter().sum::<f64>() / k as f64;
    let xl = x[..k].iter().sum::<f64>() / k as f64;
    let xr = x[n - k..].iter().sum::<f64>() / k as f64;
    let b1 = (right - left) / (xr - xl);
    let base = |v: f64| left + b1 * (v - xl);
    let (peak_i, peak) = x
        .iter()
        .zip(&y)
        .enumerate()
        .map(|(i, (xv, yv))| (i, yv - base(*xv)))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let half = 0.5 * peak;
    let mut l = peak_i;
    while l > 0 && y[l] - base(x[l]) > half {
        l -= 1;
    }
    let mut r = peak_i;
    while r < n - 1 && y[r] - base(x[r]) > half {
        r += 1;
    }
    let width = (x[r] - x[l]).max(1e-3);
    let start = vec![peak, x[peak_i], width, base(x_ref), b1];
    let spec = ModelSpec::unbounded(start)
        .with_bounds(1, lo, hi)
        .with_bounds(2, 1e-4, hi - lo);
    let fit = levenberg_marquardt(&model, &x, &y, &sigma, &spec)?;
    let center = fit.estimate(1);
    if !(center.value > lo && center.value < hi) {
        return Err(Error::Fit {
            model: "lorentzian".into(),
            reason: format!("center {} nm ended on the window edge", center.value),
            iterations: fit.iterations,
            last_cost: fit.chi_squared,
        });
    }
    Ok(ZplFit {
        center,
        fwhm: fit.estimate(2),
        amplitude: fit.estimate(0),
        baseline: fit.estimate(3),
        fit,
    })
}
