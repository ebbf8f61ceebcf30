//! Weighted least squares: the Levenberg-Marquardt engine and the concrete
//! model fits built on it.

mod linear;
mod lm;
mod models;

pub use linear::{weighted_constant_fit, weighted_linear_fit};
pub use lm::{levenberg_marquardt, numeric_gradient, Model, ModelSpec, Tolerances};
pub use models::{BiExp, Lorentzian, MonoExp, PowerLaw, T1TemperatureLaw};

use crate::error::{Error, Result};
use crate::model::FitResult;
use lm::check_data;

fn ascending(t: &[f64]) -> Result<()> {
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("abscissa must be strictly ascending"));
    }
    Ok(())
}

/// Heuristic start for `A e^{-t/T} + y0`: offset at the extreme the curve
/// approaches, then a log-linear regression on the remainder.
fn monoexp_start(t: &[f64], y: &[f64]) -> [f64; 3] {
    let n = y.len();
    let q = (n / 4).max(1);
    let head = y[..q].iter().sum::<f64>() / q as f64;
    let tail = y[n - q..].iter().sum::<f64>() / q as f64;
    let decaying = head >= tail;
    let (y0, sign) = if decaying {
        (y.iter().cloned().fold(f64::INFINITY, f64::min), 1.0)
    } else {
        (y.iter().cloned().fold(f64::NEG_INFINITY, f64::max), -1.0)
    };
    let span = (t[n - 1] - t[0]).max(f64::MIN_POSITIVE);
    let z: Vec<f64> = y.iter().map(|v| (v - y0).abs()).collect();
    let zmax = z.iter().cloned().fold(0.0, f64::max);
    if zmax == 0.0 {
        return [0.0, span, y0];
    }
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        if z[i] > 0.1 * zmax {
            let ly = z[i].ln();
            sx += t[i];
            sy += ly;
            sxx += t[i] * t[i];
            sxy += t[i] * ly;
            m += 1.0;
        }
    }
    let den = m * sxx - sx * sx;
    let slope = if m >= 2.0 && den > 0.0 {
        (m * sxy - sx * sy) / den
    } else {
        f64::NAN
    };
    let tau = if slope < 0.0 && slope.is_finite() {
        -1.0 / slope
    } else {
        span / 3.0
    };
    let amp = sign * zmax * (t[z.iter().position(|v| *v == zmax).unwrap_or(0)] / tau).exp();
    [amp, tau, y0]
}

fn time_constant_floor(t: &[f64]) -> f64 {
    let min_dt = t.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    (min_dt * 1e-3).max(1e-300)
}

/// `y = A e^{-t/T} + y0`, parameters `[amplitude, time_constant, offset]`.
pub fn fit_monoexp(t: &[f64], y: &[f64], sigma: &[f64]) -> Result<FitResult> {
    check_data(t, y, sigma)?;
    if t.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "monoexponential fit needs at least 4 points, got {}",
            t.len()
        )));
    }
    ascending(t)?;
    let start = monoexp_start(t, y);
    let spec = ModelSpec::unbounded(start.to_vec()).with_bounds(1, time_constant_floor(t), f64::INFINITY);
    let mut fit = levenberg_marquardt(&MonoExp, t, y, sigma, &spec)?;
    if fit.std_errors[1] / fit.params[1] > 10.0 {
        fit.warnings
            .push("time constant unidentifiable (std_error/T > 10)".into());
    }
    Ok(fit)
}

/// `y = A e^{-t/T1} + B e^{-t/T2} + C` reported with `T1 < T2`.
pub fn fit_biexp(t: &[f64], y: &[f64], sigma: &[f64]) -> Result<FitResult> {
    check_data(t, y, sigma)?;
    if t.len() < 7 {
        return Err(Error::InsufficientData(format!(
            "biexponential fit needs at least 7 points, got {}",
            t.len()
        )));
    }
    ascending(t)?;
    let (t_lo, t_hi) = (t[0], t[t.len() - 1]);
    if !(t_lo > 0.0 && t_hi >= 100.0 * t_lo) {
        return Err(Error::InsufficientData(
            "biexponential fit needs t > 0 spanning at least 2 decades".into(),
        ));
    }
    let t_mid = (t_lo * t_hi).sqrt();
    let floor = time_constant_floor(t);

    let mut starts = Vec::new();
    if let Some(s) = biexp_split_start(t, y, sigma, t_mid) {
        starts.push(s);
    }
    // Fallback starts bracketing the split point.
    let range = y[0] - y[y.len() - 1];
    for (f1, f2) in [(0.1, 3.0), (0.03, 1.0), (0.3, 10.0)] {
        starts.push([0.5 * range, f1 * t_mid, 0.5 * range, f2 * t_mid, y[y.len() - 1]]);
    }

    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for s in starts {
        let spec = ModelSpec::unbounded(s.to_vec())
            .with_bounds(1, floor, f64::INFINITY)
            .with_bounds(3, floor, f64::INFINITY);
        match levenberg_marquardt(&BiExp, t, y, sigma, &spec) {
            Ok(f) => {
                if best.as_ref().is_none_or(|b| f.chi_squared < b.chi_squared) {
                    best = Some(f);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some(mut fit) = best else {
        return Err(last_err.expect("at least one start was tried"));
    };
    order_components(&mut fit);
    let ratio = fit.params[1] / fit.params[3];
    if (0.8..=1.25).contains(&ratio) {
        fit.warnings.push(format!(
            "near-degenerate time constants (T1/T2 = {ratio:.3}); effectively monoexponential"
        ));
    }
    for (amp, tc, label) in [(0, 1, "first"), (2, 3, "second")] {
        let (a, sa) = (fit.params[amp], fit.std_errors[amp]);
        if !(a.abs() > sa) || !fit.std_errors[tc].is_finite() {
            fit.warnings
                .push(format!("{label} component not resolved (amplitude {a:.3e} ± {sa:.3e})"));
        }
    }
    Ok(fit)
}

/// Late half fitted alone, then the early half after subtracting it.
fn biexp_split_start(t: &[f64], y: &[f64], sigma: &[f64], t_mid: f64) -> Option<[f64; 5]> {
    let k = t.iter().position(|v| *v >= t_mid)?;
    if t.len() - k < 4 || k < 3 {
        return None;
    }
    let late = fit_monoexp(&t[k..], &y[k..], &sigma[k..]).ok()?;
    let (b, t2, c) = (late.params[0], late.params[1], late.params[2]);
    let early_y: Vec<f64> = (0..k).map(|i| y[i] - b * (-t[i] / t2).exp() - c).collect();
    let kk = k.max(4).min(t.len());
    let early_y: Vec<f64> = (0..kk)
        .map(|i| if i < k { early_y[i] } else { y[i] - b * (-t[i] / t2).exp() - c })
        .collect();
    let early = fit_monoexp(&t[..kk], &early_y, &sigma[..kk]).ok()?;
    let (a, t1) = (early.params[0], early.params[1]);
    if !(t1 < t2) {
        return None;
    }
    Some([a, t1, b, t2, c])
}

/// Swaps the two components so that `time_constant1 < time_constant2`.
fn order_components(fit: &mut FitResult) {
    if fit.params[1] <= fit.params[3] {
        return;
    }
    let perm = [2, 3, 0, 1, 4];
    let p = fit.params.clone();
    let s = fit.std_errors.clone();
    let c = fit.covariance.clone();
    for i in 0..5 {
        fit.params[i] = p[perm[i]];
        fit.std_errors[i] = s[perm[i]];
        for k in 0..5 {
            fit.covariance[i][k] = c[perm[i]][perm[k]];
        }
    }
}

/// `y = a x^n + c` with `n` held in `[0.1, 5]`.
pub fn fit_power_law(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<FitResult> {
    check_data(x, y, sigma)?;
    if x.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs at least 4 points, got {}",
            x.len()
        )));
    }
    if x.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::domain("power-law fit needs x > 0"));
    }
    // Start from the best exponent on a grid, solving (a, c) linearly.
    let mut best = (f64::INFINITY, [1.0, 1.0, 0.0]);
    for step in 0..=98 {
        let n = 0.1 + 0.05 * step as f64;
        let xn: Vec<f64> = x.iter().map(|v| v.powf(n)).collect();
        if let Ok(f) = weighted_linear_fit(&xn, y, sigma) {
            if f.chi_squared < best.0 {
                best = (f.chi_squared, [f.params[0], n, f.params[1]]);
            }
        }
    }
    let spec = ModelSpec::unbounded(best.1.to_vec()).with_bounds(1, 0.1, 5.0);
    levenberg_marquardt(&PowerLaw, x, y, sigma, &spec)
}

/// Fits `A1` in the phonon relaxation law with the other constants fixed.
/// Closed form: the weighted mean of `inv_t1` minus the fixed terms.
pub fn fit_t1_temperature_model(
    temps: &[f64],
    inv_t1: &[f64],
    sigma: &[f64],
    law: &T1TemperatureLaw,
) -> Result<FitResult> {
    check_data(temps, inv_t1, sigma)?;
    if temps.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "temperature-law fit needs at least 2 temperatures, got {}",
            temps.len()
        )));
    }
    if !(law.a2 >= 0.0 && law.a3 >= 0.0 && law.delta > 0.0 && law.boltzmann_k > 0.0) {
        return Err(Error::domain("fixed constants must be a2, a3 >= 0 and delta, k > 0"));
    }
    if temps.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::domain("temperatures must be > 0"));
    }
    let resid: Vec<f64> = temps
        .iter()
        .zip(inv_t1)
        .map(|(t, r)| r - law.phonon_terms(*t))
        .collect();
    let mut fit = weighted_constant_fit(&resid, sigma)?;
    fit.model = law.id().to_string();
    fit.names = vec!["a1".into()];
    Ok(fit)
}
