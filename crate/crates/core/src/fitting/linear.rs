use crate::error::{Error, Result};
use crate::model::{FitResult, FitStatus};

use super::lm::check_data;

/// Inverse-variance weighted straight line `y = slope x + intercept`.
/// Parameters are ordered `[slope, intercept]`.
///
/// `sigma` sets relative weights: the covariance is scaled by the reduced
/// chi², so data lying exactly on a line get zero errors.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<FitResult> {
    check_data(x, y, sigma)?;
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "linear fit needs at least 2 points, got {}",
            x.len()
        )));
    }
    if x.iter().all(|v| *v == x[0]) {
        return Err(Error::SingularDesign("all x values are identical".into()));
    }
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.len() {
        let dx = x[i] - xm;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * (y[i] - ym);
    }
    if !(sxx > 0.0) {
        return Err(Error::SingularDesign("x values have no weighted spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let chi2: f64 = (0..x.len())
        .map(|i| w[i] * (y[i] - slope * x[i] - intercept).powi(2))
        .sum();
    let dof = (x.len() - 2).max(1);
    let f = chi2 / dof as f64;
    let cov = vec![
        vec![f / sxx, -f * xm / sxx],
        vec![-f * xm / sxx, f * (1.0 / sw + xm * xm / sxx)],
    ];
    Ok(FitResult::from_parts(
        "linear",
        &["slope", "intercept"],
        vec![slope, intercept],
        cov,
        chi2,
        dof,
        0,
        FitStatus::Exact,
    ))
}

/// Weighted mean as a one-parameter fit (`y = constant`).
pub fn weighted_constant_fit(y: &[f64], sigma: &[f64]) -> Result<FitResult> {
    check_data(y, y, sigma)?;
    if y.is_empty() {
        return Err(Error::InsufficientData("constant fit needs at least 1 point".into()));
    }
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    let sw: f64 = w.iter().sum();
    let mean = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let chi2: f64 = w.iter().zip(y).map(|(w, y)| w * (y - mean).powi(2)).sum();
    let dof = y.len().saturating_sub(1).max(1);
    let f = (chi2 / dof as f64).max(1.0);
    Ok(FitResult::from_parts(
        "constant",
        &["value"],
        vec![mean],
        vec![vec![f / sw]],
        chi2,
        dof,
        0,
        FitStatus::Exact,
    ))
}
