use std::collections::BTreeMap;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::basis::BasisSet;
use crate::error::{Error, Result};
use crate::model::{Estimate, FitResult, FitStatus, Spectrum};

/// Fractional contributions of the two basis functions to a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub c_minus: f64,
    pub c_zero: f64,
    /// Standard error of `c_minus` (equal to that of `c_zero`).
    pub c_std_error: f64,
    /// counts/s
    pub residual_rms: f64,
    /// Weights `[w_minus, w_zero]`: integrated component intensities.
    pub fit: FitResult,
}

impl Decomposition {
    pub fn w_minus(&self) -> Estimate {
        self.fit.estimate(0)
    }

    pub fn w_zero(&self) -> Estimate {
        self.fit.estimate(1)
    }
}

/// Nonnegative least squares of the spectrum against both basis functions.
pub fn decompose(spectrum: &Spectrum, basis: &BasisSet) -> Result<Decomposition> {
    spectrum.validate()?;
    if spectrum.wavelengths.len() != basis.len()
        || spectrum
            .wavelengths
            .iter()
            .zip(&basis.wavelength_grid)
            .any(|(a, b)| (a - b).abs() > 1e-9 * b.abs())
    {
        return Err(Error::Shape("spectrum is not on the basis grid".into()));
    }
    let y = &spectrum.intensities;
    if y.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateInput("spectrum is identically zero".into()));
    }
    let (bm, bz) = (&basis.basis_minus, &basis.basis_zero);
    let n = y.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let ata = Matrix2::new(dot(bm, bm), dot(bm, bz), dot(bm, bz), dot(bz, bz));
    let aty = Vector2::new(dot(bm, y), dot(bz, y));

    let inv = ata
        .try_inverse()
        .ok_or_else(|| Error::DegenerateBasis("basis functions are linearly dependent".into()))?;
    let mut w = inv * aty;
    // Active set for two variables: drop whichever goes negative.
    if w[0] < 0.0 || w[1] < 0.0 {
        let only_minus = Vector2::new((aty[0] / ata[(0, 0)]).max(0.0), 0.0);
        let only_zero = Vector2::new(0.0, (aty[1] / ata[(1, 1)]).max(0.0));
        let rss = |w: &Vector2<f64>| -> f64 {
            (0..n).map(|i| (y[i] - w[0] * bm[i] - w[1] * bz[i]).powi(2)).sum()
        };
        w = if rss(&only_minus) <= rss(&only_zero) {
            only_minus
        } else {
            only_zero
        };
    }
    let rss: f64 = (0..n).map(|i| (y[i] - w[0] * bm[i] - w[1] * bz[i]).powi(2)).sum();
    let total = w[0] + w[1];
    if !(total > 0.0) {
        return Err(Error::DegenerateInput("no positive basis weight fits the spectrum".into()));
    }
    let dof = n.saturating_sub(2).max(1);
    let s2 = rss / dof as f64;
    let cov_m = inv * s2;
    let covariance = vec![
        vec![cov_m[(0, 0)], cov_m[(0, 1)]],
        vec![cov_m[(1, 0)], cov_m[(1, 1)]],
    ];
    let c_minus = w[0] / total;
    let c_zero = 1.0 - c_minus;
    // ∂c₋/∂w₋ = w₀/S², ∂c₋/∂w₀ = -w₋/S².
    let g = Vector2::new(w[1] / (total * total), -w[0] / (total * total));
    let var_c = (g.transpose() * cov_m * g)[(0, 0)].max(0.0);
    let c_std_error = var_c.sqrt().max(1e-12 * c_minus.abs());
    let mut fit = FitResult::from_parts(
        "two_component_nnls",
        &["w_minus", "w_zero"],
        vec![w[0], w[1]],
        covariance,
        rss,
        dof,
        0,
        FitStatus::Exact,
    );
    for (i, wi) in [w[0], w[1]].into_iter().enumerate() {
        fit.std_errors[i] = fit.std_errors[i].max(1e-12 * wi.abs());
    }
    Ok(Decomposition {
        c_minus,
        c_zero,
        c_std_error,
        residual_rms: (rss / n as f64).sqrt(),
        fit,
    })
}

/// `[NV⁻] = c₋ / (c₋ + κ c₀)` with first-order propagation of the
/// decomposition and κ errors.
pub fn nv_minus_fraction(dec: &Decomposition, kappa: Estimate) -> Result<Estimate> {
    if !(kappa.value > 0.0) {
        return Err(Error::domain(format!("kappa must be > 0, got {}", kappa.value)));
    }
    let (cm, c0) = (dec.c_minus, dec.c_zero);
    if cm == 0.0 && c0 == 0.0 {
        return Err(Error::domain("c_minus and c_zero are both zero"));
    }
    let k = kappa.value;
    let den = cm + k * c0;
    let f = cm / den;
    // c₀ = 1 - c₋, so d f/d c₋ = κ / den².
    let dc = k / (den * den);
    let dk = -cm * c0 / (den * den);
    let sigma = ((dc * dec.c_std_error).powi(2) + (dk * kappa.std_error).powi(2)).sqrt();
    Ok(Estimate::new(f.clamp(0.0, 1.0), sigma))
}

/// Population variance of a set of fractions.
pub fn fraction_variance(fractions: &[f64]) -> Result<f64> {
    if fractions.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "variance needs at least 2 temperatures, got {}",
            fractions.len()
        )));
    }
    // Shifted by the first value so identical inputs give exactly zero.
    let n = fractions.len() as f64;
    let d: Vec<f64> = fractions.iter().map(|f| f - fractions[0]).collect();
    let mean = d.iter().sum::<f64>() / n;
    Ok(d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
}

/// Cross-temperature variance for every power in `(power, temperature,
/// fraction)` rows. Powers are matched exactly; output is sorted by power.
pub fn fraction_variance_by_power(rows: &[(f64, f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for &(p, _, f) in rows {
        if !(p >= 0.0) {
            return Err(Error::domain(format!("power must be >= 0, got {p}")));
        }
        groups.entry(p.to_bits()).or_default().push(f);
    }
    groups
        .into_iter()
        .map(|(bits, fs)| Ok((f64::from_bits(bits), fraction_variance(&fs)?)))
        .collect()
}
