use serde::{Deserialize, Serialize};

use super::basis::BasisSet;
use super::decompose::{decompose, Decomposition};
use crate::error::{Error, Result};
use crate::fitting::weighted_linear_fit;
use crate::model::{Estimate, FitResult, Spectrum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub kappa: Estimate,
    /// Weighted linear fit of the NV⁻ component intensity against power.
    pub fit_minus: FitResult,
    pub fit_zero: FitResult,
}

/// κ as the quotient of the power slopes of the integrated NV⁻ and NV⁰
/// component intensities, `slope₋ / slope₀`.
///
/// The quotient equals the per-center photoluminescence ratio only when
/// the series has equal NV⁻ and NV⁰ populations.
pub fn estimate_kappa(series: &[(f64, Spectrum)], basis: &BasisSet) -> Result<KappaEstimate> {
    let mut distinct: Vec<f64> = series.iter().map(|(p, _)| *p).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "kappa estimation needs at least 3 distinct powers, got {}",
            distinct.len()
        )));
    }
    let decs: Vec<Decomposition> = series
        .iter()
        .map(|(_, s)| decompose(s, basis))
        .collect::<Result<_>>()?;
    let powers: Vec<f64> = series.iter().map(|(p, _)| *p).collect();
    let column = |f: fn(&Decomposition) -> Estimate| -> (Vec<f64>, Vec<f64>) {
        decs.iter().map(f).map(|e| (e.value, e.std_error)).unzip()
    };
    let (im, sm) = column(Decomposition::w_minus);
    let (iz, sz) = column(Decomposition::w_zero);
    let fit_minus = weighted_linear_fit(&powers, &im, &sm)?;
    let fit_zero = weighted_linear_fit(&powers, &iz, &sz)?;
    let (s_m, s_z) = (fit_minus.estimate(0), fit_zero.estimate(0));
    if !(s_z.value > 0.0) {
        return Err(Error::DegenerateCalibration(format!(
            "NV0 intensity slope is {} (must be > 0)",
            s_z.value
        )));
    }
    let k = s_m.value / s_z.value;
    let rel = (s_m.relative_error().powi(2) + s_z.relative_error().powi(2)).sqrt();
    Ok(KappaEstimate {
        kappa: Estimate::new(k, k.abs() * rel),
        fit_minus,
        fit_zero,
    })
}
