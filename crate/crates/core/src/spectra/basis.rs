use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{trapezoid, Spectrum};

/// Area-normalized NV⁻ and NV⁰ basis functions on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSet {
    pub wavelength_grid: Vec<f64>,
    pub basis_minus: Vec<f64>,
    pub basis_zero: Vec<f64>,
    pub delta0: f64,
    pub delta_minus: f64,
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.wavelength_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelength_grid.is_empty()
    }
}

fn area_normalized(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let a = trapezoid(x, y);
    if !(a > 0.0) {
        return Err(Error::DegenerateBasis("spectrum has no positive area".into()));
    }
    Ok(y.iter().map(|v| v / a).collect())
}

/// `y - delta·z` with negative values clipped, then area-normalized.
fn subtract_normalize(x: &[f64], y: &[f64], z: &[f64], delta: f64, what: &str) -> Result<Vec<f64>> {
    let d: Vec<f64> = y.iter().zip(z).map(|(a, b)| (a - delta * b).max(0.0)).collect();
    if d.iter().all(|v| *v <= 0.0) {
        return Err(Error::DegenerateBasis(format!(
            "{what} basis is nowhere positive after subtracting delta = {delta}"
        )));
    }
    area_normalized(x, &d)
}

fn check_delta(name: &str, delta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::domain(format!("{name} must lie in [0, 1), got {delta}")));
    }
    Ok(())
}

/// Builds the basis from a high-power (NV⁰-rich) and a low-power (NV⁻-rich)
/// reference spectrum:
/// `I₋ = norm(Î₋ - δ₀ Î₀)`, `I₀ = norm(Î₀ - δ₋ I₋)`.
pub fn build_basis(i0_pre: &Spectrum, i_minus_pre: &Spectrum, delta0: f64, delta_minus: f64) -> Result<BasisSet> {
    i0_pre.validate()?;
    i_minus_pre.validate()?;
    if !i0_pre.same_grid(i_minus_pre) {
        return Err(Error::Shape("reference spectra are on different wavelength grids".into()));
    }
    check_delta("delta0", delta0)?;
    check_delta("delta_minus", delta_minus)?;
    let x = &i0_pre.wavelengths;
    let zero_hat = area_normalized(x, &i0_pre.intensities)?;
    let minus_hat = area_normalized(x, &i_minus_pre.intensities)?;
    let basis_minus = subtract_normalize(x, &minus_hat, &zero_hat, delta0, "NV-")?;
    let basis_zero = subtract_normalize(x, &zero_hat, &basis_minus, delta_minus, "NV0")?;
    Ok(BasisSet {
        wavelength_grid: x.clone(),
        basis_minus,
        basis_zero,
        delta0,
        delta_minus,
    })
}

/// Grid step of the δ search.
pub const DELTA_STEP: f64 = 0.005;

/// Largest δ the search considers.
pub const DELTA_MAX: f64 = 0.9;

/// Sum of squares of `y - δ z` over the window. Not clipped: clipping
/// would make over-subtraction free.
fn window_residual(x: &[f64], y: &[f64], z: &[f64], delta: f64, window: (f64, f64)) -> f64 {
    x.iter()
        .zip(y.iter().zip(z))
        .filter(|(l, _)| **l >= window.0 && **l <= window.1)
        .map(|(_, (a, b))| (a - delta * b).powi(2))
        .sum()
}

/// Minimizes the in-window residual over δ ∈ [0, 0.9]: grid search at
/// [`DELTA_STEP`], refined by the exact quadratic minimizer when it falls
/// inside the neighbouring grid cells.
fn optimize_one(x: &[f64], y: &[f64], z: &[f64], window: (f64, f64)) -> Result<f64> {
    let inside: Vec<usize> = (0..x.len()).filter(|&i| x[i] >= window.0 && x[i] <= window.1).collect();
    if inside.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "residual window [{}, {}] nm holds fewer than 2 samples",
            window.0, window.1
        )));
    }
    let steps = (DELTA_MAX / DELTA_STEP).round() as usize;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=steps {
        let d = k as f64 * DELTA_STEP;
        let r = window_residual(x, y, z, d, window);
        if r < best.0 {
            best = (r, d);
        }
    }
    let (syz, szz) = inside
        .iter()
        .fold((0.0, 0.0), |(a, b), &i| (a + y[i] * z[i], b + z[i] * z[i]));
    if szz > 0.0 {
        let exact = syz / szz;
        if (exact - best.1).abs() <= DELTA_STEP && (0.0..=DELTA_MAX).contains(&exact) {
            let r = window_residual(x, y, z, exact, window);
            if r <= best.0 {
                best = (r, exact);
            }
        }
    }
    Ok(best.1)
}

/// Chooses δ₀ to minimize the NV⁰-band (`zero_window`) content of the NV⁻
/// basis, then δ₋ to minimize the NV⁻-band (`minus_window`) content of the
/// NV⁰ basis.
pub fn optimize_delta(
    i0_pre: &Spectrum,
    i_minus_pre: &Spectrum,
    zero_window: (f64, f64),
    minus_window: (f64, f64),
) -> Result<(f64, f64)> {
    if !i0_pre.same_grid(i_minus_pre) {
        return Err(Error::Shape("reference spectra are on different wavelength grids".into()));
    }
    let x = &i0_pre.wavelengths;
    let zero_hat = area_normalized(x, &i0_pre.intensities)?;
    let minus_hat = area_normalized(x, &i_minus_pre.intensities)?;
    let delta0 = optimize_one(x, &minus_hat, &zero_hat, zero_window)?;
    let basis_minus = subtract_normalize(x, &minus_hat, &zero_hat, delta0, "NV-")?;
    let delta_minus = optimize_one(x, &zero_hat, &basis_minus, minus_window)?;
    Ok((delta0, delta_minus))
}
