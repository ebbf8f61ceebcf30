//! Dataset-level charge-state analysis: δ optimization across temperatures,
//! per-temperature bases and κ, and the fraction table.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{build_basis, optimize_delta, BasisSet};
use super::decompose::{decompose, fraction_variance_by_power, nv_minus_fraction};
use super::kappa::{estimate_kappa, KappaEstimate};
use super::synth::{simulate_kappa_series, simulate_references, simulate_steady_state_spectrum, SpectralModel};
use crate::config::PhysicsConfig;
use crate::error::{Error, Result};
use crate::model::{Estimate, Spectrum};

/// Everything recorded at one temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureSpectra {
    pub temperature: f64,
    /// High-power, NV⁰-rich reference.
    pub i0_pre: Spectrum,
    /// Low-power, NV⁻-rich reference.
    pub i_minus_pre: Spectrum,
    /// κ calibration series; may be empty if κ is supplied externally.
    pub kappa_series: Vec<(f64, Spectrum)>,
    pub samples: Vec<Spectrum>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionRow {
    pub power: f64,
    pub temperature: f64,
    pub c_minus: f64,
    pub c_zero: f64,
    pub fraction: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaRow {
    pub temperature: f64,
    pub estimate: KappaEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetAnalysis {
    /// Mean of the per-temperature optima.
    pub delta0: f64,
    pub delta_minus: f64,
    pub kappa_by_temperature: Vec<KappaRow>,
    /// Inverse-variance mean of the per-temperature κ, used for fractions.
    pub kappa: Estimate,
    pub fractions: Vec<FractionRow>,
    /// `(power, variance across temperatures)`, ascending in power.
    pub variance: Vec<(f64, f64)>,
}

/// Runs the full chain. If `kappa` is given, the calibration series are
/// ignored and that value is used instead.
pub fn analyze_dataset(
    data: &[TemperatureSpectra],
    zero_window: (f64, f64),
    minus_window: (f64, f64),
    kappa: Option<Estimate>,
) -> Result<DatasetAnalysis> {
    if data.is_empty() {
        return Err(Error::InsufficientData("no temperatures in dataset".into()));
    }
    let deltas: Vec<(f64, f64)> = data
        .par_iter()
        .map(|d| optimize_delta(&d.i0_pre, &d.i_minus_pre, zero_window, minus_window))
        .collect::<Result<_>>()?;
    let n = deltas.len() as f64;
    let delta0 = deltas.iter().map(|d| d.0).sum::<f64>() / n;
    let delta_minus = deltas.iter().map(|d| d.1).sum::<f64>() / n;
    let bases: Vec<BasisSet> = data
        .par_iter()
        .map(|d| build_basis(&d.i0_pre, &d.i_minus_pre, delta0, delta_minus))
        .collect::<Result<_>>()?;

    let (kappa_by_temperature, kappa) = match kappa {
        Some(k) => (Vec::new(), k),
        None => {
            let rows: Vec<KappaRow> = data
                .par_iter()
                .zip(&bases)
                .map(|(d, b)| {
                    Ok(KappaRow {
                        temperature: d.temperature,
                        estimate: estimate_kappa(&d.kappa_series, b)?,
                    })
                })
                .collect::<Result<_>>()?;
            let pooled = inverse_variance_mean(rows.iter().map(|r| r.estimate.kappa))?;
            (rows, pooled)
        }
    };

    let per_t: Vec<Vec<FractionRow>> = data
        .par_iter()
        .zip(&bases)
        .map(|(d, b)| {
            d.samples
                .iter()
                .map(|s| {
                    let dec = decompose(s, b)?;
                    Ok(FractionRow {
                        power: s.laser_power,
                        temperature: d.temperature,
                        c_minus: dec.c_minus,
                        c_zero: dec.c_zero,
                        fraction: nv_minus_fraction(&dec, kappa)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut fractions: Vec<FractionRow> = per_t.into_iter().flatten().collect();
    fractions.sort_by(|a, b| a.power.total_cmp(&b.power).then(a.temperature.total_cmp(&b.temperature)));
    let variance = if data.len() >= 2 {
        let triples: Vec<(f64, f64, f64)> = fractions
            .iter()
            .map(|r| (r.power, r.temperature, r.fraction.value))
            .collect();
        fraction_variance_by_power(&triples)?
    } else {
        Vec::new()
    };
    Ok(DatasetAnalysis {
        delta0,
        delta_minus,
        kappa_by_temperature,
        kappa,
        fractions,
        variance,
    })
}

fn inverse_variance_mean(values: impl Iterator<Item = Estimate>) -> Result<Estimate> {
    let (mut sw, mut swx, mut count, mut plain) = (0.0, 0.0, 0usize, 0.0);
    for e in values {
        count += 1;
        plain += e.value;
        if e.std_error > 0.0 && e.std_error.is_finite() {
            let w = e.std_error.powi(-2);
            sw += w;
            swx += w * e.value;
        }
    }
    if count == 0 {
        return Err(Error::InsufficientData("no kappa estimates".into()));
    }
    if sw > 0.0 {
        Ok(Estimate::new(swx / sw, sw.powf(-0.5)))
    } else {
        Ok(Estimate::exact(plain / count as f64))
    }
}

/// The default dataset: references, κ series and steady-state spectra for
/// every configured temperature and power.
pub fn simulate_dataset(
    model: &SpectralModel,
    physics: &PhysicsConfig,
    temperatures: &[f64],
    powers: &[f64],
    seed: u64,
) -> Result<Vec<TemperatureSpectra>> {
    model.validate()?;
    temperatures
        .par_iter()
        .map(|&t| {
            let (i0_pre, i_minus_pre) = simulate_references(model, physics, t, seed)?;
            Ok(TemperatureSpectra {
                temperature: t,
                i0_pre,
                i_minus_pre,
                kappa_series: simulate_kappa_series(model, physics, t, seed)?,
                samples: powers
                    .iter()
                    .map(|&p| simulate_steady_state_spectrum(model, physics, p, t, seed))
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}
