use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::charge_ratio::{ratio_increase_statistic, true_ratio_increase, ChargeRatioMapping};
use super::evaluate::{all_optical_decay, pi_pulse_decay, recharge_decay, DecaySeries};
use super::trace::RelaxometryTrace;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::fitting::{fit_biexp, fit_monoexp, fit_t1_temperature_model, T1TemperatureLaw};
use crate::model::{Estimate, FitResult};
use crate::photophysics::{run_sequence_with, PulseSequence, SimulationOptions};

#[derive(Debug, Clone, Default)]
pub struct ScanOptions {
    pub simulation: SimulationOptions,
    /// Enables the ratio-increase statistic.
    pub mapping: Option<ChargeRatioMapping>,
}

/// One row of the scan table. `None` marks an evaluation that was not run
/// or whose fit failed (see `failures`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub temperature: f64,
    pub inv_t1_pi: Option<Estimate>,
    pub inv_t1_optical: Option<Estimate>,
    pub inv_tr1: Option<Estimate>,
    pub inv_tr2: Option<Estimate>,
    pub ratio_increase: Option<Estimate>,
    pub true_ratio_increase: Option<f64>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureResult {
    pub row: ScanRow,
    /// Dark- and ND-corrected trace.
    pub trace: RelaxometryTrace,
    pub pi_curve: Option<DecaySeries>,
    pub optical_curve: Option<DecaySeries>,
    pub recharge_curve: Option<DecaySeries>,
    pub pi_fit: Option<FitResult>,
    pub optical_fit: Option<FitResult>,
    pub recharge_fit: Option<FitResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureScan {
    pub results: Vec<TemperatureResult>,
    /// A₁ from the π-pulse rates.
    pub a1_pi: Option<FitResult>,
    /// A₁ from the all-optical rates.
    pub a1_optical: Option<FitResult>,
    /// Mean of the available A₁ fits; the all-optical fit only counts below
    /// the recharge threshold.
    pub a1: Option<Estimate>,
}

impl TemperatureScan {
    pub fn rows(&self) -> impl Iterator<Item = &ScanRow> {
        self.results.iter().map(|r| &r.row)
    }

    pub fn failure_count(&self) -> usize {
        self.rows().filter(|r| !r.failures.is_empty()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "temperature_k,inv_t1_pi_per_s,inv_t1_pi_std,inv_t1_optical_per_s,inv_t1_optical_std,\
             inv_tr1_per_s,inv_tr1_std,inv_tr2_per_s,inv_tr2_std,ratio_increase,ratio_increase_std,status\n",
        );
        let cell = |e: &Option<Estimate>| match e {
            Some(e) => format!("{},{}", e.value, e.std_error),
            None => ",".to_string(),
        };
        for r in self.rows() {
            let status = if r.failures.is_empty() {
                "ok".to_string()
            } else {
                format!("\"failed: {}\"", r.failures.join("; ").replace('"', "'"))
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.temperature,
                cell(&r.inv_t1_pi),
                cell(&r.inv_t1_optical),
                cell(&r.inv_tr1),
                cell(&r.inv_tr2),
                cell(&r.ratio_increase),
                status
            );
        }
        out
    }
}

fn rate_from_time(fit: &FitResult, index: usize) -> Estimate {
    fit.estimate(index).recip()
}

fn evaluate_one(
    seq: &PulseSequence,
    config: &Config,
    temperature: f64,
    seed: u64,
    options: &ScanOptions,
) -> Result<TemperatureResult> {
    let raw = run_sequence_with(seq, &config.physics, &config.detector, temperature, seed, &options.simulation)?;
    let trace = raw.corrected(&config.detector)?;
    let mut row = ScanRow {
        temperature,
        inv_t1_pi: None,
        inv_t1_optical: None,
        inv_tr1: None,
        inv_tr2: None,
        ratio_increase: None,
        true_ratio_increase: None,
        failures: Vec::new(),
    };
    let mut failures = Vec::new();

    let mut pi_curve = None;
    let mut pi_fit = None;
    if trace.with_pi.is_some() {
        let curve = pi_pulse_decay(&trace)?;
        match fit_monoexp(&curve.taus, &curve.y, &curve.sigma) {
            Ok(f) => {
                row.inv_t1_pi = Some(rate_from_time(&f, 1));
                pi_fit = Some(f);
            }
            Err(e) => failures.push(row_failure("pi-pulse T1 fit", e)),
        }
        pi_curve = Some(curve);
    }

    let optical = all_optical_decay(&trace)?;
    let optical_fit = match fit_monoexp(&optical.taus, &optical.y, &optical.sigma) {
        Ok(f) => {
            row.inv_t1_optical = Some(rate_from_time(&f, 1));
            Some(f)
        }
        Err(e) => {
            failures.push(row_failure("all-optical T1 fit", e));
            None
        }
    };

    let mut recharge_curve = None;
    let mut recharge_fit = None;
    if trace.metadata.laser_power >= config.analysis.recharge_min_power {
        let curve = recharge_decay(&trace)?;
        match fit_biexp(&curve.taus, &curve.y, &curve.sigma) {
            Ok(f) => {
                row.inv_tr1 = Some(rate_from_time(&f, 1));
                row.inv_tr2 = Some(rate_from_time(&f, 3));
                recharge_fit = Some(f);
            }
            Err(e) => failures.push(row_failure("recharge fit", e)),
        }
        recharge_curve = Some(curve);
        if let Some(mapping) = &options.mapping {
            match ratio_increase_statistic(&trace, mapping) {
                Ok(s) => row.ratio_increase = Some(s),
                Err(e) => failures.push(row_failure("ratio-increase statistic", e)),
            }
            row.true_ratio_increase = true_ratio_increase(&trace).ok();
        }
    }
    row.failures = failures;
    Ok(TemperatureResult {
        row,
        trace,
        pi_curve,
        optical_curve: Some(optical),
        recharge_curve,
        pi_fit,
        optical_fit,
        recharge_fit,
    })
}

fn row_failure(what: &str, e: Error) -> String {
    format!("{what}: {e}")
}

/// Simulates, evaluates and fits every temperature, then fits A₁.
///
/// Per-temperature fit failures are recorded in the rows; simulation or
/// structural errors abort the scan.
pub fn temperature_scan(
    seq: &PulseSequence,
    config: &Config,
    temps: &[f64],
    seed: u64,
    options: &ScanOptions,
) -> Result<TemperatureScan> {
    if temps.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "temperature scan needs at least 2 temperatures, got {}",
            temps.len()
        )));
    }
    for t in temps {
        if !(*t > 0.0) {
            return Err(Error::domain(format!("temperature must be > 0, got {t}")));
        }
        if !(250.0..=400.0).contains(t) {
            log::warn!("temperature {t} K is outside the advisory range [250, 400] K");
        }
    }
    config.validate()?;
    seq.validate()?;
    let results: Vec<TemperatureResult> = temps
        .par_iter()
        .map(|&t| evaluate_one(seq, config, t, seed, options))
        .collect::<Result<_>>()?;

    let m = &config.physics.t1_model;
    let law = T1TemperatureLaw {
        a2: m.a2,
        a3: m.a3,
        delta: m.delta,
        boltzmann_k: config.physics.boltzmann_k,
    };
    let a1_from = |pick: fn(&ScanRow) -> Option<Estimate>| -> Option<FitResult> {
        let pts: Vec<(f64, Estimate)> = results
            .iter()
            .filter_map(|r| pick(&r.row).map(|e| (r.row.temperature, e)))
            .filter(|(_, e)| e.std_error.is_finite() && e.std_error > 0.0)
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let t: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1.value).collect();
        let s: Vec<f64> = pts.iter().map(|p| p.1.std_error).collect();
        fit_t1_temperature_model(&t, &y, &s, &law).ok()
    };
    let a1_pi = a1_from(|r| r.inv_t1_pi);
    let a1_optical = a1_from(|r| r.inv_t1_optical);
    // Above the recharge threshold the all-optical rate is dominated by
    // charge dynamics and is left out of A₁.
    let optical_usable = seq.readout_power().unwrap_or(0.0) < config.analysis.recharge_min_power;
    let a1 = match (&a1_pi, a1_optical.as_ref().filter(|_| optical_usable)) {
        (Some(p), Some(o)) => {
            // The mean of the errors bounds the error of the mean for any
            // correlation between the two methods.
            let (p, o) = (p.estimate(0), o.estimate(0));
            Some(Estimate::new(
                0.5 * (p.value + o.value),
                0.5 * (p.std_error + o.std_error),
            ))
        }
        (Some(f), None) | (None, Some(f)) => Some(f.estimate(0)),
        (None, None) => None,
    };
    Ok(TemperatureScan {
        results,
        a1_pi,
        a1_optical,
        a1,
    })
}
