//! `relaxometry` and `calibrate`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nvrelax_core::photophysics::{log_spaced, PulseSequence, SimulationOptions};
use nvrelax_core::relaxometry::{
    mapping_from_points, simulate_charge_calibration, temperature_scan, CalibrationPoint, ScanOptions,
};
use nvrelax_core::{ChargeRatioMapping, Config, Estimate, FitResult};
use serde::Serialize;

use crate::output::{read_input, temperature_tag, to_toml, CmdResult, Failure, Manifest, Staged, Status};

pub struct Relaxometry {
    pub sequence: Option<PathBuf>,
    pub power: Option<f64>,
    pub temps: Option<Vec<f64>>,
    pub reps: Option<u64>,
    pub seed: u64,
    pub no_pi: bool,
    pub calibration: Option<PathBuf>,
    pub out: PathBuf,
}

/// Readout power when neither a sequence nor `--power` is given (W).
const DEFAULT_POWER: f64 = 8e-6;

fn build_sequence(cfg: &Config, args: &Relaxometry) -> CmdResult<PulseSequence> {
    if let Some(p) = args.power {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Failure::Validation(format!("--power must be > 0 W, got {p}")));
        }
    }
    if args.reps == Some(0) {
        return Err(Failure::Validation("--reps must be >= 1".into()));
    }
    let mut seq = match &args.sequence {
        Some(path) => {
            let text = read_input(path)?;
            let mut seq = PulseSequence::parse(&text).map_err(|e| Failure::from(e).in_file(path))?;
            if let Some(p) = args.power {
                seq = seq.with_power(p);
            }
            seq
        }
        None => {
            let power = args.power.unwrap_or(DEFAULT_POWER);
            if power >= cfg.analysis.recharge_min_power {
                PulseSequence::charge_readout(power, log_spaced(1e-6, 3e-2, 40), 20_000)
            } else {
                PulseSequence::standard(power, log_spaced(1e-6, 1e-2, 30), 50_000)
            }
        }
    };
    if let Some(r) = args.reps {
        seq = seq.with_repetitions(r);
    }
    seq.validate()?;
    Ok(seq)
}

fn load_mapping(path: &Path) -> CmdResult<ChargeRatioMapping> {
    let text = read_input(path)?;
    toml::from_str(&text).map_err(|e| Failure::Validation(format!("{}: not a calibration file: {e}", path.display())))
}

#[derive(Serialize)]
struct FitReport<'a> {
    temperature_k: f64,
    failures: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    pi_pulse: Option<&'a FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    all_optical: Option<&'a FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    recharge: Option<&'a FitResult>,
}

#[derive(Serialize)]
struct A1Report<'a> {
    configured_a1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    a1: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pi_pulse: Option<&'a FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    all_optical: Option<&'a FitResult>,
}

pub fn relaxometry(cfg: &Config, args: &Relaxometry, mut manifest: Manifest) -> CmdResult<Status> {
    let seq = build_sequence(cfg, args)?;
    let temps = args.temps.clone().unwrap_or_else(|| cfg.spectra.temperatures.clone());
    if temps.len() < 2 {
        return Err(Failure::Validation(format!("need at least 2 temperatures, got {}", temps.len())));
    }
    if let Some(t) = temps.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Failure::Validation(format!("temperature must be > 0 K, got {t}")));
    }
    let power = seq.readout_power().unwrap_or(0.0);
    let recharge_path = power >= cfg.analysis.recharge_min_power;
    if let Some(p) = &args.sequence {
        manifest.inputs.push(p.display().to_string());
    }
    let mut staged = Staged::new();
    manifest.seed = Some(args.seed);

    let mapping = match (&args.calibration, recharge_path) {
        (Some(path), _) => {
            manifest.inputs.push(path.display().to_string());
            Some(load_mapping(path)?)
        }
        (None, true) => {
            let t_cal = cfg.spectra.reference_temperature;
            let points = simulate_charge_calibration(&cfg.physics, &cfg.detector, &cfg.charge_calibration, t_cal, args.seed)?;
            let m = mapping_from_points(&points)?;
            staged.add(&manifest, "calibration.toml", &to_toml(&m)?);
            staged.add(&manifest, "calibration_points.csv", &points_csv(&points));
            Some(m)
        }
        (None, false) => None,
    };
    let options = ScanOptions {
        simulation: SimulationOptions {
            noise: true,
            include_pi_half: !args.no_pi,
        },
        mapping,
    };
    let scan = temperature_scan(&seq, cfg, &temps, args.seed, &options)?;

    staged.add(&manifest, "sequence.txt", &seq.to_string());
    staged.add(&manifest, "scan.csv", &scan.to_csv());
    let a1 = A1Report {
        configured_a1: cfg.physics.t1_model.a1,
        a1: scan.a1,
        pi_pulse: scan.a1_pi.as_ref(),
        all_optical: scan.a1_optical.as_ref(),
    };
    staged.add(&manifest, "a1_fit.toml", &to_toml(&a1)?);
    for r in &scan.results {
        let tt = temperature_tag(r.row.temperature);
        staged.add(&manifest, format!("traces/trace_{tt}.csv"), &r.trace.to_csv());
        if let Some(c) = &r.pi_curve {
            staged.add(&manifest, format!("curves/pi_pulse_{tt}.csv"), &c.to_csv("nv_minus_difference"));
        }
        if let Some(c) = &r.optical_curve {
            staged.add(&manifest, format!("curves/all_optical_{tt}.csv"), &c.to_csv("nv_minus_ratio"));
        }
        if let Some(c) = &r.recharge_curve {
            staged.add(&manifest, format!("curves/recharge_{tt}.csv"), &c.to_csv("nv_zero_ratio"));
        }
        let report = FitReport {
            temperature_k: r.row.temperature,
            failures: &r.row.failures,
            pi_pulse: r.pi_fit.as_ref(),
            all_optical: r.optical_fit.as_ref(),
            recharge: r.recharge_fit.as_ref(),
        };
        staged.add(&manifest, format!("fits/fits_{tt}.toml"), &to_toml(&report)?);
    }
    staged.commit(&args.out)?;

    let failed = scan.failure_count();
    for r in scan.rows().filter(|r| !r.failures.is_empty()) {
        eprintln!("T = {} K: {}", r.temperature, r.failures.join("; "));
    }
    match scan.a1 {
        Some(a) => println!("A1 = {:.1} +/- {:.1} 1/s", a.value, a.std_error),
        None => println!("A1 not determined"),
    }
    println!("{} temperatures, {failed} with failed fits; results in {}", temps.len(), args.out.display());
    Ok(if failed == 0 {
        Status::Success
    } else if failed == temps.len() {
        Status::Failed
    } else {
        Status::Partial
    })
}

fn points_csv(points: &[CalibrationPoint]) -> String {
    let mut s = String::from("power_w,charge_ratio,charge_ratio_std,count_ratio,count_ratio_std\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            p.power, p.charge_ratio.value, p.charge_ratio.std_error, p.count_ratio.value, p.count_ratio.std_error
        );
    }
    s
}

pub struct Calibrate {
    pub temperature: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn calibrate(cfg: &Config, args: &Calibrate, mut manifest: Manifest) -> CmdResult<Status> {
    let t = args.temperature.unwrap_or(cfg.spectra.reference_temperature);
    if !(t > 0.0 && t.is_finite()) {
        return Err(Failure::Validation(format!("temperature must be > 0 K, got {t}")));
    }
    manifest.seed = Some(args.seed);
    let points = simulate_charge_calibration(&cfg.physics, &cfg.detector, &cfg.charge_calibration, t, args.seed)?;
    let mapping = mapping_from_points(&points)?;
    let mut staged = Staged::new();
    staged.add(&manifest, "calibration.toml", &to_toml(&mapping)?);
    staged.add(&manifest, "calibration_points.csv", &points_csv(&points));
    staged.commit(&args.out)?;
    println!(
        "mapping a = {:.4}, n = {:.4}, c = {:.4} on count ratios [{:.4}, {:.4}]; written to {}",
        mapping.a.value,
        mapping.n.value,
        mapping.c.value,
        mapping.range.0,
        mapping.range.1,
        args.out.display()
    );
    Ok(Status::Success)
}
