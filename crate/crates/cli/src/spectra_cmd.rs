//! `simulate-spectra` and `decompose`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nvrelax_core::spectra::io::{
    read_spectrum, write_spectrum, SpectrumFile, ROLE_KAPPA_SERIES, ROLE_MINUS_PRE, ROLE_SAMPLE, ROLE_ZERO_PRE,
};
use nvrelax_core::spectra::{analyze_dataset, simulate_dataset, TemperatureSpectra};
use nvrelax_core::{Config, Estimate, Spectrum};
use serde::Serialize;

use crate::output::{power_tag, read_input, temperature_tag, to_toml, CmdResult, Failure, Manifest, Staged, Status};

pub struct SimulateSpectra {
    pub powers: Option<Vec<f64>>,
    pub temps: Option<Vec<f64>>,
    pub seed: u64,
    pub out: PathBuf,
}

/// Highest power the spectra are meant for (W).
const ADVISORY_MAX_POWER: f64 = 4e-3;

pub fn simulate_spectra(cfg: &Config, args: &SimulateSpectra, mut manifest: Manifest) -> CmdResult<Status> {
    let powers = args.powers.clone().unwrap_or_else(|| cfg.spectra.powers.clone());
    let temps = args.temps.clone().unwrap_or_else(|| cfg.spectra.temperatures.clone());
    if powers.is_empty() || temps.is_empty() {
        return Err(Failure::Validation("need at least one power and one temperature".into()));
    }
    for &p in &powers {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Failure::Validation(format!("power must be > 0 W, got {p}")));
        }
        if p > ADVISORY_MAX_POWER {
            log::warn!("power {p} W is above the advisory maximum of {ADVISORY_MAX_POWER} W");
        }
    }
    for &t in &temps {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::Validation(format!("temperature must be > 0 K, got {t}")));
        }
    }
    manifest.seed = Some(args.seed);
    let data = simulate_dataset(&cfg.spectra, &cfg.physics, &temps, &powers, args.seed)?;

    let mut staged = Staged::new();
    let mut put = |dir: &str, name: String, s: &Spectrum, role: &str| {
        let rel = Path::new(dir).join(name);
        let text = write_spectrum(s, role, &[], &manifest.lines(&rel));
        staged.add_raw(rel, text);
    };
    for d in &data {
        let tt = temperature_tag(d.temperature);
        put("references", format!("nv_zero_pre_{tt}.csv"), &d.i0_pre, ROLE_ZERO_PRE);
        put("references", format!("nv_minus_pre_{tt}.csv"), &d.i_minus_pre, ROLE_MINUS_PRE);
        for (p, s) in &d.kappa_series {
            put("kappa", format!("kappa_{tt}_{}.csv", power_tag(*p)), s, ROLE_KAPPA_SERIES);
        }
        for s in &d.samples {
            put("spectra", format!("spectrum_{tt}_{}.csv", power_tag(s.laser_power)), s, ROLE_SAMPLE);
        }
    }
    staged.check_unique()?;
    let n = staged.len();
    staged.commit(&args.out)?;
    println!(
        "wrote {} sample spectra ({} temperatures x {} powers) and {} reference/kappa files to {}",
        temps.len() * powers.len(),
        temps.len(),
        powers.len(),
        n - temps.len() * powers.len(),
        args.out.display()
    );
    Ok(Status::Success)
}

pub struct Decompose {
    pub input: PathBuf,
    pub kappa: Option<f64>,
    pub kappa_std: f64,
    pub out: PathBuf,
}

fn csv_files(dir: &Path, found: &mut Vec<PathBuf>) -> CmdResult<()> {
    let entries = fs::read_dir(dir).map_err(|e| Failure::Validation(format!("cannot list {}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry
            .map_err(|e| Failure::Validation(format!("cannot list {}: {e}", dir.display())))?
            .path();
        if path.is_dir() {
            csv_files(&path, found)?;
        } else if path.extension().is_some_and(|e| e == "csv") {
            found.push(path);
        }
    }
    Ok(())
}

#[derive(Default)]
struct Group {
    temperature: f64,
    zero_pre: Option<Spectrum>,
    minus_pre: Option<Spectrum>,
    kappa_series: Vec<(f64, Spectrum)>,
    samples: Vec<Spectrum>,
}

fn describe_role(role: &str) -> &'static str {
    if role == ROLE_ZERO_PRE {
        "high-power NV0-rich reference"
    } else {
        "low-power NV- rich reference"
    }
}

fn group_files(files: Vec<(PathBuf, SpectrumFile)>) -> CmdResult<Vec<TemperatureSpectra>> {
    let mut groups: BTreeMap<u64, Group> = BTreeMap::new();
    for (path, f) in files {
        let t = f.spectrum.temperature;
        let g = groups.entry(t.to_bits()).or_insert_with(|| Group {
            temperature: t,
            ..Group::default()
        });
        let slot = match f.role.as_str() {
            ROLE_ZERO_PRE => &mut g.zero_pre,
            ROLE_MINUS_PRE => &mut g.minus_pre,
            ROLE_KAPPA_SERIES => {
                g.kappa_series.push((f.spectrum.laser_power, f.spectrum));
                continue;
            }
            ROLE_SAMPLE => {
                g.samples.push(f.spectrum);
                continue;
            }
            other => {
                return Err(Failure::Validation(format!(
                    "{}: unexpected role `{other}`",
                    path.display()
                )))
            }
        };
        if slot.is_some() {
            return Err(Failure::Validation(format!(
                "{}: second {} spectrum for T = {t} K",
                path.display(),
                f.role
            )));
        }
        *slot = Some(f.spectrum);
    }
    let mut out = Vec::new();
    for g in groups.into_values() {
        let take = |s: Option<Spectrum>, role: &str| {
            s.ok_or_else(|| {
                Failure::Validation(format!(
                    "T = {} K: missing `{role}` spectrum ({})",
                    g.temperature,
                    describe_role(role)
                ))
            })
        };
        let i0_pre = take(g.zero_pre, ROLE_ZERO_PRE)?;
        let i_minus_pre = take(g.minus_pre, ROLE_MINUS_PRE)?;
        let mut samples = g.samples;
        samples.sort_by(|a, b| a.laser_power.total_cmp(&b.laser_power));
        let mut kappa_series = g.kappa_series;
        kappa_series.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.push(TemperatureSpectra {
            temperature: g.temperature,
            i0_pre,
            i_minus_pre,
            kappa_series,
            samples,
        });
    }
    Ok(out)
}

#[derive(Serialize)]
struct Summary {
    temperatures: usize,
    spectra: usize,
    delta0: f64,
    delta_minus: f64,
    kappa_source: &'static str,
    kappa: Estimate,
}

pub fn decompose(cfg: &Config, args: &Decompose, mut manifest: Manifest) -> CmdResult<Status> {
    if !args.input.is_dir() {
        return Err(Failure::Validation(format!("{} is not a directory", args.input.display())));
    }
    let mut paths = Vec::new();
    csv_files(&args.input, &mut paths)?;
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::Validation(format!("no .csv spectra under {}", args.input.display())));
    }
    let mut files = Vec::with_capacity(paths.len());
    for p in &paths {
        let text = read_input(p)?;
        let f = read_spectrum(&text).map_err(|e| Failure::from(e).in_file(p))?;
        files.push((p.clone(), f));
    }
    let data = group_files(files)?;
    let n_samples: usize = data.iter().map(|d| d.samples.len()).sum();
    if n_samples == 0 {
        return Err(Failure::Validation("no `sample` spectra to decompose".into()));
    }
    let kappa = match args.kappa {
        Some(k) => {
            if !(k > 0.0) || !(args.kappa_std >= 0.0) {
                return Err(Failure::Validation(format!("--kappa must be > 0 and --kappa-std >= 0, got {k}, {}", args.kappa_std)));
            }
            Some(Estimate::new(k, args.kappa_std))
        }
        None => {
            if let Some(d) = data.iter().find(|d| d.kappa_series.is_empty()) {
                return Err(Failure::Validation(format!(
                    "T = {} K has no `{ROLE_KAPPA_SERIES}` spectra; supply them or pass --kappa",
                    d.temperature
                )));
            }
            None
        }
    };
    manifest.inputs.push(args.input.display().to_string());
    let w = &cfg.spectra;
    let analysis = analyze_dataset(
        &data,
        (w.delta0_window[0], w.delta0_window[1]),
        (w.delta_minus_window[0], w.delta_minus_window[1]),
        kappa,
    )?;

    let mut fractions = String::from("power_w,temperature_k,c_minus,c_zero,nv_minus_fraction,nv_minus_fraction_std\n");
    for r in &analysis.fractions {
        let _ = writeln!(
            fractions,
            "{},{},{},{},{},{}",
            r.power, r.temperature, r.c_minus, r.c_zero, r.fraction.value, r.fraction.std_error
        );
    }
    let mut kappa_table = String::from("temperature_k,kappa,kappa_std\n");
    for r in &analysis.kappa_by_temperature {
        let _ = writeln!(kappa_table, "{},{},{}", r.temperature, r.estimate.kappa.value, r.estimate.kappa.std_error);
    }
    let mut variance = String::from("power_w,variance\n");
    for (p, v) in &analysis.variance {
        let _ = writeln!(variance, "{p},{v}");
    }
    let summary = Summary {
        temperatures: data.len(),
        spectra: n_samples,
        delta0: analysis.delta0,
        delta_minus: analysis.delta_minus,
        kappa_source: if kappa.is_some() { "supplied" } else { "inverse-variance mean over temperatures" },
        kappa: analysis.kappa,
    };

    let mut staged = Staged::new();
    staged.add(&manifest, "fractions.csv", &fractions);
    staged.add(&manifest, "kappa.csv", &kappa_table);
    staged.add(&manifest, "variance.csv", &variance);
    staged.add(&manifest, "summary.toml", &to_toml(&summary)?);
    staged.commit(&args.out)?;
    println!(
        "decomposed {n_samples} spectra at {} temperatures; kappa = {:.4} +/- {:.4}; results in {}",
        data.len(),
        analysis.kappa.value,
        analysis.kappa.std_error,
        args.out.display()
    );
    Ok(Status::Success)
}
