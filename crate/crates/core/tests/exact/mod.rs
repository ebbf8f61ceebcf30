//! Closed-form examples shared by the `exact_examples` test and the
//! acceptance harness.

#![allow(dead_code)]

use nvrelax_core::detection::sample_counts;
use nvrelax_core::fitting::{
    fit_biexp, fit_monoexp, fit_power_law, fit_t1_temperature_model, weighted_linear_fit, Lorentzian, Model,
    T1TemperatureLaw,
};
use nvrelax_core::photophysics::{
    apply_pi_pulse, emission_rates, evolve_dark, evolve_laser, log_spaced, run_sequence_with,
    steady_state_fraction, EnsembleState, PulseSequence, RechargeParams, SimulationOptions,
};
use nvrelax_core::relaxometry::{
    all_optical_decay, calibrate_charge_ratio_mapping, pi_pulse_decay, ratio_increase_statistic,
    recharge_decay,
};
use nvrelax_core::spectra::{
    build_basis, decompose, estimate_kappa, fit_zpl, fraction_variance, nv_minus_fraction, simulate_references,
    BasisSet, ZplComponent,
};
use nvrelax_core::{
    correct_counts, t1_rate, temperature_from_zfs, trapezoid, Channel, Config, DetectorConfig, Error, Estimate,
    Spectrum, TemperatureModel,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Outcome = Result<(), String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Outcome {
    ensure((a - b).abs() <= tol, format!("{what}: {a} vs {b} (tol {tol})"))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn default_references() -> (Spectrum, Spectrum) {
    let c = Config::default();
    simulate_references(&c.spectra, &c.physics, 294.0, 11).expect("references")
}

pub fn default_basis() -> BasisSet {
    let (i0, im) = default_references();
    build_basis(&i0, &im, 0.1, 0.05).expect("basis")
}

fn mixed(basis: &BasisSet, a: f64, b: f64, power: f64) -> Spectrum {
    let y = basis
        .basis_minus
        .iter()
        .zip(&basis.basis_zero)
        .map(|(m, z)| a * m + b * z)
        .collect();
    Spectrum::new(basis.wavelength_grid.clone(), y, power, 294.0, 1.0).expect("spectrum")
}

pub fn t1_rate_constant_term() -> Outcome {
    let m = TemperatureModel {
        a1: 657.0,
        a2: 0.0,
        a3: 0.0,
        delta: 0.073,
    };
    ensure(t1_rate(&m, 294.0).map_err(err)? == 657.0, "rate != 657")
}

pub fn t1_rate_increases_with_temperature() -> Outcome {
    let m = Config::default().physics.t1_model;
    ensure(t1_rate(&m, 348.0).map_err(err)? > t1_rate(&m, 294.0).map_err(err)?, "not increasing")
}

pub fn zero_zfs_shift_gives_reference_temperature() -> Outcome {
    let t = temperature_from_zfs(Estimate::new(2.870e9, 1e3), 2.870e9, 294.0, -74.2e3, 0.7e3).map_err(err)?;
    ensure(t.value == 294.0, format!("T = {}", t.value))
}

pub fn zero_delta_basis_is_normalized_input() -> Outcome {
    let (i0, im) = default_references();
    let b = build_basis(&i0, &im, 0.0, 0.0).map_err(err)?;
    let x = &i0.wavelengths;
    let (a0, am) = (trapezoid(x, &i0.intensities), trapezoid(x, &im.intensities));
    for i in 0..x.len() {
        close(b.basis_zero[i], i0.intensities[i] / a0, 1e-12 * b.basis_zero[i].abs().max(1e-12), "zero")?;
        close(b.basis_minus[i], im.intensities[i] / am, 1e-12 * b.basis_minus[i].abs().max(1e-12), "minus")?;
    }
    Ok(())
}

pub fn basis_functions_have_unit_area() -> Outcome {
    let b = default_basis();
    close(trapezoid(&b.wavelength_grid, &b.basis_minus), 1.0, 1e-9, "minus area")?;
    close(trapezoid(&b.wavelength_grid, &b.basis_zero), 1.0, 1e-9, "zero area")
}

pub fn pure_component_decomposes_to_one() -> Outcome {
    let b = default_basis();
    let d = decompose(&mixed(&b, 1000.0, 0.0, 1e-3), &b).map_err(err)?;
    close(d.c_minus, 1.0, 1e-12, "c_minus")?;
    close(d.c_zero, 0.0, 1e-12, "c_zero")
}

pub fn symmetric_mix_decomposes_to_half() -> Outcome {
    let b = default_basis();
    let d = decompose(&mixed(&b, 500.0, 500.0, 1e-3), &b).map_err(err)?;
    close(d.c_minus, 0.5, 1e-12, "c_minus")?;
    close(d.c_zero, 0.5, 1e-12, "c_zero")
}

pub fn fraction_of_pure_minus_is_one() -> Outcome {
    let b = default_basis();
    let d = decompose(&mixed(&b, 1000.0, 0.0, 1e-3), &b).map_err(err)?;
    for k in [0.3, 1.0, 1.65, 7.0] {
        close(nv_minus_fraction(&d, Estimate::exact(k)).map_err(err)?.value, 1.0, 1e-12, "fraction")?;
    }
    Ok(())
}

pub fn unit_kappa_fraction_equals_c_minus() -> Outcome {
    let b = default_basis();
    let d = decompose(&mixed(&b, 500.0, 500.0, 1e-3), &b).map_err(err)?;
    close(nv_minus_fraction(&d, Estimate::exact(1.0)).map_err(err)?.value, 0.5, 1e-12, "fraction")
}

fn proportional_series(b: &BasisSet, scale: f64) -> Vec<(f64, Spectrum)> {
    let g = 1e8;
    [2e-6, 4e-6, 6e-6, 8e-6, 1e-5]
        .iter()
        .map(|&p| (p, mixed(b, scale * 1.65 * g * p, scale * g * p, p)))
        .collect()
}

pub fn exactly_proportional_series_gives_kappa() -> Outcome {
    let b = default_basis();
    let k = estimate_kappa(&proportional_series(&b, 1.0), &b).map_err(err)?;
    close(k.kappa.value, 1.65, 1e-9, "kappa")?;
    ensure(k.kappa.std_error < 1e-6, format!("kappa std {}", k.kappa.std_error))
}

pub fn doubling_intensities_leaves_kappa_unchanged() -> Outcome {
    let b = default_basis();
    let c = Config::default();
    let series = nvrelax_core::spectra::simulate_kappa_series(&c.spectra, &c.physics, 294.0, 5).map_err(err)?;
    let doubled: Vec<(f64, Spectrum)> = series
        .iter()
        .map(|(p, s)| {
            let mut s2 = s.clone();
            s2.intensities.iter_mut().for_each(|v| *v *= 2.0);
            (*p, s2)
        })
        .collect();
    let k1 = estimate_kappa(&series, &b).map_err(err)?.kappa.value;
    let k2 = estimate_kappa(&doubled, &b).map_err(err)?.kappa.value;
    close(k2, k1, 1e-12 * k1, "kappa")
}

pub fn identical_fractions_have_zero_variance() -> Outcome {
    ensure(fraction_variance(&[0.37; 8]).map_err(err)? == 0.0, "variance != 0")
}

pub fn noise_free_lorentzian_is_recovered() -> Outcome {
    let x: Vec<f64> = (0..201).map(|i| 630.0 + 0.09 * i as f64).collect();
    let m = Lorentzian { x_ref: 639.0 };
    let p = [5000.0, 639.0, 2.0, 100.0, 0.0];
    let y = x.iter().map(|v| m.eval(*v, &p)).collect();
    let s = Spectrum::new(x, y, 1e-3, 294.0, 1.0).map_err(err)?;
    let f = fit_zpl(&s, (630.0, 648.0), ZplComponent::NvMinus).map_err(err)?;
    close(f.center.value, 639.0, 1e-6, "center")?;
    close(f.fwhm.value, 2.0, 1e-6, "fwhm")
}

pub fn zero_power_steady_state_is_f_low() -> Outcome {
    let e = Config::default().physics.emission;
    ensure(steady_state_fraction(0.0, &e).map_err(err)? == e.f_low, "not f_low")
}

pub fn zero_dark_time_is_identity() -> Outcome {
    let r = Config::default().physics.recharge;
    let s = EnsembleState::new(0.3, 0.7, -0.2).map_err(err)?;
    ensure(evolve_dark(&s, 0.0, 1e-3, &r).map_err(err)? == s, "state changed")
}

pub fn long_dark_time_reaches_equilibrium() -> Outcome {
    let r = Config::default().physics.recharge;
    let s = EnsembleState::new(0.3, 0.7, -0.2).map_err(err)?;
    let out = evolve_dark(&s, 1e6 * 1e-3, 1e-3, &r).map_err(err)?;
    close(out.s_addr, 0.0, 1e-9, "s_addr")?;
    close(out.s_rest, 0.0, 1e-9, "s_rest")?;
    close(out.n_minus, r.n_minus_dark_eq, 1e-9, "n_minus")
}

pub fn zero_laser_time_is_identity() -> Outcome {
    let e = Config::default().physics.emission;
    let s = EnsembleState::new(0.3, 0.7, -0.2).map_err(err)?;
    ensure(evolve_laser(&s, 0.0, 1e-3, &e).map_err(err)? == s, "state changed")
}

pub fn pi_pulse_flips_addressed_orientation_only() -> Outcome {
    let s = EnsembleState::new(0.4, 0.8, 0.3).map_err(err)?;
    let f = apply_pi_pulse(&s);
    ensure(f.s_addr == -0.8, "s_addr not -0.8")?;
    ensure(f.s_rest == s.s_rest, "s_rest changed")?;
    ensure(apply_pi_pulse(&f) == s, "not an involution")
}

pub fn pure_unpolarized_minus_emission() -> Outcome {
    let mut e = Config::default().physics.emission;
    e.crosstalk_minus_in_zero = 0.0;
    e.crosstalk_zero_in_minus = 0.0;
    let p = 1e-4;
    let (m, z) = emission_rates(&EnsembleState::new(1.0, 0.0, 0.0).map_err(err)?, p, &e);
    close(m, e.brightness_minus * p, 1e-12 * m, "minus")?;
    ensure(z == 0.0, "zero channel not 0")?;
    let (m1, _) = emission_rates(&EnsembleState::new(1.0, 1.0, 1.0).map_err(err)?, p, &e);
    close(m1 / m, 1.0 - e.spin_contrast, 1e-12, "contrast factor")
}

pub fn no_evolution_gives_unit_optical_ratio() -> Outcome {
    let c = Config::default();
    let seq = PulseSequence::standard(8e-6, vec![1e-9, 2e-9, 3e-9, 4e-9], 20000);
    let opts = SimulationOptions {
        noise: true,
        include_pi_half: false,
    };
    let tr = run_sequence_with(&seq, &c.physics, &c.detector, 294.0, 3, &opts)
        .map_err(err)?
        .corrected(&c.detector)
        .map_err(err)?;
    let d = all_optical_decay(&tr).map_err(err)?;
    close(d.y[0], 1.0, 4.0 * d.sigma[0], "ratio at tau = 1 ns")
}

pub fn zero_rate_zero_dark_gives_zero_counts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let d = DetectorConfig::default();
    ensure(
        (0..1000).all(|_| sample_counts(0.0, 1.0, &d, Channel::Minus, &mut rng) == 0),
        "non-zero count",
    )
}

pub fn transmission_scales_signal_not_dark() -> Outcome {
    let mut d = DetectorConfig {
        dark_rate_minus: 300.0,
        ..DetectorConfig::default()
    };
    let full = d.detected_rate(1e5, Channel::Minus);
    d.nd_transmission_minus = 0.5;
    let half = d.detected_rate(1e5, Channel::Minus);
    close(full - 300.0, 1e5, 1e-9, "full")?;
    close(half - 300.0, 0.5e5, 1e-9, "half")
}

pub fn dark_level_corrects_to_zero() -> Outcome {
    let d = DetectorConfig {
        dark_rate_minus: 250.0,
        nd_transmission_minus: 0.4,
        ..DetectorConfig::default()
    };
    let r = correct_counts(250.0 * 2.0, 2.0, &d, Channel::Minus).map_err(err)?;
    close(r.rate, 0.0, 1e-12, "rate")?;
    close(r.std_error, 500f64.sqrt() / 2.0 / 0.4, 1e-12, "std")
}

pub fn ideal_detector_correction_is_identity() -> Outcome {
    let r = correct_counts(12345.0, 0.5, &DetectorConfig::default(), Channel::Zero).map_err(err)?;
    ensure(r.rate == 12345.0 / 0.5, format!("rate {}", r.rate))
}

pub fn exact_line_fit() -> Outcome {
    let x = [0.0, 1.0, 2.0, 3.5, 7.0];
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    let f = weighted_linear_fit(&x, &y, &[0.1, 3.0, 0.5, 1.0, 2.0]).map_err(err)?;
    close(f.params[0], 2.0, 1e-12, "slope")?;
    close(f.params[1], 1.0, 1e-12, "intercept")?;
    ensure(f.std_errors.iter().all(|s| *s < 1e-9), "errors not ~0")
}

pub fn two_point_line_fit() -> Outcome {
    let f = weighted_linear_fit(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 1.0]).map_err(err)?;
    close(f.params[0], 1.0, 1e-15, "slope")?;
    close(f.params[1], 0.0, 1e-15, "intercept")
}

pub fn noise_free_monoexp_is_recovered() -> Outcome {
    let t = log_spaced(1e-6, 1e-2, 30);
    let y: Vec<f64> = t.iter().map(|v| (-v / 1e-3).exp()).collect();
    let f = fit_monoexp(&t, &y, &vec![0.01; t.len()]).map_err(err)?;
    close(f.params[0], 1.0, 1e-8, "A")?;
    close(f.params[1], 1e-3, 1e-11, "T")?;
    close(f.params[2], 0.0, 1e-8, "y0")
}

pub fn constant_data_flags_time_constant() -> Outcome {
    let t = log_spaced(1e-6, 1e-2, 20);
    let y = vec![0.7; t.len()];
    match fit_monoexp(&t, &y, &vec![0.01; t.len()]) {
        Ok(f) => {
            close(f.params[0] + f.params[2], 0.7, 1e-6, "A + y0")?;
            close(f.params[2], 0.7, 1e-6, "y0")?;
            ensure(
                f.std_errors[1] / f.params[1] > 10.0 && !f.warnings.is_empty(),
                format!("T not flagged: {} ± {}", f.params[1], f.std_errors[1]),
            )
        }
        Err(e) => Err(format!("fit failed: {e}")),
    }
}

pub fn single_component_biexp_is_flagged() -> Outcome {
    let t = log_spaced(1e-6, 3e-2, 40);
    let y: Vec<f64> = t.iter().map(|v| 0.3 * (-v / 5e-5).exp() + 1.0).collect();
    let f = fit_biexp(&t, &y, &vec![1e-3; t.len()]).map_err(err)?;
    let recovered = (0..2).any(|k| (f.params[2 * k + 1] - 5e-5).abs() < 1e-3 * 5e-5 && (f.params[2 * k] - 0.3).abs() < 1e-3);
    ensure(recovered, format!("T_R1 not recovered: {:?}", f.params))?;
    ensure(!f.warnings.is_empty(), "degenerate component not flagged")
}

pub fn linear_power_law_recovers_line() -> Outcome {
    let x: Vec<f64> = (1..=8).map(|i| 0.25 * i as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 0.5).collect();
    let f = fit_power_law(&x, &y, &vec![0.01; x.len()]).map_err(err)?;
    close(f.params[0], 3.0, 1e-8, "a")?;
    close(f.params[1], 1.0, 1e-8, "n")?;
    close(f.params[2], 0.5, 1e-8, "c")
}

pub fn identity_calibration_maps_to_identity() -> Outcome {
    let x: Vec<f64> = (1..=8).map(|i| 0.3 * i as f64).collect();
    let e: Vec<Estimate> = x.iter().map(|v| Estimate::new(*v, 1e-3)).collect();
    let m = calibrate_charge_ratio_mapping(&e, &e).map_err(err)?;
    close(m.a.value, 1.0, 1e-6, "a")?;
    close(m.n.value, 1.0, 1e-6, "n")?;
    close(m.c.value, 0.0, 1e-6, "c")?;
    let grid: Vec<f64> = (0..=100).map(|i| m.range.0 + (m.range.1 - m.range.0) * i as f64 / 100.0).collect();
    ensure(grid.windows(2).all(|w| m.eval(w[1]) > m.eval(w[0])), "mapping not increasing")?;
    match m.apply(Estimate::new(10.0 * m.range.1, 0.01)) {
        Err(Error::CalibrationRange { .. }) => Ok(()),
        other => Err(format!("extrapolation not flagged: {other:?}")),
    }
}

pub fn exact_temperature_law_gives_a1() -> Outcome {
    let law = T1TemperatureLaw::new(2.1e3, 2.2e-11, 0.073);
    let temps: Vec<f64> = (0..8).map(|i| 294.0 + 54.0 * i as f64 / 7.0).collect();
    let y: Vec<f64> = temps.iter().map(|t| 657.0 + law.phonon_terms(*t)).collect();
    let f = fit_t1_temperature_model(&temps, &y, &[10.0; 8], &law).map_err(err)?;
    close(f.params[0], 657.0, 1e-9, "A1")
}

pub fn phonon_free_law_gives_weighted_mean() -> Outcome {
    let law = T1TemperatureLaw::new(0.0, 0.0, 0.073);
    let y = [600.0, 700.0, 650.0];
    let s = [10.0, 20.0, 5.0];
    let f = fit_t1_temperature_model(&[294.0, 310.0, 330.0], &y, &s, &law).map_err(err)?;
    let w: Vec<f64> = s.iter().map(|v| v.powi(-2)).collect();
    let mean = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>();
    close(f.params[0], mean, 1e-9, "A1")
}

fn pi_trace(config: &Config, taus: Vec<f64>, reps: u64) -> Result<nvrelax_core::RelaxometryTrace, String> {
    let seq = PulseSequence::standard(8e-6, taus, reps);
    run_sequence_with(&seq, &config.physics, &config.detector, 294.0, 21, &SimulationOptions::default())
        .map_err(err)?
        .corrected(&config.detector)
        .map_err(err)
}

pub fn invisible_pi_pulse_gives_flat_zero() -> Outcome {
    let mut c = Config::default();
    c.physics.emission.spin_contrast = 0.0;
    let tr = pi_trace(&c, log_spaced(1e-6, 1e-2, 12), 5000)?;
    let d = pi_pulse_decay(&tr).map_err(err)?;
    for i in 0..d.y.len() {
        ensure(d.y[i].abs() <= 4.0 * d.sigma[i], format!("y[{i}] = {} ± {}", d.y[i], d.sigma[i]))?;
    }
    Ok(())
}

pub fn pi_difference_vanishes_after_thermal_mixing() -> Outcome {
    let c = Config::default();
    let tr = pi_trace(&c, vec![1e-6, 1e-4, 1e-3, 3e-2], 5000)?;
    let d = pi_pulse_decay(&tr).map_err(err)?;
    let last = d.y.len() - 1;
    ensure(d.y[last].abs() <= 3.0 * d.sigma[last], format!("y = {} ± {}", d.y[last], d.sigma[last]))?;
    ensure(d.y[0] > 3.0 * d.sigma[0], "no contrast at short tau")
}

fn recharge_free(config: &mut Config) {
    config.physics.recharge = RechargeParams::disabled(config.physics.recharge.n_minus_dark_eq);
}

pub fn disabled_recharge_gives_flat_nv0_curve() -> Outcome {
    let mut c = Config::default();
    recharge_free(&mut c);
    let seq = PulseSequence::charge_readout(5.6e-4, log_spaced(1e-6, 3e-2, 12), 1000);
    let opts = SimulationOptions {
        noise: false,
        include_pi_half: false,
    };
    let tr = run_sequence_with(&seq, &c.physics, &c.detector, 294.0, 1, &opts)
        .map_err(err)?
        .corrected(&c.detector)
        .map_err(err)?;
    let d = recharge_decay(&tr).map_err(err)?;
    for v in &d.y {
        close(*v, d.y[0], 1e-9 * d.y[0].abs(), "nv0 ratio")?;
    }
    Ok(())
}

pub fn disabled_recharge_gives_unit_ratio_increase() -> Outcome {
    let mut c = Config::default();
    recharge_free(&mut c);
    let points = nvrelax_core::relaxometry::simulate_charge_calibration(
        &c.physics,
        &c.detector,
        &c.charge_calibration,
        294.0,
        4,
    )
    .map_err(err)?;
    let mapping = nvrelax_core::relaxometry::mapping_from_points(&points).map_err(err)?;
    let seq = PulseSequence::charge_readout(5.6e-4, log_spaced(1e-6, 3e-2, 12), 20000);
    let opts = SimulationOptions {
        noise: true,
        include_pi_half: false,
    };
    let tr = run_sequence_with(&seq, &c.physics, &c.detector, 294.0, 8, &opts)
        .map_err(err)?
        .corrected(&c.detector)
        .map_err(err)?;
    let s = ratio_increase_statistic(&tr, &mapping).map_err(err)?;
    ensure(
        (s.value - 1.0).abs() <= 2.0 * s.std_error,
        format!("statistic {} ± {}", s.value, s.std_error),
    )
}

pub type Check = (&'static str, fn() -> Outcome);

pub const ALL: &[Check] = &[
    ("t1 rate constant term", t1_rate_constant_term),
    ("t1 rate increases with temperature", t1_rate_increases_with_temperature),
    ("zero ZFS shift gives reference temperature", zero_zfs_shift_gives_reference_temperature),
    ("zero delta basis equals normalized input", zero_delta_basis_is_normalized_input),
    ("basis functions have unit area", basis_functions_have_unit_area),
    ("pure component decomposes to one", pure_component_decomposes_to_one),
    ("symmetric mix decomposes to one half", symmetric_mix_decomposes_to_half),
    ("pure NV- fraction is one", fraction_of_pure_minus_is_one),
    ("unit kappa fraction equals c_minus", unit_kappa_fraction_equals_c_minus),
    ("proportional series gives kappa", exactly_proportional_series_gives_kappa),
    ("doubling intensities leaves kappa", doubling_intensities_leaves_kappa_unchanged),
    ("identical fractions have zero variance", identical_fractions_have_zero_variance),
    ("noise-free Lorentzian recovered", noise_free_lorentzian_is_recovered),
    ("zero power steady state is f_low", zero_power_steady_state_is_f_low),
    ("zero dark time is identity", zero_dark_time_is_identity),
    ("long dark time reaches equilibrium", long_dark_time_reaches_equilibrium),
    ("zero laser time is identity", zero_laser_time_is_identity),
    ("pi pulse flips addressed orientation only", pi_pulse_flips_addressed_orientation_only),
    ("pure unpolarized NV- emission", pure_unpolarized_minus_emission),
    ("no evolution gives unit optical ratio", no_evolution_gives_unit_optical_ratio),
    ("zero rate and dark give zero counts", zero_rate_zero_dark_gives_zero_counts),
    ("transmission scales signal not dark", transmission_scales_signal_not_dark),
    ("dark level corrects to zero", dark_level_corrects_to_zero),
    ("ideal detector correction is identity", ideal_detector_correction_is_identity),
    ("exact line fit", exact_line_fit),
    ("two-point line fit", two_point_line_fit),
    ("noise-free monoexp recovered", noise_free_monoexp_is_recovered),
    ("constant data flags time constant", constant_data_flags_time_constant),
    ("single-component biexp flagged", single_component_biexp_is_flagged),
    ("linear power law recovers line", linear_power_law_recovers_line),
    ("identity calibration maps to identity", identity_calibration_maps_to_identity),
    ("exact temperature law gives A1", exact_temperature_law_gives_a1),
    ("phonon-free law gives weighted mean", phonon_free_law_gives_weighted_mean),
    ("invisible pi pulse gives flat zero", invisible_pi_pulse_gives_flat_zero),
    ("pi difference vanishes after mixing", pi_difference_vanishes_after_thermal_mixing),
    ("disabled recharge gives flat NV0 curve", disabled_recharge_gives_flat_nv0_curve),
    ("disabled recharge gives unit ratio increase", disabled_recharge_gives_unit_ratio_increase),
];

/// Runs every check and returns the failures.
pub fn failures() -> Vec<(&'static str, String)> {
    ALL.iter()
        .filter_map(|(name, f)| f().err().map(|e| (*name, e)))
        .collect()
}
