use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use nvrelax_bench::{default_config, standard_sequence};
use nvrelax_core::fitting::{fit_biexp, fit_monoexp};
use nvrelax_core::photophysics::log_spaced;
use nvrelax_core::run_sequence;
use nvrelax_core::spectra::{build_basis, decompose, simulate_references, simulate_steady_state_spectrum};

fn fits(c: &mut Criterion) {
    let t = log_spaced(1e-6, 30e-3, 40);
    let mono: Vec<f64> = t.iter().map(|t| 2.0 * (-t / 1.2e-3).exp() + 0.1).collect();
    let bi: Vec<f64> = t
        .iter()
        .map(|t| 0.6 * (-t / 50e-6).exp() + 0.4 * (-t / 2e-3).exp() + 1.0)
        .collect();
    let sigma = vec![1e-3; t.len()];
    c.bench_function("fit_monoexp_40", |b| {
        b.iter(|| fit_monoexp(black_box(&t), black_box(&mono), &sigma).unwrap())
    });
    c.bench_function("fit_biexp_40", |b| {
        b.iter(|| fit_biexp(black_box(&t), black_box(&bi), &sigma).unwrap())
    });
}

fn simulation(c: &mut Criterion) {
    let cfg = default_config();
    let seq = standard_sequence(8e-6, 1000);
    c.bench_function("run_sequence_30tau_1000reps", |b| {
        b.iter(|| run_sequence(&seq, &cfg.physics, &cfg.detector, 300.0, black_box(7)).unwrap())
    });
}

fn spectra(c: &mut Criterion) {
    let cfg = default_config();
    let (z, m) = simulate_references(&cfg.spectra, &cfg.physics, 294.0, 1).unwrap();
    let basis = build_basis(&z, &m, 0.37, 0.31).unwrap();
    let s = simulate_steady_state_spectrum(&cfg.spectra, &cfg.physics, 1e-3, 294.0, 2).unwrap();
    c.bench_function("decompose_901", |b| b.iter(|| decompose(black_box(&s), &basis).unwrap()));
}

criterion_group!(benches, fits, simulation, spectra);
criterion_main!(benches);
