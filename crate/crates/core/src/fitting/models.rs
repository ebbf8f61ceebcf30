use crate::model::BOLTZMANN_EV_PER_K;

use super::lm::Model;

/// `A e^{-t/T} + y0`
#[derive(Debug, Clone, Copy, Default)]
pub struct MonoExp;

impl Model for MonoExp {
    fn id(&self) -> &'static str {
        "monoexp"
    }
    fn names(&self) -> &'static [&'static str] {
        &["amplitude", "time_constant", "offset"]
    }
    fn eval(&self, t: f64, p: &[f64]) -> f64 {
        p[0] * (-t / p[1]).exp() + p[2]
    }
    fn gradient(&self, t: f64, p: &[f64], out: &mut [f64]) {
        let e = (-t / p[1]).exp();
        out[0] = e;
        out[1] = p[0] * e * t / (p[1] * p[1]);
        out[2] = 1.0;
    }
}

/// `A e^{-t/T1} + B e^{-t/T2} + C`
#[derive(Debug, Clone, Copy, Default)]
pub struct BiExp;

impl Model for BiExp {
    fn id(&self) -> &'static str {
        "biexp"
    }
    fn names(&self) -> &'static [&'static str] {
        &["amplitude1", "time_constant1", "amplitude2", "time_constant2", "offset"]
    }
    fn eval(&self, t: f64, p: &[f64]) -> f64 {
        p[0] * (-t / p[1]).exp() + p[2] * (-t / p[3]).exp() + p[4]
    }
    fn gradient(&self, t: f64, p: &[f64], out: &mut [f64]) {
        let e1 = (-t / p[1]).exp();
        let e2 = (-t / p[3]).exp();
        out[0] = e1;
        out[1] = p[0] * e1 * t / (p[1] * p[1]);
        out[2] = e2;
        out[3] = p[2] * e2 * t / (p[3] * p[3]);
        out[4] = 1.0;
    }
}

/// `a x^n + c`, x > 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct PowerLaw;

impl Model for PowerLaw {
    fn id(&self) -> &'static str {
        "power_law"
    }
    fn names(&self) -> &'static [&'static str] {
        &["a", "n", "c"]
    }
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * x.powf(p[1]) + p[2]
    }
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let xn = x.powf(p[1]);
        out[0] = xn;
        out[1] = p[0] * xn * x.ln();
        out[2] = 1.0;
    }
}

/// Lorentzian peak on a linear baseline:
/// `A (w/2)² / ((x - x0)² + (w/2)²) + b0 + b1 (x - x_ref)`.
#[derive(Debug, Clone, Copy)]
pub struct Lorentzian {
    /// Baseline pivot, fixed (usually the window center).
    pub x_ref: f64,
}

impl Model for Lorentzian {
    fn id(&self) -> &'static str {
        "lorentzian"
    }
    fn names(&self) -> &'static [&'static str] {
        &["amplitude", "center", "fwhm", "baseline", "baseline_slope"]
    }
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let g2 = 0.25 * p[2] * p[2];
        let d = x - p[1];
        p[0] * g2 / (d * d + g2) + p[3] + p[4] * (x - self.x_ref)
    }
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let g2 = 0.25 * p[2] * p[2];
        let d = x - p[1];
        let den = d * d + g2;
        let l = g2 / den;
        out[0] = l;
        out[1] = p[0] * g2 * 2.0 * d / (den * den);
        out[2] = p[0] * 0.5 * p[2] * d * d / (den * den);
        out[3] = 1.0;
        out[4] = x - self.x_ref;
    }
}

/// The phonon relaxation law with only `A1` free.
#[derive(Debug, Clone, Copy)]
pub struct T1TemperatureLaw {
    pub a2: f64,
    pub a3: f64,
    pub delta: f64,
    pub boltzmann_k: f64,
}

impl T1TemperatureLaw {
    pub fn new(a2: f64, a3: f64, delta: f64) -> Self {
        Self {
            a2,
            a3,
            delta,
            boltzmann_k: BOLTZMANN_EV_PER_K,
        }
    }

    pub fn phonon_terms(&self, t: f64) -> f64 {
        self.a2 / (self.delta / (self.boltzmann_k * t)).exp_m1() + self.a3 * t.powi(5)
    }
}

impl Model for T1TemperatureLaw {
    fn id(&self) -> &'static str {
        "t1_temperature_law"
    }
    fn names(&self) -> &'static [&'static str] {
        &["a1"]
    }
    fn eval(&self, t: f64, p: &[f64]) -> f64 {
        p[0] + self.phonon_terms(t)
    }
    fn gradient(&self, _t: f64, _p: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
    }
}
