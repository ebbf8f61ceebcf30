use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dark NV⁰→NV⁻ recharge parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RechargeParams {
    /// Fast recharge time (s).
    pub t_r1: f64,
    /// Slow recharge time (s).
    pub t_r2: f64,
    /// Weight of the fast component, [0, 1].
    pub weight1: f64,
    /// NV⁻ fraction the ensemble relaxes to in the dark.
    pub n_minus_dark_eq: f64,
    /// Fractional change of both recharge rates per kelvin away from
    /// `reference_temperature`. Zero (the default) means temperature
    /// independent; non-zero values exist for negative-control runs.
    #[serde(default)]
    pub temperature_coefficient: f64,
    #[serde(default = "default_reference_temperature")]
    pub reference_temperature: f64,
}

fn default_reference_temperature() -> f64 {
    294.0
}

impl RechargeParams {
    pub fn validate(&self) -> Result<()> {
        let key = |k: &str| format!("physics.recharge.{k}");
        if !(self.t_r1 > 0.0) {
            return Err(Error::config(key("t_r1"), "must be > 0"));
        }
        let both_disabled = self.t_r1.is_infinite() && self.t_r2.is_infinite();
        if !both_disabled && !(self.t_r1 < self.t_r2) {
            return Err(Error::config(
                key("t_r2"),
                format!("must exceed t_r1 ({} vs {})", self.t_r2, self.t_r1),
            ));
        }
        if !(0.0..=1.0).contains(&self.weight1) {
            return Err(Error::config(key("weight1"), "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.n_minus_dark_eq) {
            return Err(Error::config(key("n_minus_dark_eq"), "must lie in [0, 1]"));
        }
        if !self.temperature_coefficient.is_finite() {
            return Err(Error::config(key("temperature_coefficient"), "must be finite"));
        }
        Ok(())
    }

    /// Recharge disabled: both times infinite.
    pub fn disabled(n_minus_dark_eq: f64) -> Self {
        Self {
            t_r1: f64::INFINITY,
            t_r2: f64::INFINITY,
            weight1: 1.0,
            n_minus_dark_eq,
            temperature_coefficient: 0.0,
            reference_temperature: default_reference_temperature(),
        }
    }

    pub fn is_disabled(&self) -> bool {
        self.t_r1.is_infinite() && self.t_r2.is_infinite()
    }

    /// Parameters at `temperature` after applying the temperature hook.
    pub fn at_temperature(&self, temperature: f64) -> RechargeParams {
        if self.temperature_coefficient == 0.0 {
            return *self;
        }
        let scale = (1.0 + self.temperature_coefficient * (temperature - self.reference_temperature))
            .max(1e-6);
        RechargeParams {
            t_r1: self.t_r1 / scale,
            t_r2: self.t_r2 / scale,
            ..*self
        }
    }
}

/// Optical pumping, charge conversion and per-channel brightness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionParams {
    /// counts/s per W into the NV⁻ channel at n_minus = 1, unpolarized.
    pub brightness_minus: f64,
    /// counts/s per W into the NV⁰ channel at n_minus = 0.
    pub brightness_zero: f64,
    /// Fractional fluorescence reduction for s_eff = +1 (all m_S = ±1).
    pub spin_contrast: f64,
    /// Polarization reached under saturating illumination. Negative values
    /// point toward m_S = 0 (brighter).
    pub s_max: f64,
    /// W
    pub sat_power_spin: f64,
    /// W
    pub sat_power_charge: f64,
    /// Pumping time scale (s): rates are P / (P_sat * t_c_unit).
    pub t_c_unit: f64,
    /// Steady-state NV⁻ fraction for P → 0.
    pub f_low: f64,
    /// Steady-state NV⁻ fraction for P → ∞.
    pub f_high: f64,
    pub crosstalk_minus_in_zero: f64,
    pub crosstalk_zero_in_minus: f64,
    /// When set, illumination does not move the charge state.
    #[serde(default)]
    pub frozen_charge: bool,
}

impl EmissionParams {
    pub fn validate(&self) -> Result<()> {
        let key = |k: &str| format!("physics.emission.{k}");
        for (k, v) in [
            ("brightness_minus", self.brightness_minus),
            ("brightness_zero", self.brightness_zero),
            ("sat_power_spin", self.sat_power_spin),
            ("sat_power_charge", self.sat_power_charge),
            ("t_c_unit", self.t_c_unit),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(key(k), format!("must be finite and > 0, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.spin_contrast) {
            return Err(Error::config(key("spin_contrast"), "must lie in [0, 1)"));
        }
        if !(-1.0..=1.0).contains(&self.s_max) {
            return Err(Error::config(key("s_max"), "must lie in [-1, 1]"));
        }
        for (k, v) in [("f_low", self.f_low), ("f_high", self.f_high)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(key(k), format!("must lie in (0, 1), got {v}")));
            }
        }
        if !(self.f_high < self.f_low) {
            return Err(Error::config(key("f_high"), "must be below f_low"));
        }
        for (k, v) in [
            ("crosstalk_minus_in_zero", self.crosstalk_minus_in_zero),
            ("crosstalk_zero_in_minus", self.crosstalk_zero_in_minus),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::config(key(k), "must lie in [0, 1)"));
            }
        }
        Ok(())
    }

    pub fn charge_rate(&self, power: f64) -> f64 {
        if self.frozen_charge {
            0.0
        } else {
            power / (self.sat_power_charge * self.t_c_unit)
        }
    }

    pub fn spin_rate(&self, power: f64) -> f64 {
        power / (self.sat_power_spin * self.t_c_unit)
    }

    pub fn spin_target(&self, power: f64) -> f64 {
        self.s_max * power / (power + self.sat_power_spin)
    }
}

/// `f_high + (f_low - f_high) / (1 + P / P_sat)`.
pub fn steady_state_fraction(power: f64, params: &EmissionParams) -> Result<f64> {
    if !(power >= 0.0) {
        return Err(Error::domain(format!("power must be >= 0, got {power}")));
    }
    Ok(params.f_high + (params.f_low - params.f_high) / (1.0 + power / params.sat_power_charge))
}

/// Instantaneous charge fraction and spin polarization of the ensemble.
///
/// `s_addr` belongs to the orientation the π pulse addresses, `s_rest` is
/// the mean of the other three. Positive polarization means population in
/// m_S = ±1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    pub n_minus: f64,
    pub s_addr: f64,
    pub s_rest: f64,
    /// NV⁰ excess over dark equilibrium split into fast and slow recharge
    /// pools. Created on entry to darkness, dropped by illumination.
    #[serde(skip)]
    pools: Option<[f64; 2]>,
}

impl EnsembleState {
    pub fn new(n_minus: f64, s_addr: f64, s_rest: f64) -> Result<Self> {
        let s = Self {
            n_minus,
            s_addr,
            s_rest,
            pools: None,
        };
        s.check()?;
        Ok(s)
    }

    pub fn dark_equilibrium(recharge: &RechargeParams) -> Self {
        Self {
            n_minus: recharge.n_minus_dark_eq,
            s_addr: 0.0,
            s_rest: 0.0,
            pools: None,
        }
    }

    pub fn n_zero(&self) -> f64 {
        1.0 - self.n_minus
    }

    /// Orientation-weighted polarization: one addressed, three others.
    pub fn s_eff(&self) -> f64 {
        0.25 * (self.s_addr + 3.0 * self.s_rest)
    }

    fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.n_minus) {
            return Err(Error::domain(format!("n_minus {} outside [0, 1]", self.n_minus)));
        }
        for s in [self.s_addr, self.s_rest] {
            if !(-1.0..=1.0).contains(&s) {
                return Err(Error::domain(format!("polarization {s} outside [-1, 1]")));
            }
        }
        Ok(())
    }
}

fn decay(dt: f64, tau: f64) -> f64 {
    if tau.is_infinite() {
        1.0
    } else {
        (-dt / tau).exp()
    }
}

/// Free evolution in the dark: spin relaxation with `t1` and biexponential
/// recharge of the NV⁰ excess.
///
/// The fast/slow split of the excess is fixed when darkness begins, so
/// consecutive dark intervals compose exactly.
pub fn evolve_dark(
    state: &EnsembleState,
    dt: f64,
    t1: f64,
    recharge: &RechargeParams,
) -> Result<EnsembleState> {
    if !(dt >= 0.0) {
        return Err(Error::domain(format!("dark duration must be >= 0, got {dt}")));
    }
    if !(t1 > 0.0) {
        return Err(Error::domain(format!("T1 must be > 0, got {t1}")));
    }
    if dt == 0.0 {
        return Ok(*state);
    }
    let spin = decay(dt, t1);
    let mut out = *state;
    out.s_addr *= spin;
    out.s_rest *= spin;
    if !recharge.is_disabled() {
        let [x1, x2] = state.pools.unwrap_or_else(|| {
            let excess = recharge.n_minus_dark_eq - state.n_minus;
            [recharge.weight1 * excess, (1.0 - recharge.weight1) * excess]
        });
        let pools = [x1 * decay(dt, recharge.t_r1), x2 * decay(dt, recharge.t_r2)];
        out.n_minus = (recharge.n_minus_dark_eq - pools[0] - pools[1]).clamp(0.0, 1.0);
        out.pools = Some(pools);
    }
    Ok(out)
}

/// Illumination at `power`: exponential approach of the charge fraction to
/// its steady state and of both polarizations to the pumping target.
/// Spin relaxation is negligible against optical pumping and is ignored.
pub fn evolve_laser(
    state: &EnsembleState,
    dt: f64,
    power: f64,
    params: &EmissionParams,
) -> Result<EnsembleState> {
    if !(dt >= 0.0) || !(power >= 0.0) {
        return Err(Error::domain(format!(
            "laser segment needs dt >= 0 and power >= 0, got dt={dt}, P={power}"
        )));
    }
    if dt == 0.0 || power == 0.0 {
        return Ok(*state);
    }
    let targets = LaserTargets::new(state, power, params)?;
    let ec = (-targets.charge_rate * dt).exp();
    let ep = (-targets.spin_rate * dt).exp();
    Ok(EnsembleState {
        n_minus: (targets.n_inf + (state.n_minus - targets.n_inf) * ec).clamp(0.0, 1.0),
        s_addr: (targets.s_inf + (state.s_addr - targets.s_inf) * ep).clamp(-1.0, 1.0),
        s_rest: (targets.s_inf + (state.s_rest - targets.s_inf) * ep).clamp(-1.0, 1.0),
        pools: None,
    })
}

/// Inverts the addressed orientation.
pub fn apply_pi_pulse(state: &EnsembleState) -> EnsembleState {
    EnsembleState {
        s_addr: -state.s_addr,
        ..*state
    }
}

/// Ideal (pre-detector) count rates `(NV⁻ channel, NV⁰ channel)`.
pub fn emission_rates(state: &EnsembleState, power: f64, params: &EmissionParams) -> (f64, f64) {
    let r_minus =
        params.brightness_minus * power * state.n_minus * (1.0 - params.spin_contrast * state.s_eff());
    let r_zero = params.brightness_zero * power * (1.0 - state.n_minus);
    mix_channels(r_minus, r_zero, params)
}

fn mix_channels(r_minus: f64, r_zero: f64, params: &EmissionParams) -> (f64, f64) {
    (
        r_minus + params.crosstalk_zero_in_minus * r_zero,
        r_zero + params.crosstalk_minus_in_zero * r_minus,
    )
}

struct LaserTargets {
    n_inf: f64,
    s_inf: f64,
    charge_rate: f64,
    spin_rate: f64,
}

impl LaserTargets {
    fn new(state: &EnsembleState, power: f64, params: &EmissionParams) -> Result<Self> {
        let n_inf = if params.frozen_charge {
            state.n_minus
        } else {
            steady_state_fraction(power, params)?
        };
        Ok(Self {
            n_inf,
            s_inf: params.spin_target(power),
            charge_rate: params.charge_rate(power),
            spin_rate: params.spin_rate(power),
        })
    }
}

/// Ideal emission integrated over an illuminated window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowIntegral {
    /// Expected NV⁻-channel photons (before detector).
    pub counts_minus: f64,
    /// Expected NV⁰-channel photons (before detector).
    pub counts_zero: f64,
    /// Time-averaged NV⁻ fraction over the window.
    pub mean_n_minus: f64,
}

/// `∫_0^T e^{-k t} dt`.
fn exp_integral(k: f64, t: f64) -> f64 {
    if k * t < 1e-12 {
        t * (1.0 - 0.5 * k * t)
    } else {
        -(-k * t).exp_m1() / k
    }
}

/// Closed-form integral of [`emission_rates`] over `dt` seconds of
/// illumination starting from `state`.
pub fn integrate_window(
    state: &EnsembleState,
    dt: f64,
    power: f64,
    params: &EmissionParams,
) -> Result<WindowIntegral> {
    if !(dt > 0.0) || !(power >= 0.0) {
        return Err(Error::domain(format!(
            "window needs dt > 0 and power >= 0, got dt={dt}, P={power}"
        )));
    }
    if power == 0.0 {
        return Ok(WindowIntegral {
            counts_minus: 0.0,
            counts_zero: 0.0,
            mean_n_minus: state.n_minus,
        });
    }
    let tg = LaserTargets::new(state, power, params)?;
    let c = params.spin_contrast;
    let dn = state.n_minus - tg.n_inf;
    let ds = state.s_eff() - tg.s_inf;
    let ic = exp_integral(tg.charge_rate, dt);
    let ip = exp_integral(tg.spin_rate, dt);
    let icp = exp_integral(tg.charge_rate + tg.spin_rate, dt);

    // n(t) (1 - c s(t)) with n, s each relaxing exponentially.
    let bright_fraction = tg.n_inf * (1.0 - c * tg.s_inf) * dt + dn * (1.0 - c * tg.s_inf) * ic
        - c * tg.n_inf * ds * ip
        - c * dn * ds * icp;
    let n_integral = tg.n_inf * dt + dn * ic;

    let r_minus = params.brightness_minus * power * bright_fraction;
    let r_zero = params.brightness_zero * power * (dt - n_integral);
    let (m, z) = mix_channels(r_minus, r_zero, params);
    Ok(WindowIntegral {
        counts_minus: m,
        counts_zero: z,
        mean_n_minus: n_integral / dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn emission() -> EmissionParams {
        EmissionParams {
            brightness_minus: 2.0e11,
            brightness_zero: 1.0e11,
            spin_contrast: 0.3,
            s_max: -0.9,
            sat_power_spin: 1.0e-6,
            sat_power_charge: 3.1733e-4,
            t_c_unit: 5.0e-5,
            f_low: 0.65,
            f_high: 0.18,
            crosstalk_minus_in_zero: 0.0,
            crosstalk_zero_in_minus: 0.0,
            frozen_charge: false,
        }
    }

    fn recharge(w1: f64) -> RechargeParams {
        RechargeParams {
            t_r1: 50e-6,
            t_r2: 2e-3,
            weight1: w1,
            n_minus_dark_eq: 0.5,
            temperature_coefficient: 0.0,
            reference_temperature: 294.0,
        }
    }

    #[test]
    fn steady_state_at_zero_power_is_f_low() {
        assert_eq!(steady_state_fraction(0.0, &emission()).unwrap(), 0.65);
        assert!(steady_state_fraction(-1.0, &emission()).is_err());
    }

    #[test]
    fn steady_state_root_by_bisection() {
        // Solve f_ss(0.56 mW) = 0.35 for the saturation power by bisection.
        let f = |ps: f64| {
            let p = EmissionParams {
                sat_power_charge: ps,
                ..emission()
            };
            steady_state_fraction(0.56e-3, &p).unwrap() - 0.35
        };
        let (mut lo, mut hi) = (1e-6, 1e-2);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        assert!(f(root).abs() < 1e-12);
        // Closed form: 0.56e-3 / (0.47 / 0.17 - 1).
        assert!((root - 0.56e-3 / (0.47 / 0.17 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn dark_identity_and_limit() {
        let s = EnsembleState::new(0.3, -0.7, -0.6).unwrap();
        assert_eq!(evolve_dark(&s, 0.0, 1e-3, &recharge(0.6)).unwrap(), s);
        let far = evolve_dark(&s, 1e3, 1e-3, &recharge(0.6)).unwrap();
        assert!(far.s_addr.abs() < 1e-9 && far.s_rest.abs() < 1e-9);
        assert!((far.n_minus - 0.5).abs() < 1e-9);
        assert!(evolve_dark(&s, -1.0, 1e-3, &recharge(0.6)).is_err());
    }

    #[test]
    fn single_component_halving() {
        let s = EnsembleState::new(0.3, 0.0, 0.0).unwrap();
        let r = recharge(1.0);
        let out = evolve_dark(&s, r.t_r1 * std::f64::consts::LN_2, 1e-3, &r).unwrap();
        let before = s.n_zero() - (1.0 - r.n_minus_dark_eq);
        let after = out.n_zero() - (1.0 - r.n_minus_dark_eq);
        assert!((after / before - 0.5).abs() < 1e-12);
    }

    #[test]
    fn laser_identity_and_zero_power_hold() {
        let s = EnsembleState::new(0.4, -0.2, 0.1).unwrap();
        assert_eq!(evolve_laser(&s, 0.0, 1e-3, &emission()).unwrap(), s);
        assert_eq!(evolve_laser(&s, 1e-3, 0.0, &emission()).unwrap(), s);
    }

    #[test]
    fn long_pulse_matches_fine_step_integration() {
        let p = emission();
        let power = 0.56e-3;
        let dt = 200e-6;
        let s0 = EnsembleState::new(0.5, 0.0, 0.0).unwrap();
        let out = evolve_laser(&s0, dt, power, &p).unwrap();

        // Forward RK4 on dn/dt = -Γc (n - n∞), ds/dt = -Γp (s - s∞).
        let n_inf = steady_state_fraction(power, &p).unwrap();
        let s_inf = p.spin_target(power);
        let (gc, gp) = (p.charge_rate(power), p.spin_rate(power));
        let steps = 10_000;
        let h = dt / steps as f64;
        let rk4 = |mut y: f64, g: f64, target: f64| {
            let f = |y: f64| -g * (y - target);
            for _ in 0..steps {
                let k1 = f(y);
                let k2 = f(y + 0.5 * h * k1);
                let k3 = f(y + 0.5 * h * k2);
                let k4 = f(y + h * k3);
                y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            y
        };
        let n_num = rk4(0.5, gc, n_inf);
        let s_num = rk4(0.0, gp, s_inf);
        assert!((out.n_minus - n_num).abs() < 1e-9);
        assert!((out.s_addr - s_num).abs() < 1e-9);
        assert!((out.n_minus - n_inf).abs() < 0.01 * n_inf);
        assert!((out.s_addr - s_inf).abs() < 0.01 * s_inf.abs());
    }

    #[test]
    fn pi_pulse_flips_addressed_only() {
        let s = EnsembleState::new(0.4, 0.8, 0.3).unwrap();
        let f = apply_pi_pulse(&s);
        assert_eq!(f.s_addr, -0.8);
        assert_eq!(f.s_rest, s.s_rest);
        assert_eq!(f.n_minus, s.n_minus);
        assert_eq!(apply_pi_pulse(&f), s);
    }

    #[test]
    fn pure_nv_minus_rates() {
        let p = emission();
        let s = EnsembleState::new(1.0, 0.0, 0.0).unwrap();
        let (m, z) = emission_rates(&s, 1e-3, &p);
        assert_eq!(m, p.brightness_minus * 1e-3);
        assert_eq!(z, 0.0);
    }

    #[test]
    fn full_polarization_scales_by_contrast() {
        let p = emission();
        let pol = EnsembleState::new(0.6, 1.0, 1.0).unwrap();
        let thermal = EnsembleState::new(0.6, 0.0, 0.0).unwrap();
        let (a, _) = emission_rates(&pol, 1e-3, &p);
        let (b, _) = emission_rates(&thermal, 1e-3, &p);
        assert!((a / b - (1.0 - p.spin_contrast)).abs() < 1e-15);
    }

    #[test]
    fn polarizing_pulse_ionizes() {
        let p = emission();
        let eq = EnsembleState::dark_equilibrium(&recharge(0.6));
        let after = evolve_laser(&eq, 200e-6, 0.56e-3, &p).unwrap();
        let (m0, z0) = emission_rates(&eq, 0.56e-3, &p);
        let (m1, z1) = emission_rates(&after, 0.56e-3, &p);
        assert!(z1 / m1 > z0 / m0);
    }

    #[test]
    fn window_integral_matches_quadrature() {
        let p = EmissionParams {
            crosstalk_minus_in_zero: 0.02,
            crosstalk_zero_in_minus: 0.05,
            ..emission()
        };
        let s0 = EnsembleState::new(0.48, 0.2, -0.1).unwrap();
        for power in [8e-6, 0.56e-3] {
            let dt = 5e-6;
            let w = integrate_window(&s0, dt, power, &p).unwrap();
            let steps = 20_000;
            let h = dt / steps as f64;
            let (mut m, mut z, mut n) = (0.0, 0.0, 0.0);
            for i in 0..=steps {
                let wgt = if i == 0 || i == steps {
                    0.5
                } else {
                    1.0
                };
                let st = evolve_laser(&s0, i as f64 * h, power, &p).unwrap();
                let (rm, rz) = emission_rates(&st, power, &p);
                m += wgt * rm * h;
                z += wgt * rz * h;
                n += wgt * st.n_minus * h;
            }
            assert!((w.counts_minus - m).abs() / m < 1e-7, "{} vs {m}", w.counts_minus);
            assert!((w.counts_zero - z).abs() / z < 1e-7);
            assert!((w.mean_n_minus - n / dt).abs() < 1e-9);
        }
    }

    #[test]
    fn validation_names_keys() {
        let p = EmissionParams {
            f_high: 0.7,
            ..emission()
        };
        assert!(p.validate().unwrap_err().to_string().contains("physics.emission.f_high"));
        let r = RechargeParams {
            t_r2: 1e-6,
            ..recharge(0.5)
        };
        assert!(r.validate().unwrap_err().to_string().contains("physics.recharge.t_r2"));
    }
}
