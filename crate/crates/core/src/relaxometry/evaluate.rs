use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::trace::{Half, RelaxometryTrace};
use crate::detection::Channel;
use crate::error::{Error, Result};
use crate::photophysics::WindowLabel;

/// An evaluated curve `y(τ) ± σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub taus: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl DecaySeries {
    pub fn to_csv(&self, y_name: &str) -> String {
        let mut out = format!("tau_s,{y_name},{y_name}_std\n");
        for i in 0..self.taus.len() {
            let _ = writeln!(out, "{},{},{}", self.taus[i], self.y[i], self.sigma[i]);
        }
        out
    }
}

/// NV⁻ signal window without π minus with π. The with-π normalization
/// window is not used.
pub fn pi_pulse_decay(trace: &RelaxometryTrace) -> Result<DecaySeries> {
    trace.half(Half::WithPi)?;
    trace.half(Half::WithoutPi)?;
    let mut y = Vec::with_capacity(trace.taus.len());
    let mut sigma = Vec::with_capacity(trace.taus.len());
    for i in 0..trace.taus.len() {
        let a = trace.cell(Half::WithoutPi, i, WindowLabel::Signal, Channel::Minus)?;
        let b = trace.cell(Half::WithPi, i, WindowLabel::Signal, Channel::Minus)?;
        y.push(a.mean - b.mean);
        sigma.push(trace.sem(a).hypot(trace.sem(b)));
    }
    Ok(DecaySeries {
        taus: trace.taus.clone(),
        y,
        sigma,
    })
}

fn window_ratio(trace: &RelaxometryTrace, channel: Channel) -> Result<DecaySeries> {
    let mut y = Vec::with_capacity(trace.taus.len());
    let mut sigma = Vec::with_capacity(trace.taus.len());
    for i in 0..trace.taus.len() {
        let s = trace.cell(Half::WithoutPi, i, WindowLabel::Signal, channel)?;
        let n = trace.cell(Half::WithoutPi, i, WindowLabel::Normalization, channel)?;
        if !(n.mean > 0.0) {
            return Err(Error::DegenerateTrace(format!(
                "{} channel normalization counts are {} at tau = {} s",
                channel.name(),
                n.mean,
                trace.taus[i]
            )));
        }
        let r = s.mean / n.mean;
        let rel_s = if s.mean != 0.0 { trace.sem(s) / s.mean } else { 0.0 };
        let rel_n = trace.sem(n) / n.mean;
        y.push(r);
        sigma.push(if s.mean != 0.0 {
            r.abs() * rel_s.hypot(rel_n)
        } else {
            trace.sem(s) / n.mean
        });
    }
    Ok(DecaySeries {
        taus: trace.taus.clone(),
        y,
        sigma,
    })
}

/// NV⁻ signal over normalization in the without-π half.
pub fn all_optical_decay(trace: &RelaxometryTrace) -> Result<DecaySeries> {
    window_ratio(trace, Channel::Minus)
}

/// NV⁰ signal over normalization in the without-π half.
pub fn recharge_decay(trace: &RelaxometryTrace) -> Result<DecaySeries> {
    window_ratio(trace, Channel::Zero)
}
