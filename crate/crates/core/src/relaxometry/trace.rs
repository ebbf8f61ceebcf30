use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::detection::{Channel, DetectorConfig};
use crate::error::{Error, Result};
use crate::photophysics::WindowLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Half {
    WithPi,
    WithoutPi,
}

impl Half {
    pub fn name(self) -> &'static str {
        match self {
            Half::WithPi => "with_pi",
            Half::WithoutPi => "without_pi",
        }
    }
}

/// Whether cells hold raw counts per window or corrected rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Raw,
    Corrected,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Raw => "raw",
            Provenance::Corrected => "corrected",
        }
    }
}

/// Mean and standard deviation over repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceCell {
    pub mean: f64,
    pub std: f64,
}

/// Cells of one half, indexed `[tau][window][channel]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfData {
    pub cells: Vec<[[TraceCell; 2]; 2]>,
    /// Simulator ground truth: time-averaged NV⁻ fraction per `[tau][window]`.
    pub true_n_minus: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    /// Power of the readout pulse (W).
    pub laser_power: f64,
    pub temperature: f64,
    pub repetitions: u64,
    pub sweeps: u32,
    /// Window durations (s), `[normalization, signal]`.
    pub window_durations: [f64; 2],
    pub provenance: Provenance,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxometryTrace {
    pub taus: Vec<f64>,
    pub with_pi: Option<HalfData>,
    pub without_pi: Option<HalfData>,
    pub metadata: TraceMetadata,
}

impl RelaxometryTrace {
    pub fn half(&self, half: Half) -> Result<&HalfData> {
        let data = match half {
            Half::WithPi => self.with_pi.as_ref(),
            Half::WithoutPi => self.without_pi.as_ref(),
        };
        data.ok_or_else(|| Error::Structure(format!("trace has no {} half", half.name())))
    }

    pub fn cell(&self, half: Half, tau_index: usize, window: WindowLabel, channel: Channel) -> Result<TraceCell> {
        let data = self.half(half)?;
        data.cells
            .get(tau_index)
            .map(|c| c[window.index()][channel.index()])
            .ok_or_else(|| Error::Structure(format!("tau index {tau_index} out of range")))
    }

    /// Number of cycles averaged into every cell.
    pub fn samples(&self) -> u64 {
        self.metadata.repetitions * self.metadata.sweeps as u64
    }

    /// Standard error of a cell mean.
    pub fn sem(&self, cell: TraceCell) -> f64 {
        cell.std / (self.samples() as f64).sqrt()
    }

    pub fn check(&self) -> Result<()> {
        if self.with_pi.is_none() && self.without_pi.is_none() {
            return Err(Error::Structure("trace holds neither half".into()));
        }
        for data in [&self.with_pi, &self.without_pi].into_iter().flatten() {
            if data.cells.len() != self.taus.len() || data.true_n_minus.len() != self.taus.len() {
                return Err(Error::Structure("cell grid does not match the tau list".into()));
            }
            let ok = data.cells.iter().flatten().flatten().all(|c| {
                c.std >= 0.0 && c.mean.is_finite() && (c.mean >= 0.0 || self.metadata.provenance == Provenance::Corrected)
            });
            if !ok {
                return Err(Error::Structure("negative or non-finite cell".into()));
            }
        }
        Ok(())
    }

    /// Converts window counts to dark-subtracted, ND-corrected rates (counts/s).
    pub fn corrected(&self, detector: &DetectorConfig) -> Result<RelaxometryTrace> {
        if self.metadata.provenance == Provenance::Corrected {
            return Ok(self.clone());
        }
        let durations = self.metadata.window_durations;
        let fix = |data: &HalfData| -> HalfData {
            let cells = data
                .cells
                .iter()
                .map(|per_window| {
                    let mut out = *per_window;
                    for w in WindowLabel::BOTH {
                        for ch in Channel::BOTH {
                            let dur = durations[w.index()];
                            let t = detector.transmission(ch);
                            let c = per_window[w.index()][ch.index()];
                            out[w.index()][ch.index()] = TraceCell {
                                mean: (c.mean / dur - detector.dark_rate(ch)) / t,
                                std: c.std / dur / t,
                            };
                        }
                    }
                    out
                })
                .collect();
            HalfData {
                cells,
                true_n_minus: data.true_n_minus.clone(),
            }
        };
        Ok(RelaxometryTrace {
            taus: self.taus.clone(),
            with_pi: self.with_pi.as_ref().map(fix),
            without_pi: self.without_pi.as_ref().map(fix),
            metadata: TraceMetadata {
                provenance: Provenance::Corrected,
                ..self.metadata.clone()
            },
        })
    }

    /// Long-format table, one row per (τ, half, window, channel).
    pub fn to_csv(&self) -> String {
        let m = &self.metadata;
        let mut out = String::new();
        let _ = writeln!(out, "# provenance = {}", m.provenance.name());
        let _ = writeln!(out, "# laser_power_w = {}", m.laser_power);
        let _ = writeln!(out, "# temperature_k = {}", m.temperature);
        let _ = writeln!(out, "# repetitions = {}", m.repetitions);
        let _ = writeln!(out, "# sweeps = {}", m.sweeps);
        let _ = writeln!(out, "# window_normalization_s = {}", m.window_durations[0]);
        let _ = writeln!(out, "# window_signal_s = {}", m.window_durations[1]);
        let _ = writeln!(out, "# seed = {}", m.seed);
        let unit = match m.provenance {
            Provenance::Raw => "counts",
            Provenance::Corrected => "counts_per_s",
        };
        let _ = writeln!(out, "tau_s,half,window,channel,mean_{unit},std_{unit},true_n_minus");
        for (half, data) in [(Half::WithPi, &self.with_pi), (Half::WithoutPi, &self.without_pi)] {
            let Some(data) = data else { continue };
            for (i, tau) in self.taus.iter().enumerate() {
                for w in WindowLabel::BOTH {
                    for ch in Channel::BOTH {
                        let c = data.cells[i][w.index()][ch.index()];
                        let _ = writeln!(
                            out,
                            "{tau},{},{},{},{},{},{}",
                            half.name(),
                            w.name(),
                            ch.name(),
                            c.mean,
                            c.std,
                            data.true_n_minus[i][w.index()]
                        );
                    }
                }
            }
        }
        out
    }
}
