//! Pulse sequences and their line-oriented text form.
//!
//! ```text
//! REPETITIONS 50000
//! PAUSE 1e-3
//! TAU_LOG 1e-6 30e-3 30
//! LASER 0.56e-3 200e-6
//! DARK 1e-6
//! LASER 0.56e-3 5e-6
//! READ normalization 5e-6
//! DARK tau
//! PI
//! LASER 0.56e-3 5e-6
//! READ signal 5e-6
//! ```
//!
//! `READ` binds to the closest preceding `LASER` and opens at the start of
//! that pulse unless an offset is given (`READ signal 5e-6 1e-6`). `PI`
//! lines are only played in the first half of each cycle.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowLabel {
    Normalization,
    Signal,
}

impl WindowLabel {
    pub const BOTH: [WindowLabel; 2] = [WindowLabel::Normalization, WindowLabel::Signal];

    pub fn name(self) -> &'static str {
        match self {
            WindowLabel::Normalization => "normalization",
            WindowLabel::Signal => "signal",
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            WindowLabel::Normalization => 0,
            WindowLabel::Signal => 1,
        }
    }
}

impl FromStr for WindowLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "normalization" | "norm" => Ok(WindowLabel::Normalization),
            "signal" => Ok(WindowLabel::Signal),
            other => Err(format!("unknown window label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DarkTime {
    Fixed(f64),
    /// The swept relaxation time.
    Tau,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Segment {
    Laser { power: f64, duration: f64 },
    Dark(DarkTime),
    PiPulse,
    Read {
        label: WindowLabel,
        duration: f64,
        offset: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub segments: Vec<Segment>,
    pub repetitions: u64,
    /// Dark pause between cycles (s).
    pub pause: f64,
    /// Swept τ values (s), strictly ascending.
    pub taus: Vec<f64>,
    pub sweeps: u32,
}

impl PulseSequence {
    /// Polarize, gap, normalization readout, τ (with optional π), signal
    /// readout; all laser pulses at `power`.
    pub fn standard(power: f64, taus: Vec<f64>, repetitions: u64) -> Self {
        Self {
            segments: vec![
                Segment::Laser {
                    power,
                    duration: 200e-6,
                },
                Segment::Dark(DarkTime::Fixed(1e-6)),
                Segment::Laser {
                    power,
                    duration: 5e-6,
                },
                Segment::Read {
                    label: WindowLabel::Normalization,
                    duration: 5e-6,
                    offset: 0.0,
                },
                Segment::Dark(DarkTime::Tau),
                Segment::PiPulse,
                Segment::Laser {
                    power,
                    duration: 5e-6,
                },
                Segment::Read {
                    label: WindowLabel::Signal,
                    duration: 5e-6,
                    offset: 0.0,
                },
            ],
            repetitions,
            pause: 1e-3,
            taus,
            sweeps: 1,
        }
    }

    /// All-optical variant for charge readout at high power: no π pulse,
    /// and both windows open 1 µs into their pulse, after the spin has
    /// repolarized, so the NV⁻ channel reflects the charge state only.
    pub fn charge_readout(power: f64, taus: Vec<f64>, repetitions: u64) -> Self {
        let gated = |label| {
            [
                Segment::Laser {
                    power,
                    duration: 6e-6,
                },
                Segment::Read {
                    label,
                    duration: 5e-6,
                    offset: 1e-6,
                },
            ]
        };
        let mut segments = vec![
            Segment::Laser {
                power,
                duration: 200e-6,
            },
            Segment::Dark(DarkTime::Fixed(1e-6)),
        ];
        segments.extend(gated(WindowLabel::Normalization));
        segments.push(Segment::Dark(DarkTime::Tau));
        segments.extend(gated(WindowLabel::Signal));
        Self {
            segments,
            repetitions,
            pause: 1e-3,
            taus,
            sweeps: 1,
        }
    }

    pub fn with_power(mut self, new_power: f64) -> Self {
        for seg in &mut self.segments {
            if let Segment::Laser { power, .. } = seg {
                *power = new_power;
            }
        }
        self
    }

    pub fn with_repetitions(mut self, repetitions: u64) -> Self {
        self.repetitions = repetitions;
        self
    }

    pub fn has_pi_pulse(&self) -> bool {
        self.segments.iter().any(|s| matches!(s, Segment::PiPulse))
    }

    /// Power of the laser pulse carrying the signal window.
    pub fn readout_power(&self) -> Option<f64> {
        let mut last = None;
        for seg in &self.segments {
            match seg {
                Segment::Laser { power, .. } => last = Some(*power),
                Segment::Read {
                    label: WindowLabel::Signal,
                    ..
                } => return last,
                _ => {}
            }
        }
        None
    }

    pub fn window_duration(&self, label: WindowLabel) -> Option<f64> {
        self.segments.iter().find_map(|s| match s {
            Segment::Read {
                label: l, duration, ..
            } if *l == label => Some(*duration),
            _ => None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            return Err(Error::Sequence("repetitions must be >= 1".into()));
        }
        if self.sweeps < 1 {
            return Err(Error::Sequence("sweeps must be >= 1".into()));
        }
        if !(self.pause >= 0.0) {
            return Err(Error::Sequence("pause must be >= 0".into()));
        }
        if self.taus.is_empty() {
            return Err(Error::Sequence("empty tau sweep".into()));
        }
        if self.taus.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::Sequence("tau values must be finite and >= 0".into()));
        }
        if self.taus.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Sequence("tau sweep must be strictly ascending".into()));
        }
        let mut enclosing: Option<f64> = None;
        let mut counts = [0usize; 2];
        for (i, seg) in self.segments.iter().enumerate() {
            match *seg {
                Segment::Laser { power, duration } => {
                    if !(power >= 0.0) || !(duration > 0.0) {
                        return Err(Error::Sequence(format!(
                            "segment {}: laser needs power >= 0 and duration > 0",
                            i + 1
                        )));
                    }
                    enclosing = Some(duration);
                }
                Segment::Dark(DarkTime::Fixed(d)) => {
                    if !(d >= 0.0) {
                        return Err(Error::Sequence(format!(
                            "segment {}: negative dark time",
                            i + 1
                        )));
                    }
                    enclosing = None;
                }
                Segment::Dark(DarkTime::Tau) | Segment::PiPulse => enclosing = None,
                Segment::Read {
                    label,
                    duration,
                    offset,
                } => {
                    let Some(laser) = enclosing else {
                        return Err(Error::Sequence(format!(
                            "segment {}: READ {} is not inside a LASER segment",
                            i + 1,
                            label.name()
                        )));
                    };
                    if !(duration > 0.0) || !(offset >= 0.0) {
                        return Err(Error::Sequence(format!(
                            "segment {}: window needs duration > 0 and offset >= 0",
                            i + 1
                        )));
                    }
                    if offset + duration > laser * (1.0 + 1e-12) {
                        return Err(Error::Sequence(format!(
                            "segment {}: READ {} ({} s at offset {} s) exceeds its {} s laser pulse",
                            i + 1,
                            label.name(),
                            duration,
                            offset,
                            laser
                        )));
                    }
                    counts[label.index()] += 1;
                }
            }
        }
        for label in WindowLabel::BOTH {
            if counts[label.index()] != 1 {
                return Err(Error::Sequence(format!(
                    "expected exactly one READ {} window, found {}",
                    label.name(),
                    counts[label.index()]
                )));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut seq = PulseSequence {
            segments: Vec::new(),
            repetitions: 1,
            pause: 0.0,
            taus: Vec::new(),
            sweeps: 1,
        };
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let keyword = tokens.next().unwrap_or_default().to_ascii_uppercase();
            let args: Vec<&str> = tokens.collect();
            let num = |i: usize| -> Result<f64> {
                let tok = args
                    .get(i)
                    .ok_or_else(|| Error::parse(line_no, format!("{keyword}: missing argument {}", i + 1)))?;
                tok.parse::<f64>()
                    .map_err(|_| Error::parse(line_no, format!("{keyword}: `{tok}` is not a number")))
            };
            let expect_args = |n: std::ops::RangeInclusive<usize>| -> Result<()> {
                if n.contains(&args.len()) {
                    Ok(())
                } else {
                    Err(Error::parse(
                        line_no,
                        format!("{keyword}: expected {n:?} arguments, got {}", args.len()),
                    ))
                }
            };
            match keyword.as_str() {
                "REPETITIONS" => {
                    expect_args(1..=1)?;
                    seq.repetitions = args[0].parse().map_err(|_| {
                        Error::parse(line_no, "REPETITIONS needs a positive integer")
                    })?;
                }
                "SWEEPS" => {
                    expect_args(1..=1)?;
                    seq.sweeps = args[0]
                        .parse()
                        .map_err(|_| Error::parse(line_no, "SWEEPS needs a positive integer"))?;
                }
                "PAUSE" => {
                    expect_args(1..=1)?;
                    seq.pause = num(0)?;
                }
                "TAU" => {
                    if args.is_empty() {
                        return Err(Error::parse(line_no, "TAU needs at least one value"));
                    }
                    for i in 0..args.len() {
                        seq.taus.push(num(i)?);
                    }
                }
                "TAU_LOG" => {
                    expect_args(3..=3)?;
                    let (lo, hi) = (num(0)?, num(1)?);
                    let n: usize = args[2]
                        .parse()
                        .map_err(|_| Error::parse(line_no, "TAU_LOG count must be an integer"))?;
                    if !(lo > 0.0 && hi > lo) || n < 2 {
                        return Err(Error::parse(line_no, "TAU_LOG needs 0 < start < stop and n >= 2"));
                    }
                    seq.taus.extend(log_spaced(lo, hi, n));
                }
                "LASER" => {
                    expect_args(2..=2)?;
                    seq.segments.push(Segment::Laser {
                        power: num(0)?,
                        duration: num(1)?,
                    });
                }
                "DARK" => {
                    expect_args(1..=1)?;
                    let d = if args[0].eq_ignore_ascii_case("tau") {
                        DarkTime::Tau
                    } else {
                        DarkTime::Fixed(num(0)?)
                    };
                    seq.segments.push(Segment::Dark(d));
                }
                "PI" => {
                    expect_args(0..=1)?;
                    seq.segments.push(Segment::PiPulse);
                }
                "READ" => {
                    expect_args(2..=3)?;
                    let label = args[0]
                        .parse::<WindowLabel>()
                        .map_err(|e| Error::parse(line_no, e))?;
                    let offset = if args.len() == 3 { num(2)? } else { 0.0 };
                    seq.segments.push(Segment::Read {
                        label,
                        duration: num(1)?,
                        offset,
                    });
                }
                other => {
                    return Err(Error::parse(line_no, format!("unknown keyword `{other}`")));
                }
            }
        }
        seq.validate()?;
        Ok(seq)
    }
}

impl fmt::Display for PulseSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "REPETITIONS {}", self.repetitions)?;
        writeln!(f, "SWEEPS {}", self.sweeps)?;
        writeln!(f, "PAUSE {:e}", self.pause)?;
        for chunk in self.taus.chunks(8) {
            let mut line = String::from("TAU");
            for t in chunk {
                let _ = write!(line, " {t:e}");
            }
            writeln!(f, "{line}")?;
        }
        for seg in &self.segments {
            match seg {
                Segment::Laser { power, duration } => writeln!(f, "LASER {power:e} {duration:e}")?,
                Segment::Dark(DarkTime::Fixed(d)) => writeln!(f, "DARK {d:e}")?,
                Segment::Dark(DarkTime::Tau) => writeln!(f, "DARK tau")?,
                Segment::PiPulse => writeln!(f, "PI")?,
                Segment::Read {
                    label,
                    duration,
                    offset,
                } => {
                    if *offset == 0.0 {
                        writeln!(f, "READ {} {duration:e}", label.name())?
                    } else {
                        writeln!(f, "READ {} {duration:e} {offset:e}", label.name())?
                    }
                }
            }
        }
        Ok(())
    }
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else if i == 0 {
                lo
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}
