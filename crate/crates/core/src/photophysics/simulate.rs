use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::sequence::{DarkTime, PulseSequence, Segment, WindowLabel};
use super::state::{
    apply_pi_pulse, evolve_dark, evolve_laser, integrate_window, EnsembleState, WindowIntegral,
};
use crate::config::PhysicsConfig;
use crate::detection::{sample_repeated, Channel, DetectorConfig};
use crate::error::{Error, Result};
use crate::seed::mix;
use crate::relaxometry::{HalfData, Provenance, RelaxometryTrace, TraceCell, TraceMetadata};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    /// Draw Poisson counts. When off, cells hold expected counts and their
    /// Poisson standard deviation.
    pub noise: bool,
    /// Play the first half (with π). Ignored if the sequence has no `PI`.
    pub include_pi_half: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            noise: true,
            include_pi_half: true,
        }
    }
}

/// Simulates `seq` at `temperature` with shot noise.
pub fn run_sequence(
    seq: &PulseSequence,
    physics: &PhysicsConfig,
    detector: &DetectorConfig,
    temperature: f64,
    seed: u64,
) -> Result<RelaxometryTrace> {
    run_sequence_with(seq, physics, detector, temperature, seed, &SimulationOptions::default())
}

pub fn run_sequence_with(
    seq: &PulseSequence,
    physics: &PhysicsConfig,
    detector: &DetectorConfig,
    temperature: f64,
    seed: u64,
    options: &SimulationOptions,
) -> Result<RelaxometryTrace> {
    seq.validate()?;
    physics.validate()?;
    detector.validate()?;
    let t1 = 1.0 / physics.t1_rate(temperature)?;
    let recharge = physics.recharge.at_temperature(temperature);
    let with_pi = options.include_pi_half && seq.has_pi_pulse();
    let power = seq
        .readout_power()
        .ok_or_else(|| Error::Sequence("no signal window".into()))?;
    let durations = [
        seq.window_duration(WindowLabel::Normalization).unwrap_or(0.0),
        seq.window_duration(WindowLabel::Signal).unwrap_or(0.0),
    ];
    let samples = seq.repetitions * seq.sweeps as u64;

    let play = |tau: f64, pi: bool| -> Result<[WindowIntegral; 2]> {
        // The pause t_p ≫ T_R returns every cycle to dark equilibrium.
        let mut state = EnsembleState::dark_equilibrium(&recharge);
        let mut windows: [Option<WindowIntegral>; 2] = [None, None];
        let mut laser: Option<(EnsembleState, f64)> = None;
        for seg in &seq.segments {
            match *seg {
                Segment::Laser { power, duration } => {
                    let start = state;
                    state = evolve_laser(&state, duration, power, &physics.emission)?;
                    laser = Some((start, power));
                }
                Segment::Read {
                    label,
                    duration,
                    offset,
                } => {
                    let (start, p) = laser.expect("validated: READ follows LASER");
                    let at = evolve_laser(&start, offset, p, &physics.emission)?;
                    windows[label.index()] = Some(integrate_window(&at, duration, p, &physics.emission)?);
                }
                Segment::Dark(d) => {
                    let dt = match d {
                        DarkTime::Fixed(v) => v,
                        DarkTime::Tau => tau,
                    };
                    state = evolve_dark(&state, dt, t1, &recharge)?;
                    laser = None;
                }
                Segment::PiPulse => {
                    if pi {
                        state = apply_pi_pulse(&state);
                    }
                    laser = None;
                }
            }
        }
        Ok([
            windows[0].expect("validated: normalization window"),
            windows[1].expect("validated: signal window"),
        ])
    };

    let halves: Vec<(usize, bool)> = if with_pi {
        vec![(0, true), (1, false)]
    } else {
        vec![(1, false)]
    };

    let mut out: [Option<HalfData>; 2] = [None, None];
    for (half_index, pi) in halves {
        let rows: Vec<([[TraceCell; 2]; 2], [f64; 2])> = seq
            .taus
            .par_iter()
            .enumerate()
            .map(|(ti, &tau)| -> Result<_> {
                let integrals = play(tau, pi)?;
                let mut cells = [[TraceCell::default(); 2]; 2];
                for w in WindowLabel::BOTH {
                    let wi = integrals[w.index()];
                    let dur = durations[w.index()];
                    for ch in Channel::BOTH {
                        let photons = match ch {
                            Channel::Minus => wi.counts_minus,
                            Channel::Zero => wi.counts_zero,
                        };
                        if ti == 0 {
                            detector.check_saturation(photons / dur, ch);
                        }
                        let expected =
                            photons * detector.transmission(ch) + detector.dark_rate(ch) * dur;
                        let (mean, std) = if options.noise {
                            let cell_seed = mix(&[
                                seed,
                                temperature.to_bits(),
                                ti as u64,
                                half_index as u64,
                                w.index() as u64,
                                ch.index() as u64,
                            ]);
                            let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
                            sample_repeated(expected, samples, &mut rng)
                        } else {
                            (expected, expected.sqrt())
                        };
                        cells[w.index()][ch.index()] = TraceCell { mean, std };
                    }
                }
                Ok((cells, [integrals[0].mean_n_minus, integrals[1].mean_n_minus]))
            })
            .collect::<Result<_>>()?;
        let (cells, truth) = rows.into_iter().unzip();
        out[half_index] = Some(HalfData {
            cells,
            true_n_minus: truth,
        });
    }

    let [with_pi_data, without_pi_data] = out;
    Ok(RelaxometryTrace {
        taus: seq.taus.clone(),
        with_pi: with_pi_data,
        without_pi: without_pi_data,
        metadata: TraceMetadata {
            laser_power: power,
            temperature,
            repetitions: seq.repetitions,
            sweeps: seq.sweeps,
            window_durations: durations,
            provenance: Provenance::Raw,
            seed,
        },
    })
}
