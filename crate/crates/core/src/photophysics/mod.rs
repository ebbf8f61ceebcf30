//! Ensemble photophysics: charge and spin dynamics, pulse sequences and the
//! sequence simulator.

mod sequence;
mod simulate;
mod state;

pub use sequence::{log_spaced, DarkTime, PulseSequence, Segment, WindowLabel};
pub use simulate::{run_sequence, run_sequence_with, SimulationOptions};
pub use state::{
    apply_pi_pulse, emission_rates, evolve_dark, evolve_laser, integrate_window,
    steady_state_fraction, EmissionParams, EnsembleState, RechargeParams, WindowIntegral,
};
