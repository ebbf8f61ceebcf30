//! Spectral unmixing: basis construction, decomposition, κ, NV⁻ fractions
//! and ZPL lineshape fits, plus the synthetic spectrum generator.

mod basis;
mod decompose;
pub mod io;
mod kappa;
mod pipeline;
mod synth;
mod zpl;

pub use basis::{build_basis, optimize_delta, BasisSet, DELTA_MAX, DELTA_STEP};
pub use decompose::{decompose, fraction_variance, fraction_variance_by_power, nv_minus_fraction, Decomposition};
pub use kappa::{estimate_kappa, KappaEstimate};
pub use pipeline::{analyze_dataset, simulate_dataset, DatasetAnalysis, FractionRow, KappaRow, TemperatureSpectra};
pub use synth::{
    simulate_kappa_series, simulate_references, simulate_steady_state_spectrum, Lineshape, SidebandBand,
    SpectralModel,
};
pub use zpl::{fit_zpl, ZplComponent, ZplFit};
