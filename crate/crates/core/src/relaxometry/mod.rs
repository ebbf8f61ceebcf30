//! From traces to rates: the subtraction and division evaluations, decay
//! fits, the temperature scan and the charge-ratio statistic.

mod charge_ratio;
mod evaluate;
mod scan;
mod trace;

pub use charge_ratio::{
    calibrate_charge_ratio_mapping, mapping_from_points, ratio_increase_statistic, signal_count_ratio,
    simulate_charge_calibration, true_ratio_increase, CalibrationPoint, ChargeCalibrationSettings,
    ChargeRatioMapping,
};
pub use evaluate::{all_optical_decay, pi_pulse_decay, recharge_decay, DecaySeries};
pub use scan::{temperature_scan, ScanOptions, ScanRow, TemperatureResult, TemperatureScan};
pub use trace::{HalfData, Half, Provenance, RelaxometryTrace, TraceCell, TraceMetadata};
