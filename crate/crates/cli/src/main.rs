//! `nvrelax`: simulate and analyze NV-center charge-state spectra and
//! relaxometry scans.

mod odmr;
mod output;
mod relax_cmd;
mod spectra_cmd;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nvrelax_core::{Config, DEFAULT_CONFIG_TOML};

use output::{emit, CmdResult, Failure, Manifest, Status};

#[derive(Parser)]
#[command(
    name = "nvrelax",
    version,
    about = "NV-center relaxometry simulator and charge-state analysis",
    allow_negative_numbers = true
)]
struct Cli {
    /// TOML configuration; the bundled defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Record the wall-clock time in output headers (breaks byte-identical reruns).
    #[arg(long, global = true)]
    timestamp: bool,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate reference, kappa-series and sample spectra for every (power, temperature).
    SimulateSpectra {
        /// Comma-separated laser powers (W); defaults to the configured grid.
        #[arg(long, value_delimiter = ',')]
        powers: Option<Vec<f64>>,
        /// Comma-separated temperatures (K); defaults to the configured list.
        #[arg(long, value_delimiter = ',')]
        temps: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build bases, estimate kappa and compute NV- fractions for a spectra directory.
    Decompose {
        /// Directory searched recursively for spectrum files.
        #[arg(long)]
        input: PathBuf,
        /// Use this kappa instead of estimating it from kappa-series spectra.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value_t = 0.0, requires = "kappa")]
        kappa_std: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate and evaluate a relaxometry temperature scan.
    Relaxometry {
        /// Pulse-sequence file; a standard sequence is built when omitted.
        #[arg(long)]
        sequence: Option<PathBuf>,
        /// Readout power (W). At or above the recharge threshold the recharge analysis runs.
        #[arg(long)]
        power: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        temps: Option<Vec<f64>>,
        /// Repetitions per tau.
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Omit the half with the microwave pi pulse and the subtraction evaluation.
        #[arg(long)]
        no_pi: bool,
        /// Charge-ratio mapping from `calibrate`; simulated when omitted on the recharge path.
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate count-ratio calibration pairs and fit the charge-ratio mapping.
    Calibrate {
        /// K; defaults to the spectral reference temperature.
        #[arg(long)]
        temperature: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert zero-field splittings or ODMR resonance pairs to temperatures.
    OdmrTemp {
        #[arg(long)]
        input: PathBuf,
        /// Output table; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print or write the bundled default configuration.
    DefaultConfig {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> CmdResult<Config> {
    match path {
        Some(p) => Config::load(p).map_err(|e| Failure::from(e).in_file(p)),
        None => Ok(Config::default()),
    }
}

fn run(cli: Cli) -> CmdResult<Status> {
    let config_path = cli.config.as_deref();
    let manifest = |name| Manifest::new(name, config_path, cli.timestamp);
    if let Command::DefaultConfig { out } = &cli.command {
        let m = Manifest::new("default-config", None, cli.timestamp);
        emit(out.as_deref(), &m, DEFAULT_CONFIG_TOML)?;
        return Ok(Status::Success);
    }
    let cfg = load_config(config_path)?;
    match cli.command {
        Command::SimulateSpectra { powers, temps, seed, out } => spectra_cmd::simulate_spectra(
            &cfg,
            &spectra_cmd::SimulateSpectra { powers, temps, seed, out },
            manifest("simulate-spectra"),
        ),
        Command::Decompose { input, kappa, kappa_std, out } => spectra_cmd::decompose(
            &cfg,
            &spectra_cmd::Decompose { input, kappa, kappa_std, out },
            manifest("decompose"),
        ),
        Command::Relaxometry { sequence, power, temps, reps, seed, no_pi, calibration, out } => relax_cmd::relaxometry(
            &cfg,
            &relax_cmd::Relaxometry { sequence, power, temps, reps, seed, no_pi, calibration, out },
            manifest("relaxometry"),
        ),
        Command::Calibrate { temperature, seed, out } => relax_cmd::calibrate(
            &cfg,
            &relax_cmd::Calibrate { temperature, seed, out },
            manifest("calibrate"),
        ),
        Command::OdmrTemp { input, out } => odmr::odmr_temp(&cfg, &odmr::OdmrTemp { input, out }, manifest("odmr-temp")),
        Command::DefaultConfig { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
