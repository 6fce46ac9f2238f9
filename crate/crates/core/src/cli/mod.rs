//! Command-line front end.
//!
//! Every subcommand writes its primary output plus a `<out>.manifest.json`
//! run manifest. Exit codes: 0 success, 2 usage or config error, 3 numerical
//! error, 4 I/O error.

mod commands;
mod manifest;
pub mod plot;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::aging::AgingError;
use crate::chanmodel::{ChannelError, FormatError};
use crate::detect::{DecoderKind, DetectError};
use crate::overhead::OverheadError;

pub use manifest::{manifest_path, RunManifest};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<ChannelError> for CliError {
    fn from(e: ChannelError) -> Self {
        match e {
            ChannelError::ZeroChannel { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::TraceTooShort { .. } | DetectError::TooManyStreams { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<AgingError> for CliError {
    fn from(e: AgingError) -> Self {
        match e {
            AgingError::Detect(d) => d.into(),
            AgingError::Channel(c) => c.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<OverheadError> for CliError {
    fn from(e: OverheadError) -> Self {
        match e {
            OverheadError::Infeasible { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mimo-aging",
    version,
    about = "Massive MIMO uplink sum-rate, channel aging and training overhead"
)]
pub struct Cli {
    /// Worker threads; 0 uses one per core. Outputs do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic channel trace from a JSON scenario.
    Generate(GenerateArgs),
    /// Delayed-decoder achievable sum-rate over a trace.
    Sumrate(SumrateArgs),
    /// Expected sum-rate versus resounding interval.
    Aging(AgingArgs),
    /// Temporal correlation profile and coherence time.
    Coherence(CoherenceArgs),
    /// Displacement at 10% decorrelation versus azimuth sub-array size.
    D10(D10Args),
    /// OFDM training overhead versus velocity.
    Overhead(OverheadArgs),
    /// Render CSV columns as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep raw channel gains instead of normalizing each user to unit mean power.
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SumrateArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, default_value = "zf")]
    pub decoder: DecoderKind,
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub snr_db: f64,
    #[arg(long, default_value_t = 0)]
    pub delta_samples: usize,
    /// Apply Δ literally, allowing a decoder to be used on its own snapshot.
    #[arg(long)]
    pub exact_delta: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Key/value summary CSV.
    #[arg(long)]
    pub summary_out: Option<PathBuf>,
    /// Empirical CDF of the sum-rate.
    #[arg(long)]
    pub cdf_out: Option<PathBuf>,
    #[arg(long, default_value_t = crate::detect::DEFAULT_CDF_BINS)]
    pub cdf_bins: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DecoderChoice {
    Zf,
    Mf,
    Both,
}

impl DecoderChoice {
    pub fn kinds(&self) -> Vec<DecoderKind> {
        match self {
            DecoderChoice::Zf => vec![DecoderKind::Zf],
            DecoderChoice::Mf => vec![DecoderKind::Mf],
            DecoderChoice::Both => DecoderKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct AgingArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    pub decoder: DecoderChoice,
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub snr_db: f64,
    /// Largest resounding interval in samples; Δ runs over 1..=max.
    #[arg(long, default_value_t = 4)]
    pub max_delta: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CoherenceArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    pub threshold: f64,
    /// Defaults to T - 1.
    #[arg(long)]
    pub max_lag: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Full `lag_ms,correlation` profile.
    #[arg(long)]
    pub profile_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct D10Args {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub azimuth_sizes: Vec<usize>,
    /// Terminal speed in m/s.
    #[arg(long)]
    pub speed: f64,
    #[arg(long, default_value_t = 4)]
    pub elevation_rows: usize,
    #[arg(long, default_value = "zf")]
    pub decoder: DecoderKind,
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub snr_db: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Cubic spline trend through the d10 and rate points.
    #[arg(long)]
    pub trend_out: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub trend_resolution: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct OverheadArgs {
    #[arg(long, default_value_t = 300e3)]
    pub bc_hz: f64,
    #[arg(long, default_value_t = 15e3)]
    pub bs_hz: f64,
    #[arg(long, default_value_t = 71.4)]
    pub ts_us: f64,
    #[arg(long, default_value_t = 1200)]
    pub subcarriers: usize,
    /// Users to train; defaults to half the antennas.
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub elevation_rows: usize,
    #[arg(long, default_value_t = 125.0)]
    pub tc_ref_ms: f64,
    #[arg(long, default_value_t = 8.0556)]
    pub v_ref: f64,
    /// Fixed coherence time for every velocity, overriding the reference scaling.
    #[arg(long)]
    pub tc_ms: Option<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "10,20,30,40,50,60,70,80,90,100"
    )]
    pub velocities: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "25")]
    pub azimuth_sizes: Vec<usize>,
    /// CSV with `m_azimuth` and `d10_wavelengths` columns (as written by `d10`).
    #[arg(long)]
    pub d10_table: Option<PathBuf>,
    #[arg(long, default_value_t = 0.081)]
    pub wavelength: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PlotArgs {
    #[arg(long)]
    pub csv: PathBuf,
    /// X column; ignored in CDF mode.
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub y: Vec<String>,
    /// Plot the empirical CDF of each y column.
    #[arg(long)]
    pub cdf: bool,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Sumrate(a) => commands::sumrate(a),
        Command::Aging(a) => commands::aging(a),
        Command::Coherence(a) => commands::coherence(a),
        Command::D10(a) => commands::d10(a),
        Command::Overhead(a) => commands::overhead(a),
        Command::Plot(a) => commands::plot(a),
    })
}
