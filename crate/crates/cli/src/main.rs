//! `spadjpd`: simulate SPAD frame streams, reconstruct coincidence images and
//! analyse their SNR.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numeric or
//! domain error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spad_jpd::snr::NoiseRegion;
use spad_jpd::{Error, SymmetryCenter};

mod commands;
mod config;
mod manifest;

#[derive(Debug, Parser)]
#[command(name = "spadjpd", version, about)]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate frames from a run config and write them as an SPDF stream.
    Simulate(SimulateArgs),
    /// Build a hot-pixel map from 8-bit dark frames.
    Calibrate(CalibrateArgs),
    /// Accumulate a frame stream into a snapshot and an intensity image.
    Reconstruct(ReconstructArgs),
    /// Extract an image from a snapshot.
    Project(ProjectArgs),
    /// Measure SNR, compare with the model and fit its scaling with M.
    Snr(SnrArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Run config (TOML) with [sensor] and [scene] sections.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub frames: u64,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write per-frame event counts to stats.csv.
    #[arg(long)]
    pub stats: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// 8-bit dark frames.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Per-frame count above which a pixel is hot.
    #[arg(long, default_value_t = spad_jpd::io::hotpixel::DEFAULT_THRESHOLD)]
    pub threshold: u8,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    ProjectionOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SymmetryArg {
    PixelCenter,
    PixelCorner,
}

impl From<SymmetryArg> for SymmetryCenter {
    fn from(s: SymmetryArg) -> Self {
        match s {
            SymmetryArg::PixelCenter => SymmetryCenter::PixelCenter,
            SymmetryArg::PixelCorner => SymmetryCenter::PixelCorner,
        }
    }
}

/// Input stream and accumulation layout, shared by `reconstruct` and `snr`.
#[derive(Debug, Args)]
pub struct LayoutArgs {
    /// SPDF frame stream.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Run config supplying [sensor] and optional [reconstruct] defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// ROI extent `W,H`, centred on the origin.
    #[arg(long, value_parser = parse_pair::<u32>)]
    pub roi: Option<(u32, u32)>,
    /// Origin pixel `X,Y` in absolute sensor indices.
    #[arg(long, value_parser = parse_pair::<u32>)]
    pub origin: Option<(u32, u32)>,
    #[arg(long, value_enum)]
    pub symmetry: Option<SymmetryArg>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Accumulate the sum projection (PROJECTION_ONLY).
    #[arg(long)]
    pub sum: bool,
    /// Accumulate the minus projection (PROJECTION_ONLY).
    #[arg(long)]
    pub minus: bool,
    /// Column pair `X1,X2` to accumulate (PROJECTION_ONLY, repeatable).
    #[arg(long, value_parser = parse_pair::<i32>, allow_hyphen_values = true)]
    pub colpair: Vec<(i32, i32)>,
    /// Row pair `Y1,Y2` to accumulate (PROJECTION_ONLY, repeatable).
    #[arg(long, value_parser = parse_pair::<i32>, allow_hyphen_values = true)]
    pub rowpair: Vec<(i32, i32)>,
    /// Conditional reference pixel `X,Y` (PROJECTION_ONLY, repeatable).
    #[arg(long = "ref", value_parser = parse_pair::<i32>, allow_hyphen_values = true)]
    pub reference: Vec<(i32, i32)>,
    /// Hot-pixel map; 8-bit streams are binarized through it.
    #[arg(long)]
    pub hotmap: Option<PathBuf>,
    /// Jackknife blocks per snapshot.
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Use only the first N frames.
    #[arg(long, value_parser = parse_count)]
    pub frames: Option<u64>,
    /// Memory cap for FULL-mode dense counters, in bytes.
    #[arg(long, default_value_t = spad_jpd::jpd::DEFAULT_MEMORY_BUDGET)]
    pub memory_budget: u64,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub layout: LayoutArgs,
    /// Also write one snapshot per frame-count prefix, e.g. `1e4,3e4,1e5`.
    #[arg(long, value_parser = parse_count, value_delimiter = ',')]
    pub sweep: Vec<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Intensity,
    Antidiag,
    Sum,
    Minus,
    Colpair,
    Rowpair,
    Conditional,
    /// Full `s x s` Gamma tensor (FULL mode).
    Dense,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Reference pixel `X,Y` for conditional images.
    #[arg(long = "ref", value_parser = parse_pair::<i32>, allow_hyphen_values = true)]
    pub reference: Option<(i32, i32)>,
    #[arg(long, allow_hyphen_values = true)]
    pub x1: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub x2: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub y1: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub y2: Option<i32>,
    /// Zero the 3x3 block around the reference (conditional).
    #[arg(long)]
    pub mask_crosstalk: bool,
    /// Divide by the marginal (conditional).
    #[arg(long)]
    pub normalize: bool,
    /// Use `ln(1 + Gamma / ((1 - <I_i>)(1 - <I_j>)))` for the dense tensor.
    #[arg(long)]
    pub log: bool,
    /// Fit a Gaussian to the image peak and report its width.
    #[arg(long)]
    pub fit_width: bool,
    #[arg(long, default_value_t = spad_jpd::snr::DEFAULT_WINDOW)]
    pub window: i32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    ConstantHalf,
    Dark,
    Blocked,
}

impl From<NoiseArg> for NoiseRegion {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::ConstantHalf => NoiseRegion::ConstantHalf,
            NoiseArg::Dark => NoiseRegion::Dark,
            NoiseArg::Blocked => NoiseRegion::Blocked,
        }
    }
}

#[derive(Debug, Args)]
pub struct SnrArgs {
    /// Snapshot(s) to analyse (repeatable).
    #[arg(long)]
    pub snapshot: Vec<PathBuf>,
    /// Alternatively, accumulate `--in` at these frame counts, e.g. `1e4,3e4,1e5`.
    #[arg(long, value_parser = parse_count, value_delimiter = ',')]
    pub sweep: Vec<u64>,
    #[command(flatten)]
    pub layout: LayoutArgs,
    /// Masks file (TOML rectangles and/or a grayscale image).
    #[arg(long)]
    pub masks: Option<PathBuf>,
    /// Run config whose scene drives the prediction and the automatic masks.
    #[arg(long)]
    pub predict_from: Option<PathBuf>,
    /// Noise region for automatic masks.
    #[arg(long, value_enum, default_value_t = NoiseArg::ConstantHalf)]
    pub noise: NoiseArg,
    /// Distance kept from the illumination edge by automatic masks (pixels).
    #[arg(long, default_value_t = 2.0)]
    pub margin: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> Result<(T, T), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated values, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<T>().map_err(|_| format!("bad number {v:?}"));
    Ok((parse(a)?, parse(b)?))
}

/// Frame counts, accepting `1e5` style.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let v: f64 = s.parse().map_err(|_| format!("bad frame count {s:?}"))?;
    if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
        return Err(format!("frame count {s:?} is not a non-negative integer"));
    }
    Ok(v as u64)
}

fn run(cli: Cli) -> spad_jpd::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Calibrate(a) => commands::calibrate(&a),
        Command::Reconstruct(a) => commands::reconstruct(&a),
        Command::Project(a) => commands::project(&a),
        Command::Snr(a) => commands::snr(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::MemoryBudget { .. } = e {
                eprintln!("hint: pass --mode projection-only, or a smaller --roi");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
