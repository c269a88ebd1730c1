//! `bevcalib`: radar/LiDAR BEV conversion, deskewing, registration,
//! calibration, image-quality evaluation and synthetic data.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 input format
//! error, 4 trajectory coverage error, 5 degenerate images, 6 nothing to
//! process (no frame pairs, no image pairs).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bevcalib::{Error, ErrorKind};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "bevcalib", version, about = "Radar/LiDAR extrinsic calibration from BEV image registration")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Polar radar scan(s) to Cartesian BEV images.
    Convert(ConvertArgs),
    /// Motion-compensate one sweep and rasterize it.
    Deskew(DeskewArgs),
    /// Register a radar BEV image onto a LiDAR BEV image.
    Register(RegisterArgs),
    /// Register every radar/LiDAR frame pair of a dataset.
    Calib(CalibArgs),
    /// PSNR/SSIM of test images against reference images.
    Eval(EvalArgs),
    /// Write a synthetic dataset with known extrinsic.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct GridArgs {
    /// BEV image side, pixels.
    #[arg(long, default_value_t = 300)]
    size: usize,
    /// Meters per pixel.
    #[arg(long, default_value_t = 0.5)]
    mpp: f64,
}

#[derive(Args, Debug, Clone, Copy)]
struct RadarArgs {
    /// Radar range bin size, meters.
    #[arg(long, default_value_t = 0.0432)]
    range_resolution: f64,
    /// Radar sweep period, seconds.
    #[arg(long, default_value_t = 0.25)]
    radar_period: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Forward,
    Backward,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    /// Polar PNG scan or a directory of them.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Forward)]
    mode: Mode,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    radar: RadarArgs,
    /// Output directory for BEV images and summary.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Sensor {
    Lidar,
    Radar,
}

#[derive(Args, Debug)]
struct DeskewArgs {
    /// Radar polar PNG or LiDAR .bin sweep, named by its start time in ns.
    #[arg(long)]
    scan: PathBuf,
    /// Pose CSV of the sensor.
    #[arg(long)]
    traj: PathBuf,
    /// IMU CSV used to densify the trajectory.
    #[arg(long)]
    imu: Option<PathBuf>,
    #[arg(long, value_enum)]
    sensor: Sensor,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    radar: RadarArgs,
    /// LiDAR sweep period, seconds (used without a time sidecar).
    #[arg(long, default_value_t = 0.1)]
    lidar_period: f64,
    /// Output BEV PNG; the summary goes next to it as JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum TranslatorKind {
    Identity,
    Median,
    Gaussian,
    External,
}

#[derive(Args, Debug, Clone)]
struct TranslatorArgs {
    #[arg(long, value_enum, default_value_t = TranslatorKind::Identity)]
    translator: TranslatorKind,
    /// Directory of `<frame_id>.png` images for the external translator.
    #[arg(long)]
    translated_dir: Option<PathBuf>,
    /// Median/Gaussian kernel size (odd).
    #[arg(long)]
    kernel_size: Option<usize>,
    /// Gaussian sigma, pixels.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum MethodArg {
    Phase,
    Mi,
    #[value(name = "phase+mi")]
    PhaseMi,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            MethodArg::Phase => "phase",
            MethodArg::Mi => "mi",
            MethodArg::PhaseMi => "phase+mi",
        }
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct RegistrationArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::PhaseMi)]
    method: MethodArg,
    /// Rotation search half-width, degrees.
    #[arg(long, default_value_t = 10.0)]
    theta_max: f64,
    /// Rotation search step, degrees.
    #[arg(long, default_value_t = 1.0)]
    theta_step: f64,
    /// Joint-histogram bins for mutual information.
    #[arg(long, default_value_t = 32)]
    mi_bins: usize,
    /// Nelder-Mead evaluation budget.
    #[arg(long, default_value_t = 400)]
    mi_max_evals: usize,
}

#[derive(Args, Debug)]
struct RegisterArgs {
    /// LiDAR BEV PNG.
    #[arg(long)]
    lidar: PathBuf,
    /// Radar BEV PNG.
    #[arg(long)]
    radar: PathBuf,
    #[command(flatten)]
    translator: TranslatorArgs,
    #[command(flatten)]
    registration: RegistrationArgs,
    /// Meters per pixel of both images.
    #[arg(long, default_value_t = 0.5)]
    mpp: f64,
    /// Frame id for the external translator (default: radar file stem).
    #[arg(long)]
    frame_id: Option<String>,
    /// Output JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CalibArgs {
    #[arg(long)]
    dataset_dir: PathBuf,
    /// Largest radar/LiDAR start-time difference for a pair, seconds.
    #[arg(long, default_value_t = 0.05)]
    t_max: f64,
    #[command(flatten)]
    translator: TranslatorArgs,
    #[command(flatten)]
    registration: RegistrationArgs,
    /// BEV grid; defaults to the dataset's meta.json, then 300 px at 0.5 m.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    mpp: Option<f64>,
    /// Convergence tolerance on x and y, meters.
    #[arg(long, default_value_t = 0.5)]
    tau_xy: f64,
    /// Convergence tolerance on theta, radians.
    #[arg(long, default_value_t = 0.02)]
    tau_theta: f64,
    /// Output directory for frames.csv and stats.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    ref_dir: PathBuf,
    #[arg(long)]
    test_dir: PathBuf,
    /// Applied to the test images before scoring.
    #[command(flatten)]
    translator: TranslatorArgs,
    /// Output CSV; a JSON summary is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    frames: usize,
    /// Radar pose on the body as `x,y,theta` (meters, meters, radians).
    #[arg(long, default_value = "1.0,0.5,0.02", value_parser = commands::parse_extrinsic)]
    extrinsic: bevcalib::RigidTransform2D,
    /// Forward speed, m/s.
    #[arg(long, default_value_t = 2.0)]
    velocity: f64,
    /// Yaw rate, rad/s.
    #[arg(long, default_value_t = 0.05)]
    yaw_rate: f64,
    /// none, moderate or heavy.
    #[arg(long, default_value = "moderate")]
    noise_profile: String,
    #[command(flatten)]
    grid: GridArgs,
    /// LiDAR sweep start relative to the radar sweep start, seconds.
    #[arg(long, default_value_t = 0.0)]
    lidar_offset: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    /// Nothing to process.
    Empty(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Format | ErrorKind::Input => 3,
                ErrorKind::Trajectory => 4,
                ErrorKind::Degenerate => 5,
            },
            CliError::Empty(_) => 6,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Empty(msg) => write!(f, "nothing to process: {msg}"),
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("BEVCALIB_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("BEVCALIB_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size thread pool: {e}")))?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Convert(args) => commands::convert(args),
        Command::Deskew(args) => commands::deskew(args),
        Command::Register(args) => commands::register(args),
        Command::Calib(args) => commands::calib(args),
        Command::Eval(args) => commands::eval(args),
        Command::Synth(args) => commands::synth(args),
    }
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    // clap exits with 2 on usage errors
    let cli = Cli::parse_from(args);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
