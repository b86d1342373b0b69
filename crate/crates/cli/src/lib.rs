//! The `quakeml` command-line tool.
//!
//! Exit codes: 0 true earthquake (or success), 1 internal failure,
//! 2 parse/flag/IO error, 3 false detection, 4 unclassifiable (n < 4),
//! 5 no detection.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use quakeml_core::estimation::MIN_TRIGGERS;
use quakeml_core::simulate::{
    FalseEventSpec, NetworkSpec, Placement, StudyConfig, TrueEventSpec,
};
use quakeml_core::{
    DetectorConfig, EarthModel, EstimatorConfig, TestSpec, WaveKind, WaveSpeed,
};

mod commands;
pub mod config;
pub mod io;
pub mod report;

pub use commands::{calibrate, classify, detect, estimate, simulate};

pub mod exit {
    pub const OK: i32 = 0;
    pub const TRUE_EARTHQUAKE: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const FALSE_DETECTION: i32 = 3;
    pub const UNCLASSIFIABLE: i32 = 4;
    pub const NO_DETECTION: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] quakeml_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use quakeml_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Parse { .. } | CliError::Io { .. } => exit::USAGE,
            CliError::Core(E::InsufficientData { .. }) => exit::UNCLASSIFIABLE,
            CliError::Core(E::InvalidInput(_) | E::InsufficientReplications { .. }) => exit::USAGE,
            CliError::Core(_) => exit::FAILURE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "quakeml", version, about = "Classify smartphone earthquake detections")]
pub struct Cli {
    /// File of `key = value` lines mirroring the flags; flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit both wave speeds and classify a detection as true or false.
    #[command(args_override_self = true)]
    Classify(ClassifyArgs),
    /// Fit the hypocenter at one wave speed, without testing.
    #[command(args_override_self = true)]
    Estimate(EstimateArgs),
    /// Generate synthetic true or false events.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Monte Carlo calibration of the null variance.
    #[command(args_override_self = true)]
    Calibrate(CalibrateArgs),
    /// Replay the ratio detector over a trigger stream.
    #[command(args_override_self = true)]
    Detect(DetectArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SeedArg {
    /// Master seed for every random draw.
    #[arg(long, env = "QUAKEML_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    /// Multi-start restarts per wave speed.
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0.0, value_name = "KM")]
    pub depth_min: f64,
    #[arg(long, default_value_t = 100.0, value_name = "KM")]
    pub depth_max: f64,
    /// Margin added around the trigger bounding box for the search box.
    #[arg(long, default_value_t = 1.0, value_name = "DEG")]
    pub box_margin: f64,
    /// Convergence tolerance on the objective (s^2).
    #[arg(long, default_value_t = 1e-8)]
    pub f_tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Confidence level of the reported intervals.
    #[arg(long, default_value_t = 0.99)]
    pub level: f64,
    #[arg(long, default_value_t = 6371.0, value_name = "KM")]
    pub earth_radius: f64,
}

impl EstimatorArgs {
    pub fn to_config(&self, seed: u64) -> Result<EstimatorConfig, CliError> {
        let cfg = EstimatorConfig {
            restarts: self.restarts,
            depth_min_km: self.depth_min,
            depth_max_km: self.depth_max,
            box_margin_deg: self.box_margin,
            f_tol: self.f_tol,
            max_iter: self.max_iter,
            seed,
            confidence_level: self.level,
            earth: EarthModel::new(self.earth_radius)?,
            ..EstimatorConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SpeedArgs {
    /// Primary-wave speed (km/s).
    #[arg(long, default_value_t = 7.8)]
    pub vp: f64,
    /// Secondary-wave speed (km/s).
    #[arg(long, default_value_t = 4.5)]
    pub vs: f64,
}

impl SpeedArgs {
    pub fn speeds(&self) -> Result<(WaveSpeed, WaveSpeed), CliError> {
        Ok((
            WaveSpeed::new(self.vp, WaveKind::Primary)?,
            WaveSpeed::new(self.vs, WaveKind::Secondary)?,
        ))
    }
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    /// Trigger file (`id,lat,lon,t`).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Null residual variance (s^2).
    #[arg(long, default_value_t = 0.6)]
    pub delta: f64,
    /// Significance level of the variance test.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[command(flatten)]
    pub speeds: SpeedArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub seed: SeedArg,
}

impl ClassifyArgs {
    pub fn spec(&self) -> Result<TestSpec, CliError> {
        let spec = TestSpec {
            delta: self.delta,
            alpha: self.alpha,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WaveArg {
    P,
    S,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Wave whose speed is assumed.
    #[arg(long, value_enum, default_value_t = WaveArg::P)]
    pub wave: WaveArg,
    /// Explicit speed (km/s); overrides the default of `--wave`.
    #[arg(long)]
    pub v: Option<f64>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub seed: SeedArg,
}

impl EstimateArgs {
    pub fn speed(&self) -> Result<WaveSpeed, CliError> {
        let base = match self.wave {
            WaveArg::P => WaveSpeed::primary(),
            WaveArg::S => WaveSpeed::secondary(),
        };
        Ok(WaveSpeed::new(self.v.unwrap_or(base.v_kms), base.label)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct DetectorArgs {
    #[arg(long, default_value_t = 30.0, value_name = "KM")]
    pub radius: f64,
    #[arg(long, default_value_t = 10.0, value_name = "S")]
    pub window: f64,
    /// Fraction of active phones in an area that must trigger.
    #[arg(long, default_value_t = 0.25)]
    pub ratio_threshold: f64,
    #[arg(long, default_value_t = 4)]
    pub min_triggers: usize,
}

impl DetectorArgs {
    pub fn to_config(&self) -> Result<DetectorConfig, CliError> {
        let cfg = DetectorConfig {
            radius_km: self.radius,
            window_s: self.window,
            ratio_threshold: self.ratio_threshold,
            min_triggers: self.min_triggers,
            ..DetectorConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Number of uniformly placed phones.
    #[arg(long, default_value_t = 1000)]
    pub phones: usize,
    /// Use this roster (`id,lat,lon`) instead of uniform placement.
    #[arg(long)]
    pub roster: Option<PathBuf>,
    #[arg(long, default_value_t = -12.39, allow_hyphen_values = true)]
    pub lat_min: f64,
    #[arg(long, default_value_t = -11.74, allow_hyphen_values = true)]
    pub lat_max: f64,
    #[arg(long, default_value_t = -77.17, allow_hyphen_values = true)]
    pub lon_min: f64,
    #[arg(long, default_value_t = -76.66, allow_hyphen_values = true)]
    pub lon_max: f64,
    #[arg(long, default_value_t = 0.0, value_name = "KM")]
    pub event_depth_min: f64,
    #[arg(long, default_value_t = 100.0, value_name = "KM")]
    pub event_depth_max: f64,
    /// Speed of the simulated wave (km/s).
    #[arg(long, default_value_t = 7.8)]
    pub event_v: f64,
    /// Fraction of phones reached by a true event.
    #[arg(long, default_value_t = 0.7)]
    pub p_trigger: f64,
    /// Variance of the triggering-time error (s^2).
    #[arg(long, default_value_t = 1.67)]
    pub noise_var: f64,
    /// Fraction of the remaining phones that trigger at random.
    #[arg(long, default_value_t = 0.06)]
    pub p_spurious: f64,
    /// Spurious and false triggers are uniform on [0, this] s.
    #[arg(long, default_value_t = 12.0, value_name = "S")]
    pub time_window: f64,
    /// Fraction of phones triggering in a false event.
    #[arg(long, default_value_t = 0.3)]
    pub false_p_trigger: f64,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

impl ScenarioArgs {
    pub fn network(&self) -> Result<NetworkSpec, CliError> {
        let placement = match &self.roster {
            Some(path) => Placement::Roster(io::read_roster(path)?),
            None => Placement::Uniform,
        };
        Ok(NetworkSpec {
            count: self.phones,
            lat: (self.lat_min, self.lat_max),
            lon: (self.lon_min, self.lon_max),
            placement,
        })
    }

    pub fn study(&self, seed: u64) -> Result<StudyConfig, CliError> {
        let network = self.network()?;
        let true_event = TrueEventSpec {
            epicentre_lat: network.lat,
            epicentre_lon: network.lon,
            depth_km: (self.event_depth_min, self.event_depth_max),
            wave: WaveSpeed::new(self.event_v, WaveKind::Primary)?,
            p_triggering: self.p_trigger,
            noise_variance: self.noise_var,
            p_spurious: self.p_spurious,
            spurious_window: (0.0, self.time_window),
            ..TrueEventSpec::default()
        };
        true_event.validate()?;
        let false_event = FalseEventSpec {
            p_triggering: self.false_p_trigger,
            window: (0.0, self.time_window),
        };
        false_event.validate()?;
        Ok(StudyConfig {
            seed,
            network,
            true_event,
            false_event,
            detector: self.detector.to_config()?,
            ..StudyConfig::default()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EventKind {
    True,
    False,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = EventKind::True)]
    pub kind: EventKind,
    #[arg(long, default_value_t = 1)]
    pub replications: usize,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    /// Replications per arm (true and false).
    #[arg(long, default_value_t = 1000)]
    pub replications: usize,
    /// Target type I error.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write per-replication data files to this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub speeds: SpeedArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    /// Time-ordered trigger stream (`id,lat,lon,t`).
    #[arg(long)]
    pub stream: PathBuf,
    /// Phones monitoring the area (`id,lat,lon`).
    #[arg(long)]
    pub roster: PathBuf,
    /// Write the concurring triggers here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

/// Parse `args` (including the program name), execute, and return the
/// process exit code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let args = match config::expand_args(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match dispatch(&cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Classify(a) => commands::run_classify(a, out),
        Command::Estimate(a) => commands::run_estimate(a, out),
        Command::Simulate(a) => commands::run_simulate(a, out),
        Command::Calibrate(a) => commands::run_calibrate(a, out),
        Command::Detect(a) => commands::run_detect(a, out, err),
    }
}

fn check_min_triggers(n: usize) -> Result<(), CliError> {
    if n < MIN_TRIGGERS {
        return Err(quakeml_core::Error::InsufficientData {
            n,
            required: MIN_TRIGGERS,
        }
        .into());
    }
    Ok(())
}
