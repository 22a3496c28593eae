use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::LazyLock;

use clap::{ArgAction, Args, FromArgMatches, Parser, Subcommand};
use frustoval::dataset::text::{FORMAT_VERSION, TOOLKIT};
use frustoval::dataset::{SourceFormat, Split};
use frustoval::frustum::{FrustumSpec, Grid, OverlapConfig};
use frustoval::geometry::Norm;
use frustoval::metrics::{CurveStat, GimbalPolicy, NaiveSource};

mod commands;
mod config;

static VERSION: LazyLock<String> =
    LazyLock::new(|| format!("{} (format {FORMAT_VERSION})", TOOLKIT.trim_start_matches("frustoval ")));

/// Frustum-overlap pose pairs and volume-aware relative pose metrics.
#[derive(Debug, Parser)]
#[command(name = "frustoval", version = VERSION.as_str())]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Worker threads; 0 uses every logical core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Seed for commands that draw random numbers.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file, written atomically. Defaults to standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// File of key=value defaults; explicit flags win. The header of any
    /// toolkit output file works too.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a 7-Scenes, Cambridge or canonical pose source into a pose file.
    Ingest(IngestArgs),
    /// Score all pose pairs and keep those inside an overlap range.
    Pairs(PairsArgs),
    /// Count pairs per overlap bin.
    Histogram(HistogramArgs),
    /// Subspace diameter at several overlap thresholds.
    Diameter(DiameterArgs),
    /// Predictions of the mean-pose predictor.
    Naive(NaiveArgs),
    /// Synthetic trajectory, or synthetic predictions when --pairs is given.
    Synth(SynthArgs),
    /// Evaluate predictions against a pair file.
    Eval(EvalArgs),
    /// Error per overlap bin and the area under it.
    Curve(CurveArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// 7scenes, cambridge or canonical.
    #[arg(long)]
    pub format: SourceFormat,
    /// 7-Scenes sequence or scene directory, Cambridge list file or scene
    /// directory, or a canonical pose file.
    #[arg(long)]
    pub input: PathBuf,
    /// Scene name; defaults to the input directory name.
    #[arg(long)]
    pub scene: Option<String>,
    #[arg(long, default_value = "train")]
    pub split: Split,
    /// Fail when any record is rejected.
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    #[arg(long)]
    pub poses: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub min_overlap: f64,
    #[arg(long, default_value_t = 1.0)]
    pub max_overlap: f64,
    #[arg(long, default_value_t = FrustumSpec::default().hfov_deg)]
    pub hfov: f64,
    #[arg(long, default_value_t = FrustumSpec::default().vfov_deg)]
    pub vfov: f64,
    #[arg(long, default_value_t = FrustumSpec::default().near)]
    pub near: f64,
    #[arg(long, default_value_t = FrustumSpec::default().far)]
    pub far: f64,
    #[arg(long, default_value_t = FrustumSpec::default().grid)]
    pub grid: Grid,
    #[arg(long, default_value_t = FrustumSpec::default().boundary_epsilon)]
    pub boundary_eps: f64,
    #[arg(long, default_value_t = OverlapConfig::default().max_relative_rotation_deg)]
    pub max_rot: f64,
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub symmetric: bool,
    /// Keep each unordered pair once (implies symmetric scoring).
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub unordered: bool,
    /// Bounding-sphere reject before point tests; never changes scores.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub early_reject: bool,
}

#[derive(Debug, Args)]
pub struct HistogramArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    /// `lo:hi:step` or comma-separated edges.
    #[arg(long, default_value = "0:1:0.1")]
    pub bins: String,
}

#[derive(Debug, Args)]
pub struct DiameterArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, default_value = "0.2,0.4,0.6,0.8,0.9")]
    pub thresholds: String,
}

#[derive(Debug, Args)]
pub struct NaiveArgs {
    /// Pairs to predict.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Pairs the mean is taken over; defaults to --pairs.
    #[arg(long)]
    pub source: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Box side lengths in meters, `x,y,z`.
    #[arg(long, default_value = "3,2,1")]
    pub extents: String,
    #[arg(long, default_value_t = 500)]
    pub n_poses: usize,
    /// Half-angle of the optical-axis cone in degrees.
    #[arg(long, default_value_t = 30.0)]
    pub max_tilt: f64,
    /// Predict these pairs instead of generating a trajectory.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// perfect, naive, noisy, constant or proportional.
    #[arg(long, default_value = "noisy")]
    pub predictor: String,
    /// Translation noise per axis, meters (noisy).
    #[arg(long, default_value_t = 0.0)]
    pub sigma_t: f64,
    /// Rotation noise per axis, degrees (noisy).
    #[arg(long, default_value_t = 0.0)]
    pub sigma_q: f64,
    /// Translation noise as a fraction of the ground-truth norm (proportional).
    #[arg(long, default_value_t = 0.0)]
    pub frac_t: f64,
    /// Rotation noise as a fraction of the ground-truth angle (proportional).
    #[arg(long, default_value_t = 0.0)]
    pub frac_q: f64,
    /// `qw,qx,qy,qz,tx,ty,tz` (constant).
    #[arg(long)]
    pub constant: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, default_value_t = Norm::L1)]
    pub norm: Norm,
    #[arg(long, default_value = "mean,median,mape,mase,mapse,rmape")]
    pub stats: String,
    /// exclude or error.
    #[arg(long, default_value = "exclude")]
    pub gimbal: GimbalPolicy,
    /// eval_pairs or train_pairs.
    #[arg(long, default_value = "eval_pairs")]
    pub naive_source: NaiveSource,
    /// Training pairs for `--naive-source train_pairs`.
    #[arg(long)]
    pub train_pairs: Option<PathBuf>,
    /// text or kv.
    #[arg(long, default_value = "text")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, conflicts_with = "poses", required_unless_present = "poses")]
    pub pairs: Option<PathBuf>,
    /// Rebuild the pairs from poses with the configuration recorded in the
    /// prediction file.
    #[arg(long)]
    pub poses: Option<PathBuf>,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, default_value = "0.1:0.9:0.1")]
    pub bins: String,
    #[arg(long, default_value = "median")]
    pub stat: CurveStat,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or flag values: exit 1.
    Usage(String),
    /// Missing or inconsistent input data: exit 2.
    Data(anyhow::Error),
    /// Already reported by the argument parser.
    Exit(u8),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.into())
    }
}

pub fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(msg.to_string())
}

fn parse_cli(argv: Vec<String>) -> Result<Result<Cli, clap::Error>, Failure> {
    let argv = config::merge_config(argv)?;
    Ok(<Cli as clap::CommandFactory>::command()
        .try_get_matches_from(argv)
        .and_then(|m| Cli::from_arg_matches(&m)))
}

fn main() -> ExitCode {
    let outcome = parse_cli(std::env::args().collect()).and_then(|parsed| match parsed {
        Ok(cli) => commands::run(cli),
        Err(e) => {
            let _ = e.print();
            // Help and version requests are not errors.
            Err(Failure::Exit(if e.use_stderr() { 1 } else { 0 }))
        }
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Exit(code)) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
