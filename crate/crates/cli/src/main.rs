use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use obmo_cli::commands::{self, AnalyzeArgs, AugmentArgs, EvalArgs, ScoreArgs};
use obmo_cli::config::{self, ObmoOverrides};
use obmo_cli::{exit, CliError};
use obmo_core::evalkit::IouThresholds;
use obmo_core::obmo::{
    GtBoxSource, DEFAULT_C, DEFAULT_DELTA_Z, DEFAULT_FILTER_THRESHOLD, DEFAULT_LAMBDA,
};
use obmo_core::{ImageSize, ScoreStrategy};

#[derive(Parser)]
#[command(
    name = "obmo",
    version,
    about = "Depth-shifted pseudo labels and geometry tools for KITTI-style 3D boxes"
)]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write ground truth plus scored pseudo labels for every frame.
    Augment(AugmentCmd),
    /// Sweep exact scale-ambiguity families and write a CSV report.
    Analyze(AnalyzeCmd),
    /// Compute AP|R40 (BEV and 3D) of detections against ground truth.
    Eval(EvalCmd),
    /// Print linear label scores (and optionally losses) at one depth.
    Score(ScoreCmd),
}

#[derive(Clone, Debug)]
struct Percents(Vec<f64>);

fn percents(s: &str) -> Result<Percents, String> {
    config::parse_percent_list(s).map(Percents)
}

#[derive(Clone, Debug)]
struct Reals(Vec<f64>);

fn reals(s: &str) -> Result<Reals, String> {
    config::parse_real_list(s).map(Reals)
}

#[derive(Args)]
struct AugmentCmd {
    /// Directory of label files.
    #[arg(long)]
    labels: PathBuf,
    /// Directory of calibration files.
    #[arg(long)]
    calib: PathBuf,
    /// Output directory for augmented label files.
    #[arg(long)]
    out: PathBuf,
    /// TOML config; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Label score strategy: linear or iou.
    #[arg(long)]
    strategy: Option<ScoreStrategy>,
    /// Depth offsets in percent, comma-separated (e.g. -8,-4,4,8). Empty disables shifting.
    #[arg(long, allow_hyphen_values = true, value_parser = percents)]
    delta_z: Option<Percents>,
    /// Depth tolerance of the linear score, metres.
    #[arg(long)]
    c: Option<f64>,
    /// Weight of the label score loss.
    #[arg(long)]
    lambda: Option<f64>,
    /// Pseudo labels scoring at or below this are dropped.
    #[arg(long, allow_hyphen_values = true)]
    filter_threshold: Option<f64>,
    /// Ground-truth 2D box for the iou strategy: reprojected or annotated.
    #[arg(long)]
    gt_box: Option<GtBoxSource>,
    /// Clip projected boxes to WIDTHxHEIGHT.
    #[arg(long, value_parser = config::parse_image_size)]
    image_size: Option<ImageSize>,
    /// Omit timing lines.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct AnalyzeCmd {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    calib: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Scale factors, comma-separated.
    #[arg(long, value_parser = reals, default_value = "1.02,1.04,1.08")]
    scales: Reals,
    #[arg(long, default_value_t = DEFAULT_C)]
    c: f64,
    #[arg(long, value_parser = config::parse_image_size)]
    image_size: Option<ImageSize>,
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct EvalCmd {
    /// Directory of ground-truth label files.
    #[arg(long)]
    labels: PathBuf,
    /// Directory of detection files (with scores).
    #[arg(long)]
    det: PathBuf,
    /// Optional calibration directory; every frame must then have one.
    #[arg(long)]
    calib: Option<PathBuf>,
    #[arg(long, default_value = "Car")]
    class: String,
    /// IoU threshold for both BEV and 3D; defaults to 0.7 for Car, 0.5 otherwise.
    #[arg(long)]
    iou_threshold: Option<f64>,
    /// Write a JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write interpolated precision at the 40 recall positions here.
    #[arg(long)]
    pr_csv: Option<PathBuf>,
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct ScoreCmd {
    /// Object depth, metres.
    #[arg(long)]
    z: f64,
    #[arg(long, allow_hyphen_values = true, value_parser = percents)]
    delta_z: Option<Percents>,
    #[arg(long, default_value_t = DEFAULT_C)]
    c: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = DEFAULT_FILTER_THRESHOLD)]
    filter_threshold: f64,
    /// Predicted label score, for the loss printout.
    #[arg(long, requires = "target")]
    pred: Option<f64>,
    /// Target label score.
    #[arg(long, requires = "pred")]
    target: Option<f64>,
    /// Baseline detector loss added to the weighted label score loss.
    #[arg(long, requires = "pred")]
    baseline_loss: Option<f64>,
}

fn run(cmd: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Augment(a) => {
            let flags = ObmoOverrides {
                strategy: a.strategy,
                delta_z_set: a.delta_z.map(|p| p.0),
                c: a.c,
                lambda: a.lambda,
                filter_threshold: a.filter_threshold,
                gt_box: a.gt_box,
            };
            let cfg = config::resolve(a.config.as_deref(), &flags)?;
            let stats = commands::cmd_augment(
                &AugmentArgs {
                    labels: a.labels,
                    calib: a.calib,
                    out: a.out,
                    config: cfg,
                    image_size: a.image_size,
                    deterministic: a.deterministic,
                },
                out,
            )?;
            Ok(stats.exit_code())
        }
        Command::Analyze(a) => {
            let stats = commands::cmd_analyze(
                &AnalyzeArgs {
                    labels: a.labels,
                    calib: a.calib,
                    out_csv: a.out,
                    scales: a.scales.0,
                    c: a.c,
                    image_size: a.image_size,
                    deterministic: a.deterministic,
                },
                out,
            )?;
            Ok(stats.exit_code())
        }
        Command::Eval(a) => {
            let thresholds = a.iou_threshold.map_or_else(
                || IouThresholds::for_class(&a.class),
                IouThresholds::uniform,
            );
            commands::cmd_eval(
                &EvalArgs {
                    det: a.det,
                    gt: a.labels,
                    calib: a.calib,
                    class: a.class,
                    thresholds,
                    report: a.out,
                    pr_csv: a.pr_csv,
                    deterministic: a.deterministic,
                },
                out,
            )?;
            Ok(exit::CLEAN)
        }
        Command::Score(a) => {
            commands::cmd_score(
                &ScoreArgs {
                    depth: a.z,
                    delta_z_set: a.delta_z.map_or_else(|| DEFAULT_DELTA_Z.to_vec(), |p| p.0),
                    c: a.c,
                    lambda: a.lambda,
                    filter_threshold: a.filter_threshold,
                    pred: a.pred.zip(a.target),
                    baseline_loss: a.baseline_loss,
                },
                out,
            )?;
            Ok(exit::CLEAN)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        }
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = match run(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
