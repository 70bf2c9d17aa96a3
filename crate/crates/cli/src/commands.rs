//! Dataset-scale workflows behind the `obmo` subcommands.
//!
//! Every command writes its human-readable summary to the given writer and
//! returns stats from which the exit status is derived. Frames are processed
//! in parallel and merged back in frame-id order, so files and stdout are
//! identical across runs (timing lines aside).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use obmo_core::analysis::{self, amplification_table, SweepSummary};
use obmo_core::calib::parse_calibration;
use obmo_core::evalkit::{self, EvalError, EvalResult, IouThresholds};
use obmo_core::labelio::{parse_labels, write_augmented_frame};
use obmo_core::obmo::{
    generate_pseudo_labels, label_score_loss, linear_label_score, total_loss, ObmoConfig,
};
use obmo_core::{FrameAnnotation, ImageSize, ObjectLabel};
use rayon::prelude::*;

use crate::error::{exit, CliError};

fn check_dir(path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Path {
            path: path.to_path_buf(),
            reason: "not a directory".into(),
        })
    }
}

/// Stems of the `.txt` files in `dir`, sorted.
pub fn frame_ids(dir: &Path) -> Result<Vec<String>, CliError> {
    check_dir(dir)?;
    let ids = evalkit::list_frames(dir).map_err(|e| match e {
        EvalError::Io { path, source } => CliError::io(path, source),
        other => CliError::Contract(other.to_string()),
    })?;
    Ok(ids.into_iter().collect())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn read_labels(path: &Path) -> Result<Vec<ObjectLabel>, CliError> {
    parse_labels(&read_text(path)?).map_err(|e| CliError::parse(path, e))
}

/// Loads a frame, or `None` when its calibration file does not exist.
fn load_frame(
    labels_dir: &Path,
    calib_dir: &Path,
    id: &str,
    image_size: Option<ImageSize>,
) -> Result<Option<FrameAnnotation>, CliError> {
    let calib_path = calib_dir.join(format!("{id}.txt"));
    if !calib_path.is_file() {
        log::warn!(
            "frame {id}: no calibration at {}, skipped",
            calib_path.display()
        );
        return Ok(None);
    }
    let calib =
        parse_calibration(&read_text(&calib_path)?).map_err(|e| CliError::parse(&calib_path, e))?;
    let labels = read_labels(&labels_dir.join(format!("{id}.txt")))?;
    Ok(Some(FrameAnnotation {
        frame_id: id.to_owned(),
        labels,
        calib: *calib.reference(),
        image_size,
    }))
}

fn timing(out: &mut dyn Write, deterministic: bool, start: Instant) -> Result<(), CliError> {
    if !deterministic {
        writeln!(
            out,
            "elapsed: {:.1} ms",
            start.elapsed().as_secs_f64() * 1e3
        )
        .map_err(|e| CliError::io("<stdout>", e))?;
    }
    Ok(())
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

#[derive(Debug, Clone)]
pub struct AugmentArgs {
    pub labels: PathBuf,
    pub calib: PathBuf,
    pub out: PathBuf,
    pub config: ObmoConfig,
    pub image_size: Option<ImageSize>,
    pub deterministic: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AugmentStats {
    pub frames: usize,
    pub frames_skipped: usize,
    pub ground_truth: usize,
    pub retained: usize,
    pub dropped: usize,
    /// (label, offset) pairs that could not be shifted or scored.
    pub skipped_pairs: usize,
}

impl AugmentStats {
    pub fn warnings(&self) -> usize {
        self.frames_skipped + self.skipped_pairs
    }

    pub fn exit_code(&self) -> i32 {
        if self.warnings() == 0 {
            exit::CLEAN
        } else {
            exit::WARNINGS
        }
    }
}

/// Writes one augmented label file per input frame into `args.out`.
pub fn cmd_augment(args: &AugmentArgs, out: &mut dyn Write) -> Result<AugmentStats, CliError> {
    let start = Instant::now();
    args.config.validate()?;
    let ids = frame_ids(&args.labels)?;
    check_dir(&args.calib)?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::Path {
        path: args.out.clone(),
        reason: e.to_string(),
    })?;

    let per_frame = ids
        .par_iter()
        .map(|id| -> Result<AugmentStats, CliError> {
            let Some(frame) = load_frame(&args.labels, &args.calib, id, args.image_size)? else {
                return Ok(AugmentStats {
                    frames: 1,
                    frames_skipped: 1,
                    ..AugmentStats::default()
                });
            };
            let generated = generate_pseudo_labels(&frame, &args.config);
            for skip in &generated.skipped {
                log::warn!(
                    "frame {id}: label {} at offset {:+}: {}",
                    skip.label_index,
                    skip.delta_z,
                    skip.reason
                );
            }
            let text = write_augmented_frame(&frame.labels, &generated.pseudo)
                .map_err(|e| CliError::Contract(format!("frame {id}: {e}")))?;
            let path = args.out.join(format!("{id}.txt"));
            fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            Ok(AugmentStats {
                frames: 1,
                frames_skipped: 0,
                ground_truth: frame.labels.len(),
                retained: generated.pseudo.len(),
                dropped: generated.dropped,
                skipped_pairs: generated.skipped.len(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let stats = per_frame
        .iter()
        .fold(AugmentStats::default(), |acc, s| AugmentStats {
            frames: acc.frames + s.frames,
            frames_skipped: acc.frames_skipped + s.frames_skipped,
            ground_truth: acc.ground_truth + s.ground_truth,
            retained: acc.retained + s.retained,
            dropped: acc.dropped + s.dropped,
            skipped_pairs: acc.skipped_pairs + s.skipped_pairs,
        });

    let cfg = &args.config;
    (|| -> std::io::Result<()> {
        writeln!(
            out,
            "augment: {} frames ({} skipped)",
            stats.frames, stats.frames_skipped
        )?;
        writeln!(out, "  ground truth labels: {}", stats.ground_truth)?;
        writeln!(
            out,
            "  pseudo labels: {} retained, {} dropped, {} skipped",
            stats.retained, stats.dropped, stats.skipped_pairs
        )?;
        writeln!(
            out,
            "  strategy={:?} delta_z={:?} c={} lambda={} filter_threshold={}",
            cfg.strategy, cfg.delta_z_set, cfg.c, cfg.lambda, cfg.filter_threshold
        )?;
        writeln!(out, "  output: {}", args.out.display())
    })()
    .map_err(stdout_err)?;
    timing(out, args.deterministic, start)?;
    Ok(stats)
}

#[derive(Debug, Clone)]
pub struct AnalyzeArgs {
    pub labels: PathBuf,
    pub calib: PathBuf,
    pub out_csv: PathBuf,
    pub scales: Vec<f64>,
    pub c: f64,
    pub image_size: Option<ImageSize>,
    pub deterministic: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AnalyzeStats {
    pub frames: usize,
    pub frames_skipped: usize,
    pub sweep: SweepSummary,
}

impl AnalyzeStats {
    pub fn warnings(&self) -> usize {
        self.frames_skipped + self.sweep.skipped
    }

    pub fn exit_code(&self) -> i32 {
        if self.warnings() == 0 {
            exit::CLEAN
        } else {
            exit::WARNINGS
        }
    }
}

/// Runs the ambiguity sweep over a dataset and prints the amplification table.
pub fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<AnalyzeStats, CliError> {
    let start = Instant::now();
    if args.scales.iter().any(|s| !(*s > 0.0)) {
        return Err(CliError::Config(format!(
            "scales must be positive, got {:?}",
            args.scales
        )));
    }
    if !(args.c > 0.0) {
        return Err(CliError::Config(format!(
            "c must be positive, got {}",
            args.c
        )));
    }
    let ids = frame_ids(&args.labels)?;
    check_dir(&args.calib)?;

    let csv_err = |e: csv::Error| CliError::Contract(format!("csv: {e}"));
    let per_frame = ids
        .par_iter()
        .map(|id| -> Result<(Vec<u8>, SweepSummary, bool), CliError> {
            let frame = match load_frame(&args.labels, &args.calib, id, args.image_size) {
                Ok(Some(f)) => f,
                Ok(None) => return Ok((Vec::new(), SweepSummary::default(), true)),
                Err(e) => {
                    log::warn!("frame {id}: {e}, skipped");
                    return Ok((Vec::new(), SweepSummary::default(), true));
                }
            };
            let mut w = analysis::csv_writer(Vec::new());
            let summary =
                analysis::ambiguity_sweep(&frame, &args.scales, args.c, &mut w).map_err(csv_err)?;
            let bytes = w
                .into_inner()
                .map_err(|e| CliError::Contract(format!("csv: {e}")))?;
            Ok((bytes, summary, false))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut body = analysis::csv_writer(Vec::new());
    analysis::write_csv_header(&mut body).map_err(csv_err)?;
    let mut bytes = body
        .into_inner()
        .map_err(|e| CliError::Contract(format!("csv: {e}")))?;
    let mut stats = AnalyzeStats::default();
    for (chunk, summary, skipped) in per_frame {
        bytes.extend_from_slice(&chunk);
        stats.frames += 1;
        stats.frames_skipped += usize::from(skipped);
        stats.sweep = stats.sweep.merge(&summary);
    }
    if let Some(parent) = args.out_csv.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(&args.out_csv, bytes).map_err(|e| CliError::io(&args.out_csv, e))?;

    (|| -> std::io::Result<()> {
        writeln!(
            out,
            "analyze: {} frames ({} skipped), {} rows",
            stats.frames, stats.frames_skipped, stats.sweep.rows
        )?;
        writeln!(
            out,
            "  projection deviation of exact families: mean {:.3e} px, max {:.3e} px",
            stats.sweep.mean_deviation, stats.sweep.max_deviation
        )?;
        writeln!(out, "  csv: {}", args.out_csv.display())?;
        writeln!(out)?;
        writeln!(out, "dimension error vs depth error (H = 1.53 m)")?;
        writeln!(
            out,
            "{:>8} {:>6} {:>12} {:>14}",
            "depth_m", "scale", "dim_error_m", "depth_error_m"
        )?;
        for row in amplification_table() {
            writeln!(
                out,
                "{:>8.1} {:>6.2} {:>12.4} {:>14.4}",
                row.depth, row.scale, row.dim_error, row.depth_error
            )?;
        }
        Ok(())
    })()
    .map_err(stdout_err)?;
    timing(out, args.deterministic, start)?;
    Ok(stats)
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub det: PathBuf,
    pub gt: PathBuf,
    pub calib: Option<PathBuf>,
    pub class: String,
    pub thresholds: IouThresholds,
    pub report: Option<PathBuf>,
    pub pr_csv: Option<PathBuf>,
    pub deterministic: bool,
}

fn eval_error(args: &EvalArgs, e: EvalError) -> CliError {
    match e {
        EvalError::MissingScore(_) | EvalError::UndefinedAp => CliError::Contract(e.to_string()),
        EvalError::FrameMismatch { .. } => CliError::Path {
            path: args.det.clone(),
            reason: e.to_string(),
        },
        EvalError::MissingCalib(_) => CliError::Path {
            path: args.calib.clone().unwrap_or_default(),
            reason: e.to_string(),
        },
        EvalError::Io { path, source } => CliError::io(path, source),
        EvalError::Labels { path, source } => CliError::parse(path, source),
        EvalError::Calib { path, source } => CliError::parse(path, source),
    }
}

fn fmt_ap(ap: Option<f64>) -> String {
    ap.map_or_else(|| "n/a".into(), |v| format!("{v:.2}"))
}

/// Evaluates a detection directory against ground truth and prints AP|R40.
pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<EvalResult, CliError> {
    let start = Instant::now();
    check_dir(&args.det)?;
    check_dir(&args.gt)?;
    if let Some(c) = &args.calib {
        check_dir(c)?;
    }
    let result = evalkit::evaluate(
        &args.det,
        &args.gt,
        args.calib.as_deref(),
        &args.class,
        args.thresholds,
    )
    .map_err(|e| eval_error(args, e))?;

    if let Some(path) = &args.report {
        let json =
            serde_json::to_string_pretty(&result).map_err(|e| CliError::Contract(e.to_string()))?;
        fs::write(path, json + "\n").map_err(|e| CliError::io(path, e))?;
    }
    if let Some(path) = &args.pr_csv {
        let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        result
            .write_pr_csv(file)
            .map_err(|e| CliError::Contract(format!("{}: {e}", path.display())))?;
    }

    (|| -> std::io::Result<()> {
        writeln!(
            out,
            "{} AP|R40 over {} frames (IoU threshold bev {:.2}, 3d {:.2})",
            result.class, result.frames, result.thresholds.bev, result.thresholds.three_d
        )?;
        writeln!(
            out,
            "{:<10} {:>7} {:>8} {:>8}",
            "difficulty", "num_gt", "AP_BEV", "AP_3D"
        )?;
        for level in &result.levels {
            writeln!(
                out,
                "{:<10} {:>7} {:>8} {:>8}",
                format!("{:?}", level.difficulty).to_lowercase(),
                level.num_gt,
                fmt_ap(level.ap_bev),
                fmt_ap(level.ap_3d)
            )?;
        }
        if let Some(path) = &args.report {
            writeln!(out, "report: {}", path.display())?;
        }
        Ok(())
    })()
    .map_err(stdout_err)?;
    timing(out, args.deterministic, start)?;
    Ok(result)
}

#[derive(Debug, Clone)]
pub struct ScoreArgs {
    pub depth: f64,
    pub delta_z_set: Vec<f64>,
    pub c: f64,
    pub lambda: f64,
    pub filter_threshold: f64,
    /// Predicted and target label score, for the loss printout.
    pub pred: Option<(f64, f64)>,
    pub baseline_loss: Option<f64>,
}

/// Prints linear label scores at one depth and, optionally, the losses.
pub fn cmd_score(args: &ScoreArgs, out: &mut dyn Write) -> Result<Vec<f64>, CliError> {
    if !(args.depth > 0.0) {
        return Err(CliError::Config(format!(
            "depth must be positive, got {}",
            args.depth
        )));
    }
    if !(args.c > 0.0) {
        return Err(CliError::Config(format!(
            "c must be positive, got {}",
            args.c
        )));
    }
    let scores: Vec<f64> = args
        .delta_z_set
        .iter()
        .map(|&dz| linear_label_score(args.depth, dz, args.c))
        .collect();
    (|| -> std::io::Result<()> {
        writeln!(
            out,
            "{:>9} {:>8} {:>12} {:>6}",
            "delta_z", "Z_m", "linear", "kept"
        )?;
        for (dz, s) in args.delta_z_set.iter().zip(&scores) {
            let kept = if *s > args.filter_threshold {
                "yes"
            } else {
                "no"
            };
            writeln!(
                out,
                "{:>+8.2}% {:>8.2} {:>12.6} {:>6}",
                dz * 100.0,
                args.depth,
                s,
                kept
            )?;
        }
        if let Some((pred, target)) = args.pred {
            let l = label_score_loss(pred, target);
            writeln!(out, "label score loss: {l:.6}")?;
            if let Some(base) = args.baseline_loss {
                writeln!(
                    out,
                    "total loss (lambda {}): {:.6}",
                    args.lambda,
                    total_loss(base, l, args.lambda)
                )?;
            }
        }
        Ok(())
    })()
    .map_err(stdout_err)?;
    Ok(scores)
}
