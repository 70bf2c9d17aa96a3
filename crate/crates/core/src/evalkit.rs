//! KITTI-style evaluation of 3D detections.
//!
//! Detections are greedily matched to ground truths by rotated BEV or 3D IoU,
//! separately for each difficulty level, and precision is averaged over the
//! 40 recall positions `1/40, 2/40, ..., 1` with max-interpolation.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::calib::{parse_calibration, CalibError};
use crate::geometry::{bev_iou, iou_3d};
use crate::labelio::{parse_labels, LabelError, ObjectLabel};

pub const RECALL_POSITIONS: usize = 40;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("detection {0} has no score")]
    MissingScore(usize),
    #[error("average precision is undefined without ground truths")]
    UndefinedAp,
    #[error("frame sets differ: missing from detections {missing_in_det:?}, missing from ground truth {missing_in_gt:?}")]
    FrameMismatch {
        missing_in_det: Vec<String>,
        missing_in_gt: Vec<String>,
    },
    #[error("no calibration for frames {0:?}")]
    MissingCalib(Vec<String>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Labels {
        path: PathBuf,
        #[source]
        source: LabelError,
    },
    #[error("{path}: {source}")]
    Calib {
        path: PathBuf,
        #[source]
        source: CalibError,
    },
}

/// Difficulty levels, ordered from easiest to ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Moderate,
    Hard,
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifficultyLimits {
    pub min_height: f64,
    pub max_occlusion: i32,
    pub max_truncation: f64,
}

impl Difficulty {
    pub const LEVELS: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard];

    /// Acceptance limits of a level; `None` for `Ignored`.
    pub fn limits(self) -> Option<DifficultyLimits> {
        let (min_height, max_occlusion, max_truncation) = match self {
            Difficulty::Easy => (40.0, 0, 0.15),
            Difficulty::Moderate => (25.0, 1, 0.30),
            Difficulty::Hard => (25.0, 2, 0.50),
            Difficulty::Ignored => return None,
        };
        Some(DifficultyLimits {
            min_height,
            max_occlusion,
            max_truncation,
        })
    }

    /// Whether an object of this difficulty is evaluated at `level`.
    pub fn counts_for(self, level: Difficulty) -> bool {
        self != Difficulty::Ignored && self <= level
    }
}

pub fn difficulty_of(label: &ObjectLabel) -> Difficulty {
    let height = label.bbox.height();
    Difficulty::LEVELS
        .into_iter()
        .find(|d| {
            let lim = d.limits().expect("evaluated levels have limits");
            height >= lim.min_height
                && label.occlusion <= lim.max_occlusion
                && label.truncation <= lim.max_truncation
        })
        .unwrap_or(Difficulty::Ignored)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IouKind {
    Bev,
    #[serde(rename = "3d")]
    ThreeD,
}

impl IouKind {
    pub fn iou(self, a: &ObjectLabel, b: &ObjectLabel) -> f64 {
        match self {
            IouKind::Bev => bev_iou(&a.box3().bev(), &b.box3().bev()),
            IouKind::ThreeD => iou_3d(&a.box3(), &b.box3()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IouThresholds {
    pub bev: f64,
    #[serde(rename = "3d")]
    pub three_d: f64,
}

impl IouThresholds {
    pub const fn uniform(t: f64) -> Self {
        Self { bev: t, three_d: t }
    }

    /// 0.7 for `Car`, 0.5 for every other class.
    pub fn for_class(class: &str) -> Self {
        Self::uniform(default_iou_threshold(class))
    }
}

pub fn default_iou_threshold(class: &str) -> f64 {
    if class == "Car" {
        0.7
    } else {
        0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    TruePositive,
    FalsePositive,
    /// Matched an ignored ground truth; neither TP nor FP.
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub det_index: usize,
    pub score: f64,
    pub outcome: Outcome,
    pub gt_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matching {
    /// One decision per detection, in processing order.
    pub decisions: Vec<Decision>,
    /// Ground truths that are not ignored.
    pub num_gt: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Matching {
    pub fn scored_outcomes(&self) -> impl Iterator<Item = ScoredOutcome> + '_ {
        self.decisions.iter().filter_map(|d| match d.outcome {
            Outcome::TruePositive => Some(ScoredOutcome::new(d.score, true)),
            Outcome::FalsePositive => Some(ScoredOutcome::new(d.score, false)),
            Outcome::Ignored => None,
        })
    }
}

/// Greedy matching with every ground truth counted.
pub fn match_detections(
    dets: &[ObjectLabel],
    gts: &[ObjectLabel],
    kind: IouKind,
    threshold: f64,
) -> Result<Matching, EvalError> {
    match_detections_with_ignored(dets, gts, &vec![false; gts.len()], kind, threshold)
}

/// Greedy matching in descending score order; equal scores keep input order.
///
/// Each detection takes the unmatched ground truth with the highest IoU,
/// provided it reaches `threshold`. Ties in IoU go to the lower index.
/// Matching an ignored ground truth consumes it but the detection counts as
/// neither TP nor FP.
pub fn match_detections_with_ignored(
    dets: &[ObjectLabel],
    gts: &[ObjectLabel],
    ignored: &[bool],
    kind: IouKind,
    threshold: f64,
) -> Result<Matching, EvalError> {
    assert_eq!(gts.len(), ignored.len(), "one ignore flag per ground truth");
    let scores = dets
        .iter()
        .enumerate()
        .map(|(i, d)| d.score.ok_or(EvalError::MissingScore(i)))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut taken = vec![false; gts.len()];
    let mut m = Matching {
        num_gt: ignored.iter().filter(|&&ig| !ig).count(),
        ..Matching::default()
    };
    for det_index in order {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if taken[g] {
                continue;
            }
            let iou = kind.iou(&dets[det_index], gt);
            if iou >= threshold && best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        let outcome = match best {
            Some((g, _)) => {
                taken[g] = true;
                if ignored[g] {
                    Outcome::Ignored
                } else {
                    m.tp += 1;
                    Outcome::TruePositive
                }
            }
            None => {
                m.fp += 1;
                Outcome::FalsePositive
            }
        };
        m.decisions.push(Decision {
            det_index,
            score: scores[det_index],
            outcome,
            gt_index: best.map(|(g, _)| g),
        });
    }
    m.fn_ = m.num_gt - m.tp;
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredOutcome {
    pub score: f64,
    pub true_positive: bool,
}

impl ScoredOutcome {
    pub const fn new(score: f64, true_positive: bool) -> Self {
        Self {
            score,
            true_positive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub tp: usize,
    pub fp: usize,
    pub recall: f64,
    pub precision: f64,
}

/// Precision/recall at every distinct score threshold, from the highest
/// score down. Detections with equal scores enter together.
pub fn pr_curve(events: &[ScoredOutcome], num_gt: usize) -> Vec<PrPoint> {
    let mut sorted = events.to_vec();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    for (i, e) in sorted.iter().enumerate() {
        if e.true_positive {
            tp += 1;
        } else {
            fp += 1;
        }
        let group_ends = sorted.get(i + 1).is_none_or(|next| next.score != e.score);
        if group_ends {
            points.push(PrPoint {
                tp,
                fp,
                recall: if num_gt == 0 {
                    0.0
                } else {
                    tp as f64 / num_gt as f64
                },
                precision: tp as f64 / (tp + fp) as f64,
            });
        }
    }
    points
}

/// Interpolated precision at recall `k/40` for `k = 1..=40`.
pub fn interpolated_precision(
    events: &[ScoredOutcome],
    num_gt: usize,
) -> Result<[f64; RECALL_POSITIONS], EvalError> {
    if num_gt == 0 {
        return Err(EvalError::UndefinedAp);
    }
    let curve = pr_curve(events, num_gt);
    // running max from the high-recall end
    let mut envelope = vec![0.0; curve.len()];
    let mut best: f64 = 0.0;
    for (i, p) in curve.iter().enumerate().rev() {
        best = best.max(p.precision);
        envelope[i] = best;
    }
    let mut out = [0.0; RECALL_POSITIONS];
    let n = RECALL_POSITIONS;
    for (k, slot) in out.iter_mut().enumerate() {
        // recall >= (k+1)/40, compared exactly in integers
        let need = (k + 1) * num_gt;
        if let Some(i) = curve.iter().position(|p| p.tp * n >= need) {
            *slot = envelope[i];
        }
    }
    Ok(out)
}

/// Average precision over 40 recall positions, in percent.
pub fn ap_r40(events: &[ScoredOutcome], num_gt: usize) -> Result<f64, EvalError> {
    let precision = interpolated_precision(events, num_gt)?;
    Ok(100.0 * precision.iter().sum::<f64>() / RECALL_POSITIONS as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResult {
    pub difficulty: Difficulty,
    pub num_gt: usize,
    /// `None` when the level has no ground truth.
    pub ap_bev: Option<f64>,
    pub ap_3d: Option<f64>,
    pub precision_bev: Vec<f64>,
    pub precision_3d: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub class: String,
    pub thresholds: IouThresholds,
    pub frames: usize,
    pub levels: Vec<LevelResult>,
}

impl EvalResult {
    pub fn level(&self, d: Difficulty) -> Option<&LevelResult> {
        self.levels.iter().find(|l| l.difficulty == d)
    }

    /// Interpolated PR samples as `difficulty,metric,recall,precision`.
    pub fn write_pr_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["difficulty", "metric", "recall", "precision"])?;
        for level in &self.levels {
            let name = format!("{:?}", level.difficulty).to_lowercase();
            for (metric, samples) in [("bev", &level.precision_bev), ("3d", &level.precision_3d)] {
                for (k, p) in samples.iter().enumerate() {
                    let recall = (k + 1) as f64 / RECALL_POSITIONS as f64;
                    w.write_record([
                        name.clone(),
                        metric.into(),
                        format!("{recall:.3}"),
                        format!("{p:.6}"),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Detections and ground truths of one frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FramePair {
    pub frame_id: String,
    pub detections: Vec<ObjectLabel>,
    pub ground_truth: Vec<ObjectLabel>,
}

fn level_events(
    frames: &[FramePair],
    class: &str,
    level: Difficulty,
    kind: IouKind,
    threshold: f64,
) -> Result<(Vec<ScoredOutcome>, usize), EvalError> {
    let per_frame = frames
        .par_iter()
        .map(|f| {
            let dets: Vec<ObjectLabel> = f
                .detections
                .iter()
                .filter(|d| d.class_name == class)
                .cloned()
                .collect();
            let gts: Vec<ObjectLabel> = f
                .ground_truth
                .iter()
                .filter(|g| g.class_name == class)
                .cloned()
                .collect();
            let ignored: Vec<bool> = gts
                .iter()
                .map(|g| !difficulty_of(g).counts_for(level))
                .collect();
            let m = match_detections_with_ignored(&dets, &gts, &ignored, kind, threshold)?;
            Ok((m.scored_outcomes().collect::<Vec<_>>(), m.num_gt))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let mut events = Vec::new();
    let mut num_gt = 0;
    for (e, n) in per_frame {
        events.extend(e);
        num_gt += n;
    }
    Ok((events, num_gt))
}

/// Evaluates in-memory frames for one class.
pub fn evaluate_frames(
    frames: &[FramePair],
    class: &str,
    thresholds: IouThresholds,
) -> Result<EvalResult, EvalError> {
    let mut levels = Vec::new();
    for level in Difficulty::LEVELS {
        let (bev_events, num_gt) =
            level_events(frames, class, level, IouKind::Bev, thresholds.bev)?;
        let (events_3d, _) =
            level_events(frames, class, level, IouKind::ThreeD, thresholds.three_d)?;
        let (ap_bev, precision_bev) = summarize(&bev_events, num_gt)?;
        let (ap_3d, precision_3d) = summarize(&events_3d, num_gt)?;
        levels.push(LevelResult {
            difficulty: level,
            num_gt,
            ap_bev,
            ap_3d,
            precision_bev,
            precision_3d,
        });
    }
    Ok(EvalResult {
        class: class.to_owned(),
        thresholds,
        frames: frames.len(),
        levels,
    })
}

fn summarize(
    events: &[ScoredOutcome],
    num_gt: usize,
) -> Result<(Option<f64>, Vec<f64>), EvalError> {
    match interpolated_precision(events, num_gt) {
        Ok(p) => Ok((Some(ap_r40(events, num_gt)?), p.to_vec())),
        Err(EvalError::UndefinedAp) => Ok((None, Vec::new())),
        Err(e) => Err(e),
    }
}

/// Frame ids (file stems) of the `.txt` files in `dir`, sorted.
pub fn list_frames(dir: &Path) -> Result<BTreeSet<String>, EvalError> {
    let io_err = |source| EvalError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut ids = BTreeSet::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.extension().is_some_and(|e| e == "txt") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.insert(stem.to_owned());
            }
        }
    }
    Ok(ids)
}

fn read_labels(path: &Path) -> Result<Vec<ObjectLabel>, EvalError> {
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_labels(&text).map_err(|source| EvalError::Labels {
        path: path.to_path_buf(),
        source,
    })
}

/// Evaluates a directory of detection files against a directory of ground
/// truth files with identical frame ids. When `calib_dir` is given every
/// frame must also have a readable calibration.
pub fn evaluate(
    det_dir: &Path,
    gt_dir: &Path,
    calib_dir: Option<&Path>,
    class: &str,
    thresholds: IouThresholds,
) -> Result<EvalResult, EvalError> {
    let det_ids = list_frames(det_dir)?;
    let gt_ids = list_frames(gt_dir)?;
    if det_ids != gt_ids {
        return Err(EvalError::FrameMismatch {
            missing_in_det: gt_ids.difference(&det_ids).cloned().collect(),
            missing_in_gt: det_ids.difference(&gt_ids).cloned().collect(),
        });
    }
    if let Some(calib_dir) = calib_dir {
        let missing: Vec<String> = gt_ids
            .iter()
            .filter(|id| !calib_dir.join(format!("{id}.txt")).is_file())
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(EvalError::MissingCalib(missing));
        }
        for id in &gt_ids {
            let path = calib_dir.join(format!("{id}.txt"));
            let text = fs::read_to_string(&path).map_err(|source| EvalError::Io {
                path: path.clone(),
                source,
            })?;
            parse_calibration(&text).map_err(|source| EvalError::Calib { path, source })?;
        }
    }
    let frames = gt_ids
        .par_iter()
        .map(|id| {
            Ok(FramePair {
                frame_id: id.clone(),
                detections: read_labels(&det_dir.join(format!("{id}.txt")))?,
                ground_truth: read_labels(&gt_dir.join(format!("{id}.txt")))?,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    evaluate_frames(&frames, class, thresholds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Box2, Dims, Point3};

    fn obj(
        x: f64,
        z: f64,
        height_px: f64,
        occ: i32,
        trunc: f64,
        score: Option<f64>,
    ) -> ObjectLabel {
        ObjectLabel {
            class_name: "Car".into(),
            truncation: trunc,
            occlusion: occ,
            alpha: 0.0,
            bbox: Box2::new(100.0, 100.0, 200.0, 100.0 + height_px),
            dims: Dims::new(1.5, 1.6, 4.0),
            location: Point3::new(x, 1.6, z),
            ry: 0.0,
            score,
        }
    }

    #[test]
    fn difficulty_examples() {
        assert_eq!(
            difficulty_of(&obj(0.0, 10.0, 45.0, 0, 0.1, None)),
            Difficulty::Easy
        );
        assert_eq!(
            difficulty_of(&obj(0.0, 10.0, 30.0, 1, 0.2, None)),
            Difficulty::Moderate
        );
        assert_eq!(
            difficulty_of(&obj(0.0, 10.0, 30.0, 2, 0.45, None)),
            Difficulty::Hard
        );
        assert_eq!(
            difficulty_of(&obj(0.0, 10.0, 20.0, 0, 0.0, None)),
            Difficulty::Ignored
        );
        assert_eq!(
            difficulty_of(&obj(0.0, 10.0, 60.0, 3, 0.0, None)),
            Difficulty::Ignored
        );
        assert_eq!(
            difficulty_of(&obj(0.0, 10.0, 60.0, 0, 0.6, None)),
            Difficulty::Ignored
        );
        // boundary values are inclusive
        assert_eq!(
            difficulty_of(&obj(0.0, 10.0, 40.0, 0, 0.15, None)),
            Difficulty::Easy
        );
    }

    #[test]
    fn limits_are_monotone() {
        let l: Vec<_> = Difficulty::LEVELS
            .iter()
            .map(|d| d.limits().unwrap())
            .collect();
        for w in l.windows(2) {
            assert!(w[0].min_height >= w[1].min_height);
            assert!(w[0].max_occlusion <= w[1].max_occlusion);
            assert!(w[0].max_truncation <= w[1].max_truncation);
        }
        assert!(Difficulty::Easy.counts_for(Difficulty::Hard));
        assert!(!Difficulty::Hard.counts_for(Difficulty::Easy));
        assert!(!Difficulty::Ignored.counts_for(Difficulty::Hard));
    }

    #[test]
    fn exact_detection_is_a_true_positive() {
        let gt = obj(1.0, 20.0, 50.0, 0, 0.0, None);
        let det = ObjectLabel {
            score: Some(0.9),
            ..gt.clone()
        };
        let m = match_detections(&[det], &[gt], IouKind::ThreeD, 0.7).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_), (1, 0, 0));
    }

    #[test]
    fn duplicate_detection_is_a_false_positive() {
        let gt = obj(1.0, 20.0, 50.0, 0, 0.0, None);
        let a = ObjectLabel {
            score: Some(0.8),
            ..gt.clone()
        };
        let b = ObjectLabel {
            score: Some(0.9),
            ..gt.clone()
        };
        let m = match_detections(&[a, b], &[gt], IouKind::Bev, 0.7).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_), (1, 1, 0));
        assert_eq!(m.decisions[0].det_index, 1);
        assert_eq!(m.decisions[0].outcome, Outcome::TruePositive);
    }

    #[test]
    fn below_threshold_is_missed() {
        // length 4 boxes shifted 1.0 m along x: BEV IoU = 3/5 = 0.6
        let gt = obj(0.0, 20.0, 50.0, 0, 0.0, None);
        let det = obj(1.0, 20.0, 50.0, 0, 0.0, Some(0.9));
        let iou = IouKind::Bev.iou(&det, &gt);
        assert!((iou - 0.6).abs() < 1e-12, "{iou}");
        let m = match_detections(&[det], &[gt], IouKind::Bev, 0.7).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_), (0, 1, 1));
    }

    #[test]
    fn missing_score_is_a_contract_error() {
        let gt = obj(0.0, 20.0, 50.0, 0, 0.0, None);
        assert!(matches!(
            match_detections(
                std::slice::from_ref(&gt),
                std::slice::from_ref(&gt),
                IouKind::Bev,
                0.7
            ),
            Err(EvalError::MissingScore(0))
        ));
    }

    #[test]
    fn ignored_gt_absorbs_its_match() {
        let gt = obj(0.0, 20.0, 50.0, 0, 0.0, None);
        let det = ObjectLabel {
            score: Some(0.5),
            ..gt.clone()
        };
        let m = match_detections_with_ignored(&[det], &[gt], &[true], IouKind::Bev, 0.7).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_, m.num_gt), (0, 0, 0, 0));
        assert_eq!(m.decisions[0].outcome, Outcome::Ignored);
        assert_eq!(m.scored_outcomes().count(), 0);
    }

    #[test]
    fn equal_scores_keep_input_order() {
        let gt = obj(0.0, 20.0, 50.0, 0, 0.0, None);
        let a = ObjectLabel {
            score: Some(0.5),
            ..obj(0.2, 20.0, 50.0, 0, 0.0, None)
        };
        let b = ObjectLabel {
            score: Some(0.5),
            ..gt.clone()
        };
        let m = match_detections(&[a, b], &[gt], IouKind::Bev, 0.7).unwrap();
        assert_eq!(m.decisions[0].det_index, 0);
        assert_eq!(m.decisions[0].outcome, Outcome::TruePositive);
        assert_eq!(m.decisions[1].outcome, Outcome::FalsePositive);
    }

    #[test]
    fn ap_examples() {
        let perfect: Vec<_> = (0..5)
            .map(|i| ScoredOutcome::new(1.0 - i as f64 * 0.1, true))
            .collect();
        assert_eq!(ap_r40(&perfect, 5).unwrap(), 100.0);
        assert_eq!(ap_r40(&[], 3).unwrap(), 0.0);
        let tail_fp = [
            ScoredOutcome::new(0.9, true),
            ScoredOutcome::new(0.3, false),
        ];
        assert_eq!(ap_r40(&tail_fp, 1).unwrap(), 100.0);
        assert!(matches!(ap_r40(&tail_fp, 0), Err(EvalError::UndefinedAp)));
    }

    #[test]
    fn ap_with_leading_false_positive() {
        // FP at top then TP: precision 1/2 at recall 1
        let ev = [
            ScoredOutcome::new(0.9, false),
            ScoredOutcome::new(0.8, true),
        ];
        assert_eq!(ap_r40(&ev, 1).unwrap(), 50.0);
        // half the objects found at precision 1
        let ev = [ScoredOutcome::new(0.9, true)];
        assert_eq!(ap_r40(&ev, 2).unwrap(), 50.0);
    }

    #[test]
    fn tied_scores_enter_together() {
        let ev = [
            ScoredOutcome::new(0.5, false),
            ScoredOutcome::new(0.5, true),
        ];
        let curve = pr_curve(&ev, 1);
        assert_eq!(curve.len(), 1);
        assert_eq!(curve[0].precision, 0.5);
    }

    #[test]
    fn evaluate_in_memory_echo() {
        let gts = vec![
            obj(0.0, 20.0, 50.0, 0, 0.0, None),
            obj(4.0, 30.0, 30.0, 1, 0.2, None),
            obj(-4.0, 40.0, 10.0, 0, 0.0, None),
        ];
        let dets = gts
            .iter()
            .map(|g| ObjectLabel {
                score: Some(1.0),
                ..g.clone()
            })
            .collect();
        let frames = [FramePair {
            frame_id: "0".into(),
            detections: dets,
            ground_truth: gts,
        }];
        let r = evaluate_frames(&frames, "Car", IouThresholds::for_class("Car")).unwrap();
        for level in &r.levels {
            assert_eq!(level.ap_bev, Some(100.0), "{level:?}");
            assert_eq!(level.ap_3d, Some(100.0));
        }
        assert_eq!(r.level(Difficulty::Easy).unwrap().num_gt, 1);
        assert_eq!(r.level(Difficulty::Hard).unwrap().num_gt, 2);
    }

    #[test]
    fn other_classes_are_not_evaluated() {
        let mut ped = obj(0.0, 20.0, 50.0, 0, 0.0, None);
        ped.class_name = "Pedestrian".into();
        let frames = [FramePair {
            frame_id: "0".into(),
            detections: vec![],
            ground_truth: vec![ped],
        }];
        let r = evaluate_frames(&frames, "Car", IouThresholds::for_class("Car")).unwrap();
        assert!(r.levels.iter().all(|l| l.ap_bev.is_none() && l.num_gt == 0));
    }

    #[test]
    fn default_thresholds() {
        assert_eq!(default_iou_threshold("Car"), 0.7);
        assert_eq!(default_iou_threshold("Pedestrian"), 0.5);
        assert_eq!(default_iou_threshold("Cyclist"), 0.5);
    }

    #[test]
    fn pr_csv_has_forty_rows_per_metric() {
        let gts = vec![obj(0.0, 20.0, 50.0, 0, 0.0, None)];
        let dets = vec![ObjectLabel {
            score: Some(0.7),
            ..gts[0].clone()
        }];
        let frames = [FramePair {
            frame_id: "0".into(),
            detections: dets,
            ground_truth: gts,
        }];
        let r = evaluate_frames(&frames, "Car", IouThresholds::uniform(0.7)).unwrap();
        let mut buf = Vec::new();
        r.write_pr_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 2 * 40);
        assert!(text.contains("easy,bev,1.000,1.000000"));
    }
}
