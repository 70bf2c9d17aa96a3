//! Pseudo-label generation along the viewing frustum.
//!
//! Each ground-truth box is moved to a set of fractional depth offsets
//! `z' = (1 + dz) * z`, with x and y following the X-Z and Y-Z ratios so the
//! location stays on the same viewing ray. Dimensions and yaw are left as they
//! are. Every pseudo label gets a quality score, either the IoU of the
//! projected boxes or `1 - |dz * z| / c`, and labels with a non-positive
//! score are discarded.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calib::CameraIntrinsics;
use crate::geometry::{aabb_iou, project_box_aabb, GeometryError, ImageSize};
use crate::labelio::{FrameAnnotation, ObjectLabel, PseudoLabel, ScoreStrategy};

pub const DEFAULT_DELTA_Z: [f64; 4] = [-0.08, -0.04, 0.04, 0.08];
pub const DEFAULT_C: f64 = 4.0;
pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_FILTER_THRESHOLD: f64 = 0.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("depth offset {0} is invalid; offsets must be non-zero with magnitude below 1")]
    DeltaZ(f64),
    #[error("c must be positive, got {0}")]
    C(f64),
    #[error("{field} must be finite, got {value}")]
    NotFinite { field: &'static str, value: f64 },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
}

/// Why a (label, offset) pair produced no pseudo label.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkipReason {
    #[error("object depth {0} is not in front of the camera")]
    NonPositiveDepth(f64),
    #[error("depth offset {0} would move the object through the camera")]
    OffsetTooLarge(f64),
    #[error(transparent)]
    Projection(#[from] GeometryError),
}

/// Which box stands for the ground truth when scoring by IoU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GtBoxSource {
    /// Projection of the ground-truth 3D box, same as the pseudo box.
    #[default]
    Reprojected,
    /// The 2D box stored in the label file.
    Annotated,
}

impl std::str::FromStr for GtBoxSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "reprojected" => Ok(Self::Reprojected),
            "annotated" => Ok(Self::Annotated),
            other => Err(format!("unknown gt box source `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassOverride {
    pub delta_z_set: Option<Vec<f64>>,
    pub c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObmoConfig {
    /// Fractional depth offsets applied to every object.
    pub delta_z_set: Vec<f64>,
    pub strategy: ScoreStrategy,
    /// Linear-score normalizer in meters.
    pub c: f64,
    /// Weight of the label-score loss in the total loss.
    pub lambda: f64,
    /// Pseudo labels need a quality strictly above this.
    pub filter_threshold: f64,
    pub gt_box: GtBoxSource,
    /// Per-class replacements for `delta_z_set` and `c`.
    pub classes: BTreeMap<String, ClassOverride>,
}

impl Default for ObmoConfig {
    fn default() -> Self {
        Self {
            delta_z_set: DEFAULT_DELTA_Z.to_vec(),
            strategy: ScoreStrategy::Linear,
            c: DEFAULT_C,
            lambda: DEFAULT_LAMBDA,
            filter_threshold: DEFAULT_FILTER_THRESHOLD,
            gt_box: GtBoxSource::Reprojected,
            classes: BTreeMap::new(),
        }
    }
}

fn check_offsets(set: &[f64]) -> Result<(), ConfigError> {
    match set.iter().find(|dz| !(dz.abs() < 1.0) || **dz == 0.0) {
        Some(&bad) => Err(ConfigError::DeltaZ(bad)),
        None => Ok(()),
    }
}

fn check_c(c: f64) -> Result<(), ConfigError> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::C(c))
    }
}

fn parse_offsets(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|e| ConfigError::BadValue {
                key: key.to_owned(),
                value: value.to_owned(),
                reason: e.to_string(),
            })
        })
        .collect()
}

fn parse_real(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|e| ConfigError::BadValue {
            key: key.to_owned(),
            value: value.to_owned(),
            reason: e.to_string(),
        })
}

impl ObmoConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_offsets(&self.delta_z_set)?;
        check_c(self.c)?;
        for (field, value) in [
            ("lambda", self.lambda),
            ("filter_threshold", self.filter_threshold),
        ] {
            if !value.is_finite() {
                return Err(ConfigError::NotFinite { field, value });
            }
        }
        for o in self.classes.values() {
            if let Some(set) = &o.delta_z_set {
                check_offsets(set)?;
            }
            if let Some(c) = o.c {
                check_c(c)?;
            }
        }
        Ok(())
    }

    pub fn delta_z_for(&self, class: &str) -> &[f64] {
        self.classes
            .get(class)
            .and_then(|o| o.delta_z_set.as_deref())
            .unwrap_or(&self.delta_z_set)
    }

    pub fn c_for(&self, class: &str) -> f64 {
        self.classes.get(class).and_then(|o| o.c).unwrap_or(self.c)
    }

    /// Builds a validated config from flat string pairs, starting from the
    /// defaults.
    ///
    /// Keys: `delta_z_set` (comma-separated fractions, empty for none),
    /// `strategy`, `c`, `lambda`, `filter_threshold`, `gt_box`, and the
    /// per-class forms `class.<Name>.delta_z_set` / `class.<Name>.c`.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut cfg = Self::default();
        for (key, value) in pairs {
            let bad = |reason: String| ConfigError::BadValue {
                key: key.to_owned(),
                value: value.to_owned(),
                reason,
            };
            match key {
                "delta_z_set" => cfg.delta_z_set = parse_offsets(key, value)?,
                "strategy" => cfg.strategy = value.trim().parse().map_err(bad)?,
                "gt_box" => cfg.gt_box = value.trim().parse().map_err(bad)?,
                "c" => cfg.c = parse_real(key, value)?,
                "lambda" => cfg.lambda = parse_real(key, value)?,
                "filter_threshold" => cfg.filter_threshold = parse_real(key, value)?,
                _ => {
                    let Some((class, field)) = key
                        .strip_prefix("class.")
                        .and_then(|rest| rest.rsplit_once('.'))
                    else {
                        return Err(ConfigError::UnknownKey(key.to_owned()));
                    };
                    let entry = cfg.classes.entry(class.to_owned()).or_default();
                    match field {
                        "delta_z_set" => entry.delta_z_set = Some(parse_offsets(key, value)?),
                        "c" => entry.c = Some(parse_real(key, value)?),
                        _ => return Err(ConfigError::UnknownKey(key.to_owned())),
                    }
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Moves `label` along its viewing ray to depth `(1 + delta_z) * z`.
///
/// x and y keep their ratios to z, so the location projects to the same
/// pixel. Dimensions, yaw, alpha, truncation and occlusion are unchanged;
/// the 2D box is replaced by the projection of the moved 3D box. A zero
/// offset returns the label untouched.
pub fn shift_along_frustum(
    label: &ObjectLabel,
    delta_z: f64,
    k: &CameraIntrinsics,
    image_size: Option<ImageSize>,
) -> Result<ObjectLabel, SkipReason> {
    let z = label.location.z;
    if !(z > 0.0) {
        return Err(SkipReason::NonPositiveDepth(z));
    }
    if !(delta_z > -1.0) {
        return Err(SkipReason::OffsetTooLarge(delta_z));
    }
    if delta_z == 0.0 {
        return Ok(label.clone());
    }
    let x_ratio = label.location.x / z;
    let y_ratio = label.location.y / z;
    let new_z = (1.0 + delta_z) * z;

    let mut shifted = label.clone();
    shifted.location.x = x_ratio * new_z;
    shifted.location.y = y_ratio * new_z;
    shifted.location.z = new_z;
    shifted.bbox = project_box_aabb(k, &shifted.box3(), image_size)?;
    Ok(shifted)
}

/// `1 - |delta_z * z| / c`. Can be negative for large offsets.
pub fn linear_label_score(z: f64, delta_z: f64, c: f64) -> f64 {
    1.0 - (delta_z * z).abs() / c
}

/// IoU between the projected ground-truth and pseudo boxes, with the ground
/// truth reprojected from its 3D box.
pub fn iou_label_score(
    k: &CameraIntrinsics,
    gt: &ObjectLabel,
    pseudo: &ObjectLabel,
    image_size: Option<ImageSize>,
) -> Result<f64, SkipReason> {
    iou_label_score_with(k, gt, pseudo, image_size, GtBoxSource::Reprojected)
}

pub fn iou_label_score_with(
    k: &CameraIntrinsics,
    gt: &ObjectLabel,
    pseudo: &ObjectLabel,
    image_size: Option<ImageSize>,
    source: GtBoxSource,
) -> Result<f64, SkipReason> {
    let gt_box = match source {
        GtBoxSource::Reprojected => project_box_aabb(k, &gt.box3(), image_size)?,
        GtBoxSource::Annotated => match image_size {
            Some(size) => gt.bbox.clipped(size),
            None => gt.bbox,
        },
    };
    let pseudo_box = project_box_aabb(k, &pseudo.box3(), image_size)?;
    Ok(aabb_iou(&gt_box, &pseudo_box))
}

/// A (label, offset) pair that was skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Skip {
    pub label_index: usize,
    pub delta_z: f64,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Generation {
    /// Retained pseudo labels in ground-truth order, then offset order.
    pub pseudo: Vec<PseudoLabel>,
    /// Candidates whose quality did not exceed the filter threshold.
    pub dropped: usize,
    pub skipped: Vec<Skip>,
}

/// Produces the scored and filtered pseudo labels of one frame.
///
/// `DontCare` labels are never augmented. Ground truths themselves are not
/// included in the output.
pub fn generate_pseudo_labels(frame: &FrameAnnotation, cfg: &ObmoConfig) -> Generation {
    let mut out = Generation::default();
    for (label_index, gt) in frame.labels.iter().enumerate() {
        if gt.is_dont_care() {
            continue;
        }
        let c = cfg.c_for(&gt.class_name);
        for &delta_z in cfg.delta_z_for(&gt.class_name) {
            let scored =
                shift_along_frustum(gt, delta_z, &frame.calib, frame.image_size).and_then(|p| {
                    let quality = match cfg.strategy {
                        ScoreStrategy::Linear => linear_label_score(gt.location.z, delta_z, c),
                        ScoreStrategy::Iou => iou_label_score_with(
                            &frame.calib,
                            gt,
                            &p,
                            frame.image_size,
                            cfg.gt_box,
                        )?,
                    };
                    Ok((p, quality))
                });
            match scored {
                Ok((base, quality)) if quality > cfg.filter_threshold => {
                    out.pseudo.push(PseudoLabel {
                        base,
                        delta_z,
                        quality,
                        strategy: cfg.strategy,
                    })
                }
                Ok(_) => out.dropped += 1,
                Err(reason) => out.skipped.push(Skip {
                    label_index,
                    delta_z,
                    reason,
                }),
            }
        }
    }
    out
}

/// L1 distance between predicted and target label scores.
pub fn label_score_loss(pred: f64, gt: f64) -> f64 {
    (pred - gt).abs()
}

pub fn total_loss(baseline: f64, score_loss: f64, lambda: f64) -> f64 {
    baseline + lambda * score_loss
}
