//! KITTI object label files.
//!
//! Field order per line: class, truncation, occlusion, alpha, bbox
//! (left top right bottom), dimensions (h w l), location (x y z), rotation_y,
//! and an optional trailing score. Augmented files always use the 16-field
//! form with the quality score in the score column.

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

use crate::calib::CameraIntrinsics;
use crate::geometry::{Box2, Box3, Dims, ImageSize, Point3};

pub const DONT_CARE: &str = "DontCare";

/// Decimals used for every real except truncation.
pub const DEFAULT_DECIMALS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabelError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("pseudo label for `{class}` at index {index} has quality {quality}; only positive qualities may be written")]
    NonPositiveQuality {
        index: usize,
        class: String,
        quality: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectLabel {
    pub class_name: String,
    pub truncation: f64,
    pub occlusion: i32,
    /// Observation angle in radians.
    pub alpha: f64,
    pub bbox: Box2,
    pub dims: Dims,
    /// Bottom-face center in camera coordinates.
    pub location: Point3,
    /// Yaw about the camera y axis.
    pub ry: f64,
    pub score: Option<f64>,
}

impl ObjectLabel {
    pub fn is_dont_care(&self) -> bool {
        self.class_name == DONT_CARE
    }

    pub fn box3(&self) -> Box3 {
        Box3 {
            location: self.location,
            dims: self.dims,
            ry: self.ry,
        }
    }

    /// Checks the label invariants: ordered 2D box, positive dimensions and
    /// angles within `[-pi, pi]`. `DontCare` placeholders always pass.
    pub fn is_valid(&self) -> bool {
        if self.is_dont_care() {
            return true;
        }
        let b = &self.bbox;
        b.right >= b.left
            && b.bottom >= b.top
            && self.dims.h > 0.0
            && self.dims.w > 0.0
            && self.dims.l > 0.0
            && (-PI..=PI).contains(&self.alpha)
            && (-PI..=PI).contains(&self.ry)
    }
}

/// Which scoring rule produced a pseudo label's quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreStrategy {
    Iou,
    Linear,
}

impl std::str::FromStr for ScoreStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "iou" => Ok(Self::Iou),
            "linear" => Ok(Self::Linear),
            other => Err(format!(
                "unknown strategy `{other}` (expected `iou` or `linear`)"
            )),
        }
    }
}

/// A ground-truth label moved along its viewing ray, with its quality.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabel {
    pub base: ObjectLabel,
    /// Fractional depth offset that generated this label, e.g. `0.04`.
    pub delta_z: f64,
    pub quality: f64,
    pub strategy: ScoreStrategy,
}

/// All labels of one image with its camera.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAnnotation {
    pub frame_id: String,
    pub labels: Vec<ObjectLabel>,
    pub calib: CameraIntrinsics,
    pub image_size: Option<ImageSize>,
}

/// Maps an angle into `[-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..=PI).contains(&a) || !a.is_finite() {
        return a;
    }
    (a + PI).rem_euclid(2.0 * PI) - PI
}

pub fn parse_labels(text: &str) -> Result<Vec<ObjectLabel>, LabelError> {
    let mut labels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        labels.push(parse_line(line, idx + 1)?);
    }
    Ok(labels)
}

fn parse_line(line: &str, line_no: usize) -> Result<ObjectLabel, LabelError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 15 && fields.len() != 16 {
        return Err(LabelError::Parse {
            line: line_no,
            reason: format!("expected 15 or 16 fields, found {}", fields.len()),
        });
    }
    let real = |i: usize| -> Result<f64, LabelError> {
        fields[i].parse::<f64>().map_err(|_| LabelError::Parse {
            line: line_no,
            reason: format!("field {} (`{}`) is not a number", i + 1, fields[i]),
        })
    };
    let occlusion = fields[2].parse::<i32>().map_err(|_| LabelError::Parse {
        line: line_no,
        reason: format!("occlusion `{}` is not an integer", fields[2]),
    })?;

    let mut label = ObjectLabel {
        class_name: fields[0].to_owned(),
        truncation: real(1)?,
        occlusion,
        alpha: real(3)?,
        bbox: Box2::new(real(4)?, real(5)?, real(6)?, real(7)?),
        dims: Dims::new(real(8)?, real(9)?, real(10)?),
        location: Point3::new(real(11)?, real(12)?, real(13)?),
        ry: real(14)?,
        score: if fields.len() == 16 {
            Some(real(15)?)
        } else {
            None
        },
    };

    if !label.is_dont_care() {
        for (name, angle) in [("alpha", &mut label.alpha), ("rotation_y", &mut label.ry)] {
            let wrapped = wrap_angle(*angle);
            if wrapped != *angle {
                log::warn!("line {line_no}: {name} {} wrapped to {wrapped}", *angle);
                *angle = wrapped;
            }
        }
    }
    Ok(label)
}

fn write_line(out: &mut String, label: &ObjectLabel, score: Option<f64>, decimals: usize) {
    let p = decimals.max(2);
    let b = &label.bbox;
    let d = &label.dims;
    let loc = &label.location;
    let _ = write!(
        out,
        "{} {:.2} {} {:.p$} {:.p$} {:.p$} {:.p$} {:.p$} {:.p$} {:.p$} {:.p$} {:.p$} {:.p$} {:.p$} {:.p$}",
        label.class_name,
        label.truncation,
        label.occlusion,
        label.alpha,
        b.left,
        b.top,
        b.right,
        b.bottom,
        d.h,
        d.w,
        d.l,
        loc.x,
        loc.y,
        loc.z,
        label.ry,
    );
    if let Some(s) = score {
        let _ = write!(out, " {s:.p$}");
    }
    out.push('\n');
}

/// Writes labels with the default precision.
pub fn write_labels(labels: &[ObjectLabel], with_score: bool) -> String {
    write_labels_with(labels, with_score, DEFAULT_DECIMALS)
}

/// Writes labels; truncation always uses 2 decimals and every other real
/// uses `decimals` (at least 2). With `with_score`, labels lacking a score
/// are written with 1.0.
pub fn write_labels_with(labels: &[ObjectLabel], with_score: bool, decimals: usize) -> String {
    let mut out = String::new();
    for label in labels {
        let score = with_score.then(|| label.score.unwrap_or(1.0));
        write_line(&mut out, label, score, decimals);
    }
    out
}

/// Ground truths (quality 1.0) followed by pseudo labels (quality in the
/// score column), all as 16-field lines.
pub fn write_augmented_frame(
    gt: &[ObjectLabel],
    pseudo: &[PseudoLabel],
) -> Result<String, LabelError> {
    if let Some((index, p)) = pseudo.iter().enumerate().find(|(_, p)| !(p.quality > 0.0)) {
        return Err(LabelError::NonPositiveQuality {
            index,
            class: p.base.class_name.clone(),
            quality: p.quality,
        });
    }
    let mut out = String::new();
    for label in gt {
        write_line(&mut out, label, Some(1.0), DEFAULT_DECIMALS);
    }
    for p in pseudo {
        write_line(&mut out, &p.base, Some(p.quality), DEFAULT_DECIMALS);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAR: &str = "Car 0.00 0 -1.57 100.0 100.0 200.0 180.0 1.53 1.63 3.88 5.0 1.0 50.0 -1.50";

    fn pseudo(base: &ObjectLabel, quality: f64) -> PseudoLabel {
        PseudoLabel {
            base: base.clone(),
            delta_z: 0.04,
            quality,
            strategy: ScoreStrategy::Linear,
        }
    }

    #[test]
    fn parses_ground_truth_line() {
        let labels = parse_labels(CAR).unwrap();
        assert_eq!(labels.len(), 1);
        let l = &labels[0];
        assert_eq!(l.class_name, "Car");
        assert_eq!(l.dims, Dims::new(1.53, 1.63, 3.88));
        assert_eq!(l.location, Point3::new(5.0, 1.0, 50.0));
        assert_eq!(l.bbox, Box2::new(100.0, 100.0, 200.0, 180.0));
        assert_eq!((l.alpha, l.ry), (-1.57, -1.50));
        assert_eq!(l.score, None);
        assert!(l.is_valid());
    }

    #[test]
    fn parses_trailing_score() {
        let labels = parse_labels(&format!("{CAR} 0.87")).unwrap();
        assert_eq!(labels[0].score, Some(0.87));
        assert_eq!(labels[0].location, Point3::new(5.0, 1.0, 50.0));
    }

    #[test]
    fn short_line_is_rejected() {
        let err = parse_labels("Car 0.00 0").unwrap_err();
        assert!(matches!(err, LabelError::Parse { line: 1, .. }));
    }

    #[test]
    fn non_numeric_field_reports_its_line() {
        let text = format!(
            "{CAR}\nCar 0.00 0 -1.57 100.0 100.0 200.0 180.0 1.53 x 3.88 5.0 1.0 50.0 -1.50"
        );
        let err = parse_labels(&text).unwrap_err();
        assert!(matches!(err, LabelError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn dont_care_passes_through() {
        let line = "DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10";
        let labels = parse_labels(line).unwrap();
        assert!(labels[0].is_dont_care());
        assert_eq!(labels[0].alpha, -10.0);
        assert_eq!(labels[0].ry, -10.0);
        assert_eq!(parse_labels(&write_labels(&labels, false)).unwrap(), labels);
    }

    #[test]
    fn out_of_range_angles_are_wrapped() {
        let line = "Car 0.00 0 4.0 100.0 100.0 200.0 180.0 1.53 1.63 3.88 5.0 1.0 50.0 -7.0";
        let l = &parse_labels(line).unwrap()[0];
        assert!((l.alpha - (4.0 - 2.0 * PI)).abs() < 1e-12);
        assert!((l.ry - (-7.0 + 2.0 * PI)).abs() < 1e-12);
        assert!(l.is_valid());
    }

    #[test]
    fn wrap_angle_edges() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert!(
            (wrap_angle(3.0 * PI) - PI).abs() < 1e-12 || (wrap_angle(3.0 * PI) + PI).abs() < 1e-12
        );
        assert!((-PI..=PI).contains(&wrap_angle(1e6)));
    }

    #[test]
    fn score_defaults_to_one_when_requested() {
        let labels = parse_labels(CAR).unwrap();
        let line = write_labels(&labels, true);
        assert!(line.trim_end().ends_with(" 1.000000"), "{line}");
        assert!(!write_labels(&labels, false)
            .trim_end()
            .ends_with(" 1.000000"));
    }

    #[test]
    fn write_uses_two_decimals_for_truncation() {
        let labels = parse_labels(CAR).unwrap();
        let line = write_labels(&labels, false);
        assert!(
            line.starts_with("Car 0.00 0 -1.570000 100.000000 "),
            "{line}"
        );
        let coarse = write_labels_with(&labels, false, 1);
        assert!(coarse.starts_with("Car 0.00 0 -1.57 100.00 "), "{coarse}");
    }

    #[test]
    fn empty_list_writes_nothing() {
        assert_eq!(write_labels(&[], true), "");
        assert!(parse_labels("").unwrap().is_empty());
    }

    #[test]
    fn augmented_frame_order_and_scores() {
        let gt = parse_labels(CAR).unwrap();
        let mut p = pseudo(&gt[0], 0.5);
        p.base.location = Point3::new(5.2, 1.04, 52.0);
        let text = write_augmented_frame(&gt, &[p.clone(), pseudo(&gt[0], 0.75)]).unwrap();
        let back = parse_labels(&text).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[0].score, Some(1.0));
        assert_eq!(back[1].score, Some(0.5));
        assert_eq!(back[1].location.z, 52.0);
        assert_eq!(back[2].score, Some(0.75));

        assert_eq!(
            parse_labels(&write_augmented_frame(&gt, &[]).unwrap())
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn augmented_frame_rejects_unfiltered_pseudo() {
        let gt = parse_labels(CAR).unwrap();
        for q in [0.0, -1.0, f64::NAN] {
            let err =
                write_augmented_frame(&gt, &[pseudo(&gt[0], 0.5), pseudo(&gt[0], q)]).unwrap_err();
            assert!(matches!(
                err,
                LabelError::NonPositiveQuality { index: 1, .. }
            ));
        }
    }

    #[test]
    fn strategy_from_str() {
        assert_eq!("IoU".parse::<ScoreStrategy>(), Ok(ScoreStrategy::Iou));
        assert_eq!("linear".parse::<ScoreStrategy>(), Ok(ScoreStrategy::Linear));
        assert!("cubic".parse::<ScoreStrategy>().is_err());
    }
}
