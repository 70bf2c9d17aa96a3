//! Depth-ambiguity reports.
//!
//! Scaling an object's location and dimensions by the same factor leaves its
//! projected 2D box unchanged, so a single image box is consistent with a
//! whole family of objects. Conversely a small relative dimension error turns
//! into the same relative depth error, which grows linearly with distance.

use std::io::Write;

use crate::calib::CameraIntrinsics;
use crate::geometry::{aabb_iou, project_box_aabb, GeometryError};
use crate::labelio::{FrameAnnotation, ObjectLabel};
use crate::obmo::{iou_label_score_with, linear_label_score, GtBoxSource, SkipReason};

pub const CSV_HEADER: [&str; 9] = [
    "frame_id",
    "label_index",
    "class",
    "Z",
    "scale",
    "deviation_px",
    "iou_unscaled_dims",
    "linear_score",
    "iou_score",
];

#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityReport {
    pub source: ObjectLabel,
    pub scale_factors: Vec<f64>,
    pub members: Vec<ObjectLabel>,
    /// Largest Chebyshev distance between a member's projected box and the
    /// source's, in pixels.
    pub max_projection_deviation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplificationRow {
    pub depth: f64,
    pub scale: f64,
    pub dim_error: f64,
    pub depth_error: f64,
}

/// `label` with location and dimensions multiplied by `s`.
pub fn scaled_member(label: &ObjectLabel, s: f64) -> ObjectLabel {
    let b = label.box3().scaled(s);
    ObjectLabel {
        location: b.location,
        dims: b.dims,
        ..label.clone()
    }
}

/// `label` with only the location multiplied by `s`.
pub fn location_only_member(label: &ObjectLabel, s: f64) -> ObjectLabel {
    ObjectLabel {
        location: label.location.scaled(s),
        ..label.clone()
    }
}

fn deviation(k: &CameraIntrinsics, a: &ObjectLabel, b: &ObjectLabel) -> Result<f64, GeometryError> {
    let pa = project_box_aabb(k, &a.box3(), None)?;
    let pb = project_box_aabb(k, &b.box3(), None)?;
    Ok(pa.chebyshev(&pb))
}

/// Builds the family of uniformly scaled copies of `label` and measures how
/// far their projections drift from the original.
pub fn ambiguous_family(
    k: &CameraIntrinsics,
    label: &ObjectLabel,
    scales: &[f64],
) -> Result<AmbiguityReport, GeometryError> {
    let members: Vec<ObjectLabel> = scales.iter().map(|&s| scaled_member(label, s)).collect();
    let mut max_dev: f64 = 0.0;
    for m in &members {
        max_dev = max_dev.max(deviation(k, label, m)?);
    }
    Ok(AmbiguityReport {
        source: label.clone(),
        scale_factors: scales.to_vec(),
        members,
        max_projection_deviation: max_dev,
    })
}

/// Dimension and depth errors caused by a relative size error `s`.
pub fn error_amplification(depth: f64, s: f64, height: f64) -> AmplificationRow {
    // z*s - z rather than z*(s-1): s-1 is inexact, the product usually is not
    AmplificationRow {
        depth,
        scale: s,
        dim_error: height * s - height,
        depth_error: depth * s - depth,
    }
}

/// Depths 10..=100 m in 10 m steps against scales 1.02, 1.04, 1.08.
pub fn amplification_table() -> Vec<AmplificationRow> {
    const HEIGHT: f64 = 1.53;
    let mut rows = Vec::new();
    for step in 1..=10 {
        let z = f64::from(step) * 10.0;
        for s in [1.02, 1.04, 1.08] {
            rows.push(error_amplification(z, s, HEIGHT));
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepSummary {
    pub rows: usize,
    /// Labels left out because they cannot be projected.
    pub skipped: usize,
    pub mean_deviation: f64,
    pub max_deviation: f64,
}

impl SweepSummary {
    /// Combines summaries of disjoint sweeps.
    pub fn merge(&self, other: &Self) -> Self {
        let rows = self.rows + other.rows;
        let mean = if rows == 0 {
            0.0
        } else {
            (self.mean_deviation * self.rows as f64 + other.mean_deviation * other.rows as f64)
                / rows as f64
        };
        Self {
            rows,
            skipped: self.skipped + other.skipped,
            mean_deviation: mean,
            max_deviation: self.max_deviation.max(other.max_deviation),
        }
    }
}

/// One row per (label, scale) for every non-`DontCare` label of the frame.
///
/// `deviation_px` compares the uniformly scaled member against the source;
/// `iou_unscaled_dims` is the projected-box IoU of the variant whose location
/// is scaled but whose dimensions are kept. The two scores use the offset
/// `scale - 1`. The header is not written here; see [`write_csv_header`].
pub fn ambiguity_sweep<W: Write>(
    frame: &FrameAnnotation,
    scales: &[f64],
    c: f64,
    out: &mut csv::Writer<W>,
) -> Result<SweepSummary, csv::Error> {
    let k = &frame.calib;
    let mut summary = SweepSummary::default();
    let mut total = 0.0;
    for (index, label) in frame.labels.iter().enumerate() {
        if label.is_dont_care() {
            continue;
        }
        let rows: Result<Vec<_>, SkipReason> = scales
            .iter()
            .map(|&s| {
                let dev = deviation(k, label, &scaled_member(label, s))?;
                let rigid = location_only_member(label, s);
                let iou_unscaled = aabb_iou(
                    &project_box_aabb(k, &label.box3(), None)?,
                    &project_box_aabb(k, &rigid.box3(), None)?,
                );
                let iou_score = iou_label_score_with(
                    k,
                    label,
                    &rigid,
                    frame.image_size,
                    GtBoxSource::Reprojected,
                )?;
                let linear = linear_label_score(label.location.z, s - 1.0, c);
                Ok((s, dev, iou_unscaled, linear, iou_score))
            })
            .collect();
        let rows = match rows {
            Ok(rows) => rows,
            Err(e) => {
                log::warn!("frame {}: label {index} skipped: {e}", frame.frame_id);
                summary.skipped += 1;
                continue;
            }
        };
        for (s, dev, iou_unscaled, linear, iou_score) in rows {
            out.write_record([
                frame.frame_id.clone(),
                index.to_string(),
                label.class_name.clone(),
                label.location.z.to_string(),
                s.to_string(),
                format!("{dev:.9e}"),
                format!("{iou_unscaled:.6}"),
                format!("{linear:.6}"),
                format!("{iou_score:.6}"),
            ])?;
            summary.rows += 1;
            total += dev;
            summary.max_deviation = summary.max_deviation.max(dev);
        }
    }
    if summary.rows > 0 {
        summary.mean_deviation = total / summary.rows as f64;
    }
    Ok(summary)
}

/// A CSV writer using the report conventions (comma, LF).
pub fn csv_writer<W: Write>(inner: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(inner)
}

pub fn write_csv_header<W: Write>(out: &mut csv::Writer<W>) -> Result<(), csv::Error> {
    out.write_record(CSV_HEADER)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Box2, Dims, Point3};

    fn cam() -> CameraIntrinsics {
        CameraIntrinsics::new(721.5377, 721.5377, 609.5593, 172.854).unwrap()
    }

    fn label(loc: Point3, dims: Dims) -> ObjectLabel {
        ObjectLabel {
            class_name: "Car".into(),
            truncation: 0.0,
            occlusion: 0,
            alpha: 0.2,
            bbox: Box2::new(0.0, 0.0, 10.0, 10.0),
            dims,
            location: loc,
            ry: 0.7,
            score: None,
        }
    }

    fn sweep(frame: &FrameAnnotation, scales: &[f64]) -> (String, SweepSummary) {
        let mut w = csv_writer(Vec::new());
        write_csv_header(&mut w).unwrap();
        let summary = ambiguity_sweep(frame, scales, 4.0, &mut w).unwrap();
        (String::from_utf8(w.into_inner().unwrap()).unwrap(), summary)
    }

    #[test]
    fn identity_family() {
        let l = label(Point3::new(2.0, 1.0, 20.0), Dims::new(1.5, 1.6, 3.9));
        let r = ambiguous_family(&cam(), &l, &[1.0]).unwrap();
        assert_eq!(r.members, vec![l]);
        assert_eq!(r.max_projection_deviation, 0.0);
    }

    #[test]
    fn scaled_family_member() {
        let l = label(Point3::new(2.0, 1.0, 20.0), Dims::new(1.5, 1.6, 3.9));
        let r = ambiguous_family(&cam(), &l, &[1.1]).unwrap();
        let m = &r.members[0];
        let want = [2.2, 1.1, 22.0, 1.65, 1.76, 4.29];
        let got = [
            m.location.x,
            m.location.y,
            m.location.z,
            m.dims.h,
            m.dims.w,
            m.dims.l,
        ];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{got:?}");
        }
        assert_eq!(m.ry, l.ry);
        assert!(r.max_projection_deviation <= 1e-6);
    }

    #[test]
    fn keeping_dims_breaks_the_projection() {
        let l = label(Point3::new(2.0, 1.0, 20.0), Dims::new(1.5, 1.6, 3.9));
        let rigid = location_only_member(&l, 1.1);
        assert!(deviation(&cam(), &l, &rigid).unwrap() > 1.0);
    }

    #[test]
    fn amplification_examples() {
        let r = error_amplification(100.0, 1.02, 1.53);
        assert_eq!(r.depth_error, 2.0);
        assert!((r.dim_error - 0.0306).abs() < 1e-12);
        let one = error_amplification(42.0, 1.0, 1.53);
        assert_eq!((one.dim_error, one.depth_error), (0.0, 0.0));
        let neg = error_amplification(50.0, 0.98, 1.53);
        assert_eq!(neg.depth_error, -1.0);
        assert!((neg.dim_error + 0.0306).abs() < 1e-12);
    }

    #[test]
    fn amplification_table_layout() {
        let t = amplification_table();
        assert_eq!(t.len(), 30);
        let last_row = t
            .iter()
            .find(|r| r.depth == 100.0 && r.scale == 1.02)
            .unwrap();
        assert_eq!(last_row.depth_error, 2.0);
    }

    #[test]
    fn summary_merge() {
        let a = SweepSummary {
            rows: 2,
            skipped: 0,
            mean_deviation: 1.0,
            max_deviation: 1.5,
        };
        let b = SweepSummary {
            rows: 1,
            skipped: 1,
            mean_deviation: 4.0,
            max_deviation: 4.0,
        };
        let m = a.merge(&b);
        assert_eq!(
            m,
            SweepSummary {
                rows: 3,
                skipped: 1,
                mean_deviation: 2.0,
                max_deviation: 4.0
            }
        );
        assert_eq!(
            SweepSummary::default()
                .merge(&SweepSummary::default())
                .mean_deviation,
            0.0
        );
    }

    #[test]
    fn empty_frame_writes_header_only() {
        let frame = FrameAnnotation {
            frame_id: "000001".into(),
            labels: vec![],
            calib: cam(),
            image_size: None,
        };
        let (csv, summary) = sweep(&frame, &[0.96, 1.04]);
        assert_eq!(csv, format!("{}\n", CSV_HEADER.join(",")));
        assert_eq!(summary.rows, 0);
    }

    #[test]
    fn single_label_unit_scale() {
        let l = label(Point3::new(2.0, 1.0, 20.0), Dims::new(1.5, 1.6, 3.9));
        let frame = FrameAnnotation {
            frame_id: "000002".into(),
            labels: vec![l],
            calib: cam(),
            image_size: None,
        };
        let (csv, summary) = sweep(&frame, &[1.0]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[0], "000002");
        assert_eq!(fields[4], "1");
        assert_eq!(fields[5].parse::<f64>().unwrap(), 0.0);
        assert_eq!(fields[6], "1.000000");
        assert_eq!(fields[7], "1.000000");
        assert_eq!(summary.max_deviation, 0.0);
    }

    #[test]
    fn unprojectable_labels_are_skipped() {
        let behind = label(Point3::new(0.0, 1.0, -3.0), Dims::new(1.5, 1.6, 3.9));
        let fine = label(Point3::new(1.0, 1.0, 30.0), Dims::new(1.5, 1.6, 3.9));
        let frame = FrameAnnotation {
            frame_id: "x".into(),
            labels: vec![behind, fine],
            calib: cam(),
            image_size: None,
        };
        let (_, summary) = sweep(&frame, &[0.96, 1.04]);
        assert_eq!(summary.rows, 2);
        assert_eq!(summary.skipped, 1);
    }
}
