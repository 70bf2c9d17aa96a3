//! Camera calibration files in the KITTI text layout.
//!
//! Each line holds one named matrix: `NAME: v0 v1 ... vN`. Projection
//! matrices (`P0`..`P3` and any name we do not know about) carry 12 reals in
//! row-major 3x4 order and are turned into [`CameraIntrinsics`]. Rectification
//! and rigid-transform entries (`R0_rect`, `R_rect`, `Tr_*`) are kept verbatim
//! as raw value lists since they are not projection matrices.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Name of the left color camera used for monocular detection.
pub const REFERENCE_CAMERA: &str = "P2";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("calibration has no `{0}` entry")]
    MissingCamera(String),
    #[error("entry `{name}` has non-positive focal length (fx={fx}, fy={fy})")]
    InvalidIntrinsics { name: String, fx: f64, fy: f64 },
}

/// Rectified pinhole parameters of one camera.
///
/// The full 3x4 projection matrix is retained, including its fourth column,
/// but projection in [`crate::geometry`] only uses `fx`, `fy`, `cx`, `cy` and
/// a unit homogeneous scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    p: [[f64; 4]; 3],
}

impl CameraIntrinsics {
    /// Homogeneous scale factor of the projection; always one.
    pub const SCALE: f64 = 1.0;

    /// Zero-translation camera `[[fx,0,cx,0],[0,fy,cy,0],[0,0,1,0]]`.
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, CalibError> {
        Self::from_projection([[fx, 0.0, cx, 0.0], [0.0, fy, cy, 0.0], [0.0, 0.0, 1.0, 0.0]])
    }

    pub fn from_projection(p: [[f64; 4]; 3]) -> Result<Self, CalibError> {
        Self::from_named_projection("", p)
    }

    fn from_named_projection(name: &str, p: [[f64; 4]; 3]) -> Result<Self, CalibError> {
        let (fx, fy) = (p[0][0], p[1][1]);
        // written as negated comparisons so NaN is rejected as well
        if !(fx > 0.0) || !(fy > 0.0) {
            return Err(CalibError::InvalidIntrinsics {
                name: name.to_owned(),
                fx,
                fy,
            });
        }
        Ok(Self {
            fx,
            fy,
            cx: p[0][2],
            cy: p[1][2],
            p,
        })
    }

    /// Row-major 3x4 projection matrix as read from the file.
    pub fn projection(&self) -> &[[f64; 4]; 3] {
        &self.p
    }
}

/// Parsed contents of one calibration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Calibration {
    pub cameras: BTreeMap<String, CameraIntrinsics>,
    /// Non-projection entries (`R0_rect`, `Tr_velo_to_cam`, ...), values as read.
    pub extras: BTreeMap<String, Vec<f64>>,
}

impl Calibration {
    pub fn camera(&self, name: &str) -> Option<&CameraIntrinsics> {
        self.cameras.get(name)
    }

    /// The `P2` camera, which always exists in a parsed calibration.
    pub fn reference(&self) -> &CameraIntrinsics {
        &self.cameras[REFERENCE_CAMERA]
    }
}

fn is_auxiliary(name: &str) -> bool {
    name == "R0_rect" || name == "R_rect" || name.starts_with("Tr_")
}

/// Parses a calibration file. Requires a `P2` entry.
pub fn parse_calibration(text: &str) -> Result<Calibration, CalibError> {
    let mut calib = Calibration::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (name, rest) = line.split_once(':').ok_or_else(|| CalibError::Parse {
            line: line_no,
            reason: "expected `NAME: values`".into(),
        })?;
        let name = name.trim();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(CalibError::Parse {
                line: line_no,
                reason: format!("invalid entry name `{name}`"),
            });
        }
        let values = rest
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| CalibError::Parse {
                    line: line_no,
                    reason: format!("non-numeric token `{tok}`"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;

        if is_auxiliary(name) {
            if values.is_empty() {
                return Err(CalibError::Parse {
                    line: line_no,
                    reason: format!("entry `{name}` has no values"),
                });
            }
            calib.extras.insert(name.to_owned(), values);
            continue;
        }

        if values.len() != 12 {
            return Err(CalibError::Parse {
                line: line_no,
                reason: format!("expected 12 values, found {}", values.len()),
            });
        }
        let mut p = [[0.0; 4]; 3];
        for (i, v) in values.into_iter().enumerate() {
            p[i / 4][i % 4] = v;
        }
        let cam = CameraIntrinsics::from_named_projection(name, p)?;
        calib.cameras.insert(name.to_owned(), cam);
    }

    if !calib.cameras.contains_key(REFERENCE_CAMERA) {
        return Err(CalibError::MissingCamera(REFERENCE_CAMERA.into()));
    }
    Ok(calib)
}

/// Formats a real with 6 significant digits in C-style scientific notation,
/// e.g. `7.21538e+02`.
pub fn format_sci(v: f64) -> String {
    let s = format!("{v:.5e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mantissa}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

/// Serializes a calibration back to the line format. Entries come out in
/// name order; projection matrices first, then auxiliary entries.
pub fn write_calibration(calib: &Calibration) -> String {
    let mut out = String::new();
    for (name, cam) in &calib.cameras {
        out.push_str(name);
        out.push(':');
        for row in cam.projection() {
            for v in row {
                let _ = write!(out, " {}", format_sci(*v));
            }
        }
        out.push('\n');
    }
    for (name, values) in &calib.extras {
        out.push_str(name);
        out.push(':');
        for v in values {
            let _ = write!(out, " {}", format_sci(*v));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_identity_style_p2() {
        let calib = parse_calibration("P2: 100 0 50 0 0 100 50 0 0 0 1 0").unwrap();
        let cam = calib.reference();
        assert_eq!((cam.fx, cam.fy, cam.cx, cam.cy), (100.0, 100.0, 50.0, 50.0));
        assert_eq!(cam.projection()[2][2], 1.0);
        assert_eq!(CameraIntrinsics::SCALE, 1.0);
    }

    #[test]
    fn short_line_is_a_parse_error_on_its_line() {
        let err = parse_calibration("P2: 100 0 50 0 0 100 50").unwrap_err();
        assert!(matches!(err, CalibError::Parse { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn two_entries_are_both_kept() {
        let text = "P0: 200 0 60 0 0 210 70 0 0 0 1 0\nP2: 100 0 50 0 0 100 50 0 0 0 1 0";
        let calib = parse_calibration(text).unwrap();
        assert_eq!(calib.cameras.len(), 2);
        assert_eq!(calib.cameras["P0"].fy, 210.0);
        assert_eq!(calib.cameras["P0"].cy, 70.0);
    }

    #[test]
    fn non_numeric_token_reports_line() {
        let text = "P0: 1 0 0 0 0 1 0 0 0 0 1 0\nP2: 100 0 50 0 0 abc 50 0 0 0 1 0";
        let err = parse_calibration(text).unwrap_err();
        assert!(matches!(err, CalibError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn missing_p2() {
        let err = parse_calibration("P0: 100 0 50 0 0 100 50 0 0 0 1 0").unwrap_err();
        assert_eq!(err, CalibError::MissingCamera("P2".into()));
    }

    #[test]
    fn rejects_non_positive_focal() {
        let err = parse_calibration("P2: 0 0 50 0 0 100 50 0 0 0 1 0").unwrap_err();
        assert!(matches!(err, CalibError::InvalidIntrinsics { .. }));
        let err = parse_calibration("P2: 100 0 50 0 0 -1 50 0 0 0 1 0").unwrap_err();
        assert!(matches!(err, CalibError::InvalidIntrinsics { .. }));
    }

    #[test]
    fn real_kitti_file() {
        let text = "\
P0: 7.215377000000e+02 0.000000000000e+00 6.095593000000e+02 0.000000000000e+00 0.000000000000e+00 7.215377000000e+02 1.728540000000e+02 0.000000000000e+00 0.000000000000e+00 0.000000000000e+00 1.000000000000e+00 0.000000000000e+00
P1: 7.215377000000e+02 0.000000000000e+00 6.095593000000e+02 -3.875744000000e+02 0.000000000000e+00 7.215377000000e+02 1.728540000000e+02 0.000000000000e+00 0.000000000000e+00 0.000000000000e+00 1.000000000000e+00 0.000000000000e+00
P2: 7.215377000000e+02 0.000000000000e+00 6.095593000000e+02 4.485728000000e+01 0.000000000000e+00 7.215377000000e+02 1.728540000000e+02 2.163791000000e-01 0.000000000000e+00 0.000000000000e+00 1.000000000000e+00 2.745884000000e-03
P3: 7.215377000000e+02 0.000000000000e+00 6.095593000000e+02 -3.395242000000e+02 0.000000000000e+00 7.215377000000e+02 1.728540000000e+02 2.199936000000e+00 0.000000000000e+00 0.000000000000e+00 1.000000000000e+00 2.729905000000e-03
R0_rect: 9.999239000000e-01 9.837760000000e-03 -7.445048000000e-03 -9.869795000000e-03 9.999421000000e-01 -4.278459000000e-03 7.402527000000e-03 4.351614000000e-03 9.999631000000e-01
Tr_velo_to_cam: 7.533745000000e-03 -9.999714000000e-01 -6.166020000000e-04 -4.069766000000e-03 1.480249000000e-02 7.280733000000e-04 -9.998902000000e-01 -7.631618000000e-02 9.998621000000e-01 7.523790000000e-03 1.480755000000e-02 -2.717806000000e-01
Tr_imu_to_velo: 9.999976000000e-01 7.553071000000e-04 -2.035826000000e-03 -8.086759000000e-01 -7.854027000000e-04 9.998898000000e-01 -1.482298000000e-02 3.195559000000e-01 2.024406000000e-03 1.482454000000e-02 9.998881000000e-01 -7.997231000000e-01
";
        let calib = parse_calibration(text).unwrap();
        assert_eq!(calib.cameras.len(), 4);
        assert_eq!(calib.extras["R0_rect"].len(), 9);
        let p2 = calib.reference();
        assert_eq!(p2.fx, 721.5377);
        assert_eq!(p2.cx, 609.5593);
        assert_eq!(p2.projection()[0][3], 44.85728);
    }

    #[test]
    fn custom_names_are_stored_verbatim() {
        let text = "P2: 100 0 50 0 0 100 50 0 0 0 1 0\nCAM_left_wide: 90 0 40 0 0 95 45 0 0 0 1 0";
        let calib = parse_calibration(text).unwrap();
        assert_eq!(calib.cameras["CAM_left_wide"].fy, 95.0);
    }

    #[test]
    fn sci_formatting() {
        assert_eq!(format_sci(721.5377), "7.21538e+02");
        assert_eq!(format_sci(0.0), "0.00000e+00");
        assert_eq!(format_sci(-0.002745884), "-2.74588e-03");
        assert_eq!(format_sci(1e100), "1.00000e+100");
    }

    #[test]
    fn writer_output_reparses() {
        let text = "P2: 100 0 50 0 0 100 50 0 0 0 1 0\nR0_rect: 1 0 0 0 1 0 0 0 1";
        let calib = parse_calibration(text).unwrap();
        let written = write_calibration(&calib);
        assert!(written.starts_with("P2: 1.00000e+02 0.00000e+00 5.00000e+01"));
        assert_eq!(parse_calibration(&written).unwrap(), calib);
    }
}
