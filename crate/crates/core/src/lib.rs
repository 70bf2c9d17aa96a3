//! Geometry and dataset tooling for frustum-shifted pseudo labels in
//! monocular 3D object detection.
//!
//! * [`calib`] and [`labelio`] read and write KITTI calibration and label files.
//! * [`geometry`] holds the pinhole model, box corners and the IoU family.
//! * [`obmo`] generates and scores pseudo labels along the viewing frustum.
//! * [`analysis`] quantifies the depth ambiguity that motivates them.
//! * [`evalkit`] computes AP at 40 recall positions for BEV and 3D boxes.

pub mod analysis;
pub mod calib;
pub mod evalkit;
pub mod geometry;
pub mod labelio;
pub mod obmo;

pub use calib::{parse_calibration, CameraIntrinsics};
pub use geometry::{Box2, Box3, BoxBev, Dims, ImageSize, Pixel, Point3};
pub use labelio::{FrameAnnotation, ObjectLabel, PseudoLabel, ScoreStrategy};
pub use obmo::{generate_pseudo_labels, ObmoConfig};
