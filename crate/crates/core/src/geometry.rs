//! Pinhole projection, viewing-ray ratios, 3D box corners and the IoU family
//! (axis-aligned 2D, rotated bird's-eye-view, yaw-only 3D).
//!
//! Coordinates follow the rectified KITTI camera frame: x right, y down,
//! z forward (depth along the optical axis).

use thiserror::Error;

use crate::calib::CameraIntrinsics;

/// Points closer than this to a clip line count as lying on it (meters).
pub const COLLINEAR_EPS: f64 = 1e-9;
/// Intersections with a smaller area are treated as empty (square meters).
pub const SLIVER_AREA: f64 = 1e-12;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum GeometryError {
    #[error("point at depth {depth} is not in front of the camera")]
    BehindCamera { depth: f64 },
}

/// A point in camera coordinates; `z` is the depth along the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn scaled(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

/// Axis-aligned image box in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Box2 {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

impl Box2 {
    pub const fn new(left: f64, top: f64, right: f64, bottom: f64) -> Self {
        Self {
            left,
            top,
            right,
            bottom,
        }
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn height(&self) -> f64 {
        self.bottom - self.top
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn clipped(&self, size: ImageSize) -> Self {
        let (w, h) = (f64::from(size.width), f64::from(size.height));
        Self {
            left: self.left.clamp(0.0, w),
            top: self.top.clamp(0.0, h),
            right: self.right.clamp(0.0, w),
            bottom: self.bottom.clamp(0.0, h),
        }
    }

    /// Largest absolute difference over the four edges.
    pub fn chebyshev(&self, other: &Self) -> f64 {
        (self.left - other.left)
            .abs()
            .max((self.top - other.top).abs())
            .max((self.right - other.right).abs())
            .max((self.bottom - other.bottom).abs())
    }
}

/// Object extent: height along -y, width lateral, length along the heading.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dims {
    pub h: f64,
    pub w: f64,
    pub l: f64,
}

impl Dims {
    pub const fn new(h: f64, w: f64, l: f64) -> Self {
        Self { h, w, l }
    }

    pub fn volume(&self) -> f64 {
        self.h * self.w * self.l
    }
}

/// Rotated rectangle on the x-z ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxBev {
    pub x: f64,
    pub z: f64,
    pub w: f64,
    pub l: f64,
    pub yaw: f64,
}

impl BoxBev {
    /// Footprint corners as `(x, z)` in counterclockwise order.
    pub fn corners(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.yaw.sin_cos();
        let (hl, hw) = (self.l / 2.0, self.w / 2.0);
        let mut pts = [[hl, hw], [hl, -hw], [-hl, -hw], [-hl, hw]]
            .map(|[lx, lz]| [self.x + c * lx + s * lz, self.z - s * lx + c * lz]);
        if signed_area(&pts) < 0.0 {
            pts.reverse();
        }
        pts
    }

    pub fn area(&self) -> f64 {
        self.w * self.l
    }
}

/// 3D box given by its bottom-face center, dimensions and yaw about the y axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3 {
    pub location: Point3,
    pub dims: Dims,
    pub ry: f64,
}

impl Box3 {
    pub fn bev(&self) -> BoxBev {
        BoxBev {
            x: self.location.x,
            z: self.location.z,
            w: self.dims.w,
            l: self.dims.l,
            yaw: self.ry,
        }
    }

    /// Same yaw, location and dimensions multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            location: self.location.scaled(s),
            dims: Dims::new(self.dims.h * s, self.dims.w * s, self.dims.l * s),
            ry: self.ry,
        }
    }

    /// Vertical extent `[y - h, y]` (y points down).
    fn y_range(&self) -> (f64, f64) {
        (self.location.y - self.dims.h, self.location.y)
    }
}

/// Projects a camera-frame point with unit homogeneous scale.
pub fn project_point(k: &CameraIntrinsics, p: Point3) -> Result<Pixel, GeometryError> {
    if !(p.z > 0.0) {
        return Err(GeometryError::BehindCamera { depth: p.z });
    }
    Ok(Pixel {
        u: k.fx * p.x / p.z + k.cx,
        v: k.fy * p.y / p.z + k.cy,
    })
}

/// X-Z and Y-Z ratios of the viewing ray through `px`.
pub fn ray_ratios(k: &CameraIntrinsics, px: Pixel) -> (f64, f64) {
    ((px.u - k.cx) / k.fx, (px.v - k.cy) / k.fy)
}

/// Eight corners of `b`.
///
/// Order: the bottom face starting at local `(+L/2, +W/2)` and going
/// `(+L/2,-W/2)`, `(-L/2,-W/2)`, `(-L/2,+W/2)`, then the top face in the same
/// order. Local x is the heading, local z lateral; yaw rotates about +y with
/// `x' = cos·x + sin·z`, `z' = -sin·x + cos·z`.
pub fn box_corners(b: &Box3) -> [Point3; 8] {
    let (s, c) = b.ry.sin_cos();
    let Dims { h, w, l } = b.dims;
    let footprint = [
        [l / 2.0, w / 2.0],
        [l / 2.0, -w / 2.0],
        [-l / 2.0, -w / 2.0],
        [-l / 2.0, w / 2.0],
    ];
    let mut out = [Point3::default(); 8];
    for (i, corner) in out.iter_mut().enumerate() {
        let [lx, lz] = footprint[i % 4];
        let ly = if i < 4 { 0.0 } else { -h };
        *corner = Point3::new(
            b.location.x + c * lx + s * lz,
            b.location.y + ly,
            b.location.z - s * lx + c * lz,
        );
    }
    out
}

/// Axis-aligned hull of the projected corners, optionally clipped to the image.
pub fn project_box_aabb(
    k: &CameraIntrinsics,
    b: &Box3,
    image_size: Option<ImageSize>,
) -> Result<Box2, GeometryError> {
    let mut hull = Box2::new(
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for corner in box_corners(b) {
        let px = project_point(k, corner)?;
        hull.left = hull.left.min(px.u);
        hull.right = hull.right.max(px.u);
        hull.top = hull.top.min(px.v);
        hull.bottom = hull.bottom.max(px.v);
    }
    Ok(match image_size {
        Some(size) => hull.clipped(size),
        None => hull,
    })
}

pub fn aabb_iou(a: &Box2, b: &Box2) -> f64 {
    let iw = (a.right.min(b.right) - a.left.max(b.left)).max(0.0);
    let ih = (a.bottom.min(b.bottom) - a.top.max(b.top)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    // shoelace about the first vertex keeps the terms small
    let [ox, oz] = poly[0];
    let mut acc = 0.0;
    for i in 1..n - 1 {
        let [ax, az] = poly[i];
        let [bx, bz] = poly[i + 1];
        acc += (ax - ox) * (bz - oz) - (bx - ox) * (az - oz);
    }
    acc / 2.0
}

/// Sutherland-Hodgman clip of a convex `subject` by a convex counterclockwise
/// `clip` polygon.
pub fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut output = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let (ex, ez) = (b[0] - a[0], b[1] - a[1]);
        let len = ex.hypot(ez);
        if len == 0.0 {
            continue;
        }
        // signed distance to the left of a->b; positive is inside
        let dist = |p: [f64; 2]| (ex * (p[1] - a[1]) - ez * (p[0] - a[0])) / len;

        let input = std::mem::take(&mut output);
        let mut prev = input[input.len() - 1];
        let mut prev_d = dist(prev);
        for &cur in &input {
            let cur_d = dist(cur);
            let cur_in = cur_d >= -COLLINEAR_EPS;
            let prev_in = prev_d >= -COLLINEAR_EPS;
            if cur_in != prev_in {
                let t = prev_d / (prev_d - cur_d);
                let mut p = [
                    prev[0] + t * (cur[0] - prev[0]),
                    prev[1] + t * (cur[1] - prev[1]),
                ];
                // the crossing lies on the clip line; pin axis-aligned lines exactly
                if ex == 0.0 {
                    p[0] = a[0];
                }
                if ez == 0.0 {
                    p[1] = a[1];
                }
                output.push(p);
            }
            if cur_in {
                output.push(cur);
            }
            prev = cur;
            prev_d = cur_d;
        }
    }
    output
}

/// Area of the intersection of two rotated ground-plane rectangles.
pub fn bev_intersection_area(a: &BoxBev, b: &BoxBev) -> f64 {
    let poly = clip_convex(&a.corners(), &b.corners());
    let area = signed_area(&poly).abs();
    if area < SLIVER_AREA {
        0.0
    } else {
        area
    }
}

// Pairs are evaluated in a canonical order so IoU is bitwise symmetric.
fn out_of_order(a: &BoxBev, b: &BoxBev) -> bool {
    let key = |r: &BoxBev| [r.x, r.z, r.w, r.l, r.yaw];
    key(a)
        .iter()
        .zip(&key(b))
        .map(|(p, q)| p.total_cmp(q))
        .find(|o| o.is_ne())
        .is_some_and(|o| o.is_gt())
}

/// IoU of two rotated rectangles in the bird's-eye view.
pub fn bev_iou(a: &BoxBev, b: &BoxBev) -> f64 {
    let (a, b) = if out_of_order(a, b) { (b, a) } else { (a, b) };
    let inter = bev_intersection_area(a, b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// IoU of two yaw-only 3D boxes: BEV overlap times vertical overlap.
pub fn iou_3d(a: &Box3, b: &Box3) -> f64 {
    let (a, b) = if out_of_order(&a.bev(), &b.bev()) {
        (b, a)
    } else {
        (a, b)
    };
    let (a_top, a_bottom) = a.y_range();
    let (b_top, b_bottom) = b.y_range();
    let overlap_h = (a_bottom.min(b_bottom) - a_top.max(b_top)).max(0.0);
    if overlap_h == 0.0 {
        return 0.0;
    }
    let inter = bev_intersection_area(&a.bev(), &b.bev()) * overlap_h;
    let union = a.dims.volume() + b.dims.volume() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}
