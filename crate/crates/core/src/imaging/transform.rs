//! Landmark-driven geometric normalizations: a two-point similarity solve,
//! a three-point affine solve, and inverse-mapping warps into fixed target
//! frames.

use super::{GrayImage, LandmarkSet, Point};
use crate::{par, DcpError, Result};

/// Transform family of a [`GeometricNormalization`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizationKind {
    Similarity,
    Affine,
}

/// A solved source-to-target plane transform plus the raster it renders
/// into.
///
/// `matrix` is row-major 2×3: the source point `(x, y)` maps to
/// `(m0·x + m1·y + m2, m3·x + m4·y + m5)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricNormalization {
    pub kind: NormalizationKind,
    pub matrix: [f64; 6],
    /// Output raster size as (rows, cols).
    pub output_size: (usize, usize),
    /// Target coordinates the transform was solved against.
    pub anchor_targets: Vec<Point>,
}

impl GeometricNormalization {
    /// Map a source-frame point into the target frame.
    pub fn apply(&self, p: Point) -> Point {
        let m = &self.matrix;
        Point::new(m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5])
    }

    /// Map a whole landmark set into the target frame.
    pub fn apply_landmarks(&self, lm: &LandmarkSet) -> LandmarkSet {
        lm.map(|p| self.apply(p)).expect("finite affine image of finite points")
    }

    /// Determinant of the 2×2 linear part.
    pub fn linear_det(&self) -> f64 {
        let m = &self.matrix;
        m[0] * m[4] - m[1] * m[3]
    }

    /// Inverse 2×3 matrix (target frame back to source frame).
    pub fn inverse_matrix(&self) -> Result<[f64; 6]> {
        let det = self.linear_det();
        if det.abs() <= 1e-9 {
            return Err(DcpError::DegenerateLandmarks(format!(
                "normalization is not invertible (linear determinant {det:e})"
            )));
        }
        let m = &self.matrix;
        let ia = m[4] / det;
        let ib = -m[1] / det;
        let ic = -m[3] / det;
        let id = m[0] / det;
        Ok([
            ia,
            ib,
            -(ia * m[2] + ib * m[5]),
            ic,
            id,
            -(ic * m[2] + id * m[5]),
        ])
    }
}

/// Solve the rotation + uniform-scale + translation transform taking the two
/// eye centers to `targets`, rendered on a `(rows, cols)` canvas.
pub fn solve_similarity(
    eye_left: Point,
    eye_right: Point,
    targets: (Point, Point),
    output_size: (usize, usize),
) -> Result<GeometricNormalization> {
    let span = eye_left.dist(eye_right);
    if span < 1e-9 {
        return Err(DcpError::DegenerateLandmarks(format!(
            "eye centers coincide (separation {span:e})"
        )));
    }
    if targets.0.dist(targets.1) < 1e-9 {
        return Err(DcpError::DegenerateLandmarks(
            "target eye coordinates coincide".into(),
        ));
    }

    // Two-point similarity solve over complex numbers: with points as
    // z = x + iy, the transform is w = a·z + b, so
    // a = (t2 - t1) / (p2 - p1) and b = t1 - a·p1.
    let (px, py) = (eye_right.x - eye_left.x, eye_right.y - eye_left.y);
    let (tx, ty) = (targets.1.x - targets.0.x, targets.1.y - targets.0.y);
    let denom = px * px + py * py;
    let ar = (tx * px + ty * py) / denom;
    let ai = (ty * px - tx * py) / denom;
    let br = targets.0.x - (ar * eye_left.x - ai * eye_left.y);
    let bi = targets.0.y - (ai * eye_left.x + ar * eye_left.y);

    Ok(GeometricNormalization {
        kind: NormalizationKind::Similarity,
        matrix: [ar, -ai, br, ai, ar, bi],
        output_size,
        anchor_targets: vec![targets.0, targets.1],
    })
}

/// Solve the unique affine transform taking the three facial anchors to
/// `targets`, rendered on a `(rows, cols)` canvas.
pub fn solve_affine(
    eye_left: Point,
    eye_right: Point,
    mouth: Point,
    targets: (Point, Point, Point),
    output_size: (usize, usize),
) -> Result<GeometricNormalization> {
    // The source triangle's doubled signed area; zero means collinear.
    let det = (eye_right.x - eye_left.x) * (mouth.y - eye_left.y)
        - (mouth.x - eye_left.x) * (eye_right.y - eye_left.y);
    if det.abs() < 1e-9 {
        return Err(DcpError::DegenerateLandmarks(format!(
            "anchor points are collinear (area determinant {det:e})"
        )));
    }

    // Cramer solve of [x y 1]·row = t for each output coordinate.
    let solve_row = |t1: f64, t2: f64, t3: f64| -> [f64; 3] {
        let (x1, y1) = (eye_left.x, eye_left.y);
        let (x2, y2) = (eye_right.x, eye_right.y);
        let (x3, y3) = (mouth.x, mouth.y);
        let d = x1 * (y2 - y3) - y1 * (x2 - x3) + (x2 * y3 - x3 * y2);
        let da = t1 * (y2 - y3) - y1 * (t2 - t3) + (t2 * y3 - t3 * y2);
        let db = x1 * (t2 - t3) - t1 * (x2 - x3) + (x2 * t3 - x3 * t2);
        let dc = x1 * (y2 * t3 - y3 * t2) - y1 * (x2 * t3 - x3 * t2) + t1 * (x2 * y3 - x3 * y2);
        [da / d, db / d, dc / d]
    };

    let rx = solve_row(targets.0.x, targets.1.x, targets.2.x);
    let ry = solve_row(targets.0.y, targets.1.y, targets.2.y);
    let norm = GeometricNormalization {
        kind: NormalizationKind::Affine,
        matrix: [rx[0], rx[1], rx[2], ry[0], ry[1], ry[2]],
        output_size,
        anchor_targets: vec![targets.0, targets.1, targets.2],
    };
    if norm.linear_det().abs() <= 1e-9 {
        return Err(DcpError::DegenerateLandmarks(
            "target anchors produce a singular transform".into(),
        ));
    }
    Ok(norm)
}

/// Render the source image into the transform's target frame by inverse
/// mapping with bilinear interpolation and replicate padding.
pub fn warp(img: &GrayImage, t: &GeometricNormalization) -> Result<GrayImage> {
    let inv = t.inverse_matrix()?;
    let (rows, cols) = t.output_size;
    if rows == 0 || cols == 0 {
        return Err(DcpError::Config("warp output size must be nonzero".into()));
    }
    let mut data = vec![0.0f64; rows * cols];
    par::for_each_row(&mut data, cols, |y, row| {
        let yf = y as f64;
        for (x, out) in row.iter_mut().enumerate() {
            let xf = x as f64;
            let sx = inv[0] * xf + inv[1] * yf + inv[2];
            let sy = inv[3] * xf + inv[4] * yf + inv[5];
            *out = img.sample_bilinear(sx, sy);
        }
    });
    GrayImage::from_raw(cols, rows, data)
}

/// A named target frame: canvas size plus anchor coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePreset {
    pub name: &'static str,
    /// Canvas columns.
    pub width: usize,
    /// Canvas rows.
    pub height: usize,
    pub eye_left: Point,
    pub eye_right: Point,
    /// Mouth anchor, when the frame supports the three-point solve.
    pub mouth: Option<Point>,
}

/// 128×128 frame used for descriptor benchmarks; eyes on row 34 at
/// columns 31 and 98.
pub const DESCRIPTOR_128: FramePreset = FramePreset {
    name: "descriptor128",
    width: 128,
    height: 128,
    eye_left: Point::new(31.0, 34.0),
    eye_right: Point::new(98.0, 34.0),
    mouth: None,
};

/// 180×162 frame used for the multi-level face representation; eyes on
/// row 66 at columns 59 and 103, mouth center at (81, 116).
pub const MDML_180: FramePreset = FramePreset {
    name: "mdml180",
    width: 162,
    height: 180,
    eye_left: Point::new(59.0, 66.0),
    eye_right: Point::new(103.0, 66.0),
    mouth: Some(Point::new(81.0, 116.0)),
};

impl FramePreset {
    pub fn by_name(name: &str) -> Result<&'static FramePreset> {
        match name {
            "descriptor128" => Ok(&DESCRIPTOR_128),
            "mdml180" => Ok(&MDML_180),
            _ => Err(DcpError::Config(format!(
                "unknown frame preset `{name}` (expected descriptor128 or mdml180)"
            ))),
        }
    }

    /// Output size as (rows, cols).
    pub fn output_size(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Two-point solve into this frame.
    pub fn similarity_from(&self, eye_left: Point, eye_right: Point) -> Result<GeometricNormalization> {
        solve_similarity(eye_left, eye_right, (self.eye_left, self.eye_right), self.output_size())
    }

    /// Three-point solve into this frame; the frame must define a mouth
    /// anchor.
    pub fn affine_from(
        &self,
        eye_left: Point,
        eye_right: Point,
        mouth: Point,
    ) -> Result<GeometricNormalization> {
        let target_mouth = self.mouth.ok_or_else(|| {
            DcpError::Config(format!("frame preset `{}` has no mouth anchor", self.name))
        })?;
        solve_affine(
            eye_left,
            eye_right,
            mouth,
            (self.eye_left, self.eye_right, target_mouth),
            self.output_size(),
        )
    }
}
