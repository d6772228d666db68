//! Grayscale image container, binary PGM I/O, subpixel sampling, and
//! landmark ingestion.
//!
//! Pixel coordinates are `(x, y)` with `x` indexing columns and `y`
//! indexing rows; intensities are `f64` in `[0, 255]` after loading an
//! 8-bit file. All out-of-range access replicates the nearest border
//! pixel.

mod transform;

pub use transform::{
    solve_affine, solve_similarity, warp, FramePreset, GeometricNormalization, NormalizationKind,
    DESCRIPTOR_128, MDML_180,
};

use crate::{DcpError, Result};
use std::fmt;
use std::path::Path;

/// A 2-D point in image coordinates (`x` = column, `y` = row).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Row-major grayscale raster with `f64` intensities.
#[derive(Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GrayImage({}x{})", self.width, self.height)
    }
}

impl GrayImage {
    /// Wrap a row-major buffer. Dimensions must be nonzero, the buffer
    /// length must be `width * height`, and every value must be finite.
    pub fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(DcpError::Input(format!(
                "image dimensions must be nonzero, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(DcpError::Dimension(format!(
                "buffer length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(DcpError::Input(format!("non-finite pixel value {v}")));
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    /// Build from 8-bit samples.
    pub fn from_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::from_raw(width, height, bytes.iter().map(|&b| b as f64).collect())
    }

    /// Constant-valued image.
    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::from_raw(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Pixel value at integer coordinates, clamped to the raster
    /// (replicate padding).
    #[inline]
    pub fn pixel_clamped(&self, x: i64, y: i64) -> f64 {
        let xc = x.clamp(0, self.width as i64 - 1) as usize;
        let yc = y.clamp(0, self.height as i64 - 1) as usize;
        self.data[yc * self.width + xc]
    }

    /// Pixel value at in-range integer coordinates.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    /// Bilinear interpolation of the four enclosing pixels with
    /// replicate padding outside the raster.
    ///
    /// Evaluated as two horizontal lerps followed by a vertical lerp
    /// (`a + f·(b − a)`); this form reproduces a constant patch exactly,
    /// which downstream sign-based encoders rely on.
    #[inline]
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let x0 = x0 as i64;
        let y0 = y0 as i64;
        let p00 = self.pixel_clamped(x0, y0);
        let p10 = self.pixel_clamped(x0 + 1, y0);
        let p01 = self.pixel_clamped(x0, y0 + 1);
        let p11 = self.pixel_clamped(x0 + 1, y0 + 1);
        let top = p00 + fx * (p10 - p00);
        let bottom = p01 + fx * (p11 - p01);
        top + fy * (bottom - top)
    }

    /// Value of the pixel nearest to `(x, y)`, replicate-padded.
    #[inline]
    pub fn sample_nearest(&self, x: f64, y: f64) -> f64 {
        self.pixel_clamped(x.round() as i64, y.round() as i64)
    }

    /// Apply `f` to every pixel value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_raw(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Horizontal mirror (columns reversed). An exact involution.
    pub fn flip_horizontal(&self) -> GrayImage {
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.data.chunks(self.width) {
            data.extend(row.iter().rev());
        }
        GrayImage {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Quantize to 8-bit samples by rounding and clamping to `[0, 255]`.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

const PGM_MAGIC: &[u8] = b"P5";

/// Parse a binary (P5) PGM with maxval 255.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;

    fn skip_token_gaps(bytes: &[u8], pos: &mut usize) -> Result<()> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            } else {
                return Ok(());
            }
        }
    }

    fn read_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
        skip_token_gaps(bytes, pos)?;
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
        if *pos == start {
            return Err(DcpError::Format(format!("missing PGM {what}")));
        }
        let text = std::str::from_utf8(&bytes[start..*pos]).expect("ascii digits");
        text.parse::<usize>()
            .map_err(|_| DcpError::Format(format!("invalid PGM {what}: {text}")))
    }

    if bytes.len() < 2 || &bytes[..2] != PGM_MAGIC {
        return Err(DcpError::Format("not a binary P5 PGM".into()));
    }
    pos += 2;

    let width = read_number(bytes, &mut pos, "width")?;
    let height = read_number(bytes, &mut pos, "height")?;
    let maxval = read_number(bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(DcpError::Unsupported(format!(
            "PGM maxval {maxval}, only 255 is supported"
        )));
    }
    // Exactly one whitespace byte separates the header from the payload.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(DcpError::Format("missing whitespace after PGM maxval".into()));
    }
    pos += 1;

    let expected = width
        .checked_mul(height)
        .ok_or_else(|| DcpError::Format("PGM dimensions overflow".into()))?;
    let payload = &bytes[pos..];
    if payload.len() != expected {
        return Err(DcpError::Format(format!(
            "PGM payload is {} bytes, expected {expected}",
            payload.len()
        )));
    }
    GrayImage::from_bytes(width, height, payload)
}

/// Encode as a canonical binary P5 PGM (`P5\n{w} {h}\n255\n` + payload).
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = header.into_bytes();
    out.extend(img.to_bytes());
    out
}

/// Load a binary 8-bit PGM file.
pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let bytes = std::fs::read(path.as_ref())?;
    parse_pgm(&bytes)
}

/// Write a binary 8-bit PGM file in canonical form.
pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), encode_pgm(img))?;
    Ok(())
}

/// Number of points in the dense landmark layout.
pub const LANDMARK_COUNT: usize = 49;

/// An ordered set of 49 subpixel facial feature points.
///
/// Index layout: 0–4 left eyebrow, 5–9 right eyebrow, 10–13 nose bridge,
/// 14–18 nose base, 19–24 left eye, 25–30 right eye, 31–42 outer mouth,
/// 43–48 inner mouth. "Left"/"right" are image-side (the left eye has the
/// smaller x).
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<Point>,
}

impl LandmarkSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() != LANDMARK_COUNT {
            return Err(DcpError::Input(format!(
                "expected {LANDMARK_COUNT} landmarks, got {}",
                points.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(DcpError::Input(format!(
                "non-finite landmark coordinate ({}, {})",
                p.x, p.y
            )));
        }
        Ok(LandmarkSet { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Point {
        self.points[index]
    }

    /// Mean position of a subset of landmark indices.
    pub fn centroid(&self, indices: &[usize]) -> Point {
        let mut x = 0.0;
        let mut y = 0.0;
        for &i in indices {
            x += self.points[i].x;
            y += self.points[i].y;
        }
        let n = indices.len() as f64;
        Point::new(x / n, y / n)
    }

    /// Map every point through `f`.
    pub fn map(&self, f: impl Fn(Point) -> Point) -> Result<LandmarkSet> {
        LandmarkSet::new(self.points.iter().map(|&p| f(p)).collect())
    }

    /// Reorder points by a permutation table (`new[i] = old[perm[i]]`).
    pub fn permuted(&self, perm: &[usize; LANDMARK_COUNT]) -> LandmarkSet {
        LandmarkSet {
            points: perm.iter().map(|&i| self.points[i]).collect(),
        }
    }

    /// Parse the plain-text exchange format: 49 lines of `x y`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::with_capacity(LANDMARK_COUNT);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let x = it
                .next()
                .and_then(|t| t.parse::<f64>().ok())
                .ok_or_else(|| {
                    DcpError::Format(format!("landmark line {}: expected `x y`", lineno + 1))
                })?;
            let y = it
                .next()
                .and_then(|t| t.parse::<f64>().ok())
                .ok_or_else(|| {
                    DcpError::Format(format!("landmark line {}: expected `x y`", lineno + 1))
                })?;
            if it.next().is_some() {
                return Err(DcpError::Format(format!(
                    "landmark line {}: trailing tokens",
                    lineno + 1
                )));
            }
            points.push(Point::new(x, y));
        }
        LandmarkSet::new(points)
    }

    /// Serialize to the plain-text exchange format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            out.push_str(&format!("{} {}\n", p.x, p.y));
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_text())?;
        Ok(())
    }
}

/// Landmark index groups for the standard 49-point layout.
pub mod landmarks {
    /// Left eyebrow, ordered outer to inner.
    pub const LEFT_BROW: [usize; 5] = [0, 1, 2, 3, 4];
    /// Right eyebrow, ordered inner to outer.
    pub const RIGHT_BROW: [usize; 5] = [5, 6, 7, 8, 9];
    /// Nose bridge, top to bottom.
    pub const NOSE_BRIDGE: [usize; 4] = [10, 11, 12, 13];
    /// Nose base, left to right.
    pub const NOSE_BASE: [usize; 5] = [14, 15, 16, 17, 18];
    /// Left eye: outer corner, two upper-lid points, inner corner, two lower-lid points.
    pub const LEFT_EYE: [usize; 6] = [19, 20, 21, 22, 23, 24];
    /// Right eye: inner corner, two upper-lid points, outer corner, two lower-lid points.
    pub const RIGHT_EYE: [usize; 6] = [25, 26, 27, 28, 29, 30];
    /// Outer mouth contour: left corner, upper lip l→r, right corner, lower lip r→l.
    pub const OUTER_MOUTH: [usize; 12] = [31, 32, 33, 34, 35, 36, 37, 38, 39, 40, 41, 42];
    /// Inner mouth contour: left corner, upper lip, right corner, lower lip.
    pub const INNER_MOUTH: [usize; 6] = [43, 44, 45, 46, 47, 48];

    /// Eye centers as the mean of each six-point eye contour: (left, right).
    pub fn eye_centers(lm: &super::LandmarkSet) -> (super::Point, super::Point) {
        (lm.centroid(&LEFT_EYE), lm.centroid(&RIGHT_EYE))
    }

    /// Mouth center as the mean of all eighteen mouth contour points.
    pub fn mouth_center(lm: &super::LandmarkSet) -> super::Point {
        let all: Vec<usize> = OUTER_MOUTH.iter().chain(INNER_MOUTH.iter()).copied().collect();
        lm.centroid(&all)
    }

    /// Index permutation describing a horizontal mirror of the layout.
    /// An involution: applying it twice is the identity.
    pub const FLIP_PERMUTATION: [usize; super::LANDMARK_COUNT] = [
        // brows swap sides; within-brow order reverses
        9, 8, 7, 6, 5, 4, 3, 2, 1, 0,
        // nose bridge sits on the midline
        10, 11, 12, 13,
        // nose base reverses
        18, 17, 16, 15, 14,
        // eyes swap sides; corner/lid order mirrors
        28, 27, 26, 25, 30, 29, 22, 21, 20, 19, 24, 23,
        // outer mouth: corners swap, lips reverse
        37, 36, 35, 34, 33, 32, 31, 42, 41, 40, 39, 38,
        // inner mouth
        46, 45, 44, 43, 48, 47,
    ];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_parse_basic() {
        let file = b"P5\n2 2\n255\n\x00\xff\x80\x07";
        let img = parse_pgm(file).unwrap();
        assert_eq!(img.width(), 2);
        assert_eq!(img.height(), 2);
        assert_eq!(img.data(), &[0.0, 255.0, 128.0, 7.0]);
    }

    #[test]
    fn pgm_empty_file_is_format_error() {
        match parse_pgm(b"") {
            Err(DcpError::Format(_)) => {}
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn pgm_wrong_maxval_is_unsupported() {
        match parse_pgm(b"P5\n1 1\n65535\n\x00\x00") {
            Err(DcpError::Unsupported(_)) => {}
            other => panic!("expected unsupported error, got {other:?}"),
        }
    }

    #[test]
    fn pgm_truncated_payload_is_format_error() {
        assert!(matches!(
            parse_pgm(b"P5\n2 2\n255\n\x00\x01"),
            Err(DcpError::Format(_))
        ));
    }

    #[test]
    fn pgm_comments_are_skipped() {
        let file = b"P5\n# a comment\n2 1 # trailing\n255\n\x05\x06";
        let img = parse_pgm(file).unwrap();
        assert_eq!(img.data(), &[5.0, 6.0]);
    }

    #[test]
    fn bilinear_identity_on_grid_points() {
        let img = GrayImage::from_bytes(3, 2, &[10, 20, 30, 40, 50, 60]).unwrap();
        for y in 0..2 {
            for x in 0..3 {
                assert_eq!(img.sample_bilinear(x as f64, y as f64), img.pixel(x, y));
            }
        }
    }

    #[test]
    fn bilinear_midpoint_of_adjacent_pixels() {
        let img = GrayImage::from_bytes(2, 1, &[10, 20]).unwrap();
        assert_eq!(img.sample_bilinear(0.5, 0.0), 15.0);
    }

    #[test]
    fn bilinear_clamps_to_border() {
        let img = GrayImage::from_bytes(2, 2, &[1, 2, 3, 4]).unwrap();
        assert_eq!(img.sample_bilinear(-5.0, -5.0), 1.0);
        assert_eq!(img.sample_bilinear(100.0, 100.0), 4.0);
    }

    #[test]
    fn bilinear_exact_on_affine_intensity() {
        // I(x, y) = a x + b y + c is reproduced exactly at interior
        // subpixel coordinates.
        let (a, b, c) = (3.25, -1.5, 40.0);
        let w = 8;
        let h = 6;
        let data: Vec<f64> = (0..w * h)
            .map(|i| a * (i % w) as f64 + b * (i / w) as f64 + c)
            .collect();
        let img = GrayImage::from_raw(w, h, data).unwrap();
        for &(x, y) in &[(0.25, 0.75), (3.5, 2.125), (6.875, 4.0), (1.0, 3.9375)] {
            let expected = a * x + b * y + c;
            assert!((img.sample_bilinear(x, y) - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn flip_horizontal_is_involution() {
        let img = GrayImage::from_bytes(3, 2, &[1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(img.flip_horizontal().flip_horizontal(), img);
        assert_eq!(img.flip_horizontal().data(), &[3.0, 2.0, 1.0, 6.0, 5.0, 4.0]);
    }

    #[test]
    fn landmark_roundtrip_and_validation() {
        let points: Vec<Point> = (0..LANDMARK_COUNT)
            .map(|i| Point::new(i as f64 + 0.5, 2.0 * i as f64))
            .collect();
        let set = LandmarkSet::new(points).unwrap();
        let parsed = LandmarkSet::parse(&set.to_text()).unwrap();
        assert_eq!(set, parsed);

        assert!(LandmarkSet::new(vec![Point::new(0.0, 0.0); 5]).is_err());
    }

    #[test]
    fn flip_permutation_is_involution() {
        let p = landmarks::FLIP_PERMUTATION;
        for i in 0..LANDMARK_COUNT {
            assert_eq!(p[p[i]], i, "index {i}");
        }
    }
}
