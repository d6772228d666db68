//! Local texture encoders and their histogram representations.
//!
//! The dual-cross encoder samples two intensities along each of 8
//! directions (an inner ring at `r_in`, an outer ring at `r_ex`) and turns
//! the sign pattern of second-order differences into a pair of 256-ary code
//! planes: even directions form one plane, odd directions the other. The
//! single-ring binary, multi-scale binary, and ternary encoders serve as
//! baselines. Code maps are reduced to features by regional histogramming
//! over an N×N grid.
//!
//! All comparisons share the convention that a zero difference counts as
//! "greater or equal", so a constant image produces the all-ones sign
//! pattern in every encoder.

use crate::imaging::GrayImage;
use crate::{par, DcpError, Result};
use serde::{Deserialize, Serialize};

/// How off-grid ring samples are read.
///
/// `Nearest` snaps each ring offset to the nearest integer pixel when the
/// geometry is built, which keeps every code a pure function of sign
/// comparisons between raster pixels; codes are then bit-exactly invariant
/// under any strictly increasing intensity map. `Bilinear` interpolates the
/// four enclosing pixels, which trades that exact invariance for subpixel
/// ring placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    #[default]
    Nearest,
    Bilinear,
}

/// Number of sampling directions; direction `k` points along angle `k·π/4`
/// with x right and y down.
pub const DIRECTIONS: usize = 8;

/// Direction relabeling induced by a horizontal mirror (x negated):
/// direction `k` maps to `FLIP_DIRECTION_MAP[k]`.
pub const FLIP_DIRECTION_MAP: [usize; DIRECTIONS] = [4, 3, 2, 1, 0, 7, 6, 5];

/// Codes per channel for every encoder in this module.
pub const CODE_CARDINALITY: usize = 256;

/// Inner/outer ring radii and the 16 precomputed sample offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGeometry {
    r_in: f64,
    r_ex: f64,
    mode: SampleMode,
    inner: [(f64, f64); DIRECTIONS],
    outer: [(f64, f64); DIRECTIONS],
}

fn ring_offsets(radius: f64, mode: SampleMode) -> [(f64, f64); DIRECTIONS] {
    let mut out = [(0.0, 0.0); DIRECTIONS];
    for (k, o) in out.iter_mut().enumerate() {
        let angle = k as f64 * std::f64::consts::FRAC_PI_4;
        let (dx, dy) = (radius * angle.cos(), radius * angle.sin());
        *o = match mode {
            SampleMode::Nearest => (dx.round(), dy.round()),
            SampleMode::Bilinear => (dx, dy),
        };
    }
    out
}

impl SamplingGeometry {
    /// Geometry with the default nearest-pixel sampling.
    pub fn new(r_in: f64, r_ex: f64) -> Result<Self> {
        Self::with_mode(r_in, r_ex, SampleMode::default())
    }

    pub fn with_mode(r_in: f64, r_ex: f64, mode: SampleMode) -> Result<Self> {
        if !(r_in > 0.0 && r_in < r_ex) {
            return Err(DcpError::Config(format!(
                "ring radii must satisfy 0 < r_in < r_ex, got {r_in} and {r_ex}"
            )));
        }
        Ok(SamplingGeometry {
            r_in,
            r_ex,
            mode,
            inner: ring_offsets(r_in, mode),
            outer: ring_offsets(r_ex, mode),
        })
    }

    pub fn r_in(&self) -> f64 {
        self.r_in
    }

    pub fn r_ex(&self) -> f64 {
        self.r_ex
    }

    pub fn mode(&self) -> SampleMode {
        self.mode
    }

    /// Inner-ring offset for direction `k`.
    pub fn inner_offset(&self, k: usize) -> (f64, f64) {
        self.inner[k]
    }

    /// Outer-ring offset for direction `k`.
    pub fn outer_offset(&self, k: usize) -> (f64, f64) {
        self.outer[k]
    }

    #[inline]
    fn sample(&self, img: &GrayImage, x: usize, y: usize, off: (f64, f64)) -> f64 {
        match self.mode {
            SampleMode::Nearest => {
                img.pixel_clamped(x as i64 + off.0 as i64, y as i64 + off.1 as i64)
            }
            SampleMode::Bilinear => img.sample_bilinear(x as f64 + off.0, y as f64 + off.1),
        }
    }
}

/// Per-pixel integer code planes produced by an encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMap {
    width: usize,
    height: usize,
    planes: Vec<Vec<u8>>,
}

impl CodeMap {
    fn from_planes(width: usize, height: usize, planes: Vec<Vec<u8>>) -> Self {
        debug_assert!(planes.iter().all(|p| p.len() == width * height));
        CodeMap {
            width,
            height,
            planes,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    /// Codes per channel.
    pub fn code_cardinality(&self) -> usize {
        CODE_CARDINALITY
    }

    /// Row-major code plane for one channel.
    pub fn plane(&self, channel: usize) -> &[u8] {
        &self.planes[channel]
    }

    pub fn code(&self, channel: usize, x: usize, y: usize) -> u8 {
        self.planes[channel][y * self.width + x]
    }

    /// Keep a single channel (used by the single-cross encoder variants).
    pub fn into_channel(mut self, channel: usize) -> CodeMap {
        let plane = self.planes.swap_remove(channel);
        CodeMap {
            width: self.width,
            height: self.height,
            planes: vec![plane],
        }
    }
}

#[inline]
fn step(x: f64) -> u8 {
    (x >= 0.0) as u8
}

/// Directional code from the center intensity and the two ring samples:
/// `S(i_a - i_o)·2 + S(i_b - i_a)` with `S(x) = 1` iff `x ≥ 0`.
#[inline]
pub fn dcp_directional_code(i_o: f64, i_a: f64, i_b: f64) -> u8 {
    step(i_a - i_o) * 2 + step(i_b - i_a)
}

/// Dual-cross encoding: two 256-ary planes, channel 0 from even directions
/// `{0,2,4,6}` and channel 1 from odd directions `{1,3,5,7}`, each combined
/// base-4 in direction order. Borders are encoded with replicate padding.
pub fn encode_dcp(img: &GrayImage, g: &SamplingGeometry) -> CodeMap {
    let (w, h) = (img.width(), img.height());
    let rows = par::map_range(h, |y| {
        let mut even = vec![0u8; w];
        let mut odd = vec![0u8; w];
        for x in 0..w {
            let i_o = img.pixel(x, y);
            let mut e = 0u8;
            let mut o = 0u8;
            for i in 0..4 {
                let k = 2 * i;
                let i_a = g.sample(img, x, y, g.inner[k]);
                let i_b = g.sample(img, x, y, g.outer[k]);
                e |= dcp_directional_code(i_o, i_a, i_b) << (2 * i);
                let k = 2 * i + 1;
                let i_a = g.sample(img, x, y, g.inner[k]);
                let i_b = g.sample(img, x, y, g.outer[k]);
                o |= dcp_directional_code(i_o, i_a, i_b) << (2 * i);
            }
            even[x] = e;
            odd[x] = o;
        }
        (even, odd)
    });
    let mut p0 = Vec::with_capacity(w * h);
    let mut p1 = Vec::with_capacity(w * h);
    for (even, odd) in rows {
        p0.extend(even);
        p1.extend(odd);
    }
    CodeMap::from_planes(w, h, vec![p0, p1])
}

/// All eight directional codes at one pixel, decoded from the two planes of
/// a dual-cross map (even directions from channel 0, odd from channel 1).
pub fn dcp_codes_at(cm: &CodeMap, x: usize, y: usize) -> [u8; DIRECTIONS] {
    let e = cm.code(0, x, y);
    let o = cm.code(1, x, y);
    let mut out = [0u8; DIRECTIONS];
    for i in 0..4 {
        out[2 * i] = (e >> (2 * i)) & 3;
        out[2 * i + 1] = (o >> (2 * i)) & 3;
    }
    out
}

/// Channel-0 code relabeling under a horizontal mirror: directions 0 and 4
/// swap (base-4 digits 0 and 2), directions 2 and 6 are fixed.
pub fn dcp1_flip_code(code: u8) -> u8 {
    let d0 = code & 3;
    let d1 = (code >> 2) & 3;
    let d2 = (code >> 4) & 3;
    let d3 = (code >> 6) & 3;
    d2 | (d1 << 2) | (d0 << 4) | (d3 << 6)
}

/// Channel-1 code relabeling under a horizontal mirror: directions 1↔3
/// (digits 0↔1) and 5↔7 (digits 2↔3) swap.
pub fn dcp2_flip_code(code: u8) -> u8 {
    let d0 = code & 3;
    let d1 = (code >> 2) & 3;
    let d2 = (code >> 4) & 3;
    let d3 = (code >> 6) & 3;
    d1 | (d0 << 2) | (d3 << 4) | (d2 << 6)
}

fn lbp_offsets(radius: f64, mode: SampleMode) -> Result<[(f64, f64); DIRECTIONS]> {
    if !(radius > 0.0) {
        return Err(DcpError::Config(format!("radius must be > 0, got {radius}")));
    }
    Ok(ring_offsets(radius, mode))
}

/// Single-ring 8-neighbor binary encoding: bit `k` set iff the sample along
/// direction `k` is ≥ the center. All 256 codes are kept (no uniform-code
/// folding).
pub fn encode_lbp(img: &GrayImage, radius: f64, mode: SampleMode) -> Result<CodeMap> {
    let offsets = lbp_offsets(radius, mode)?;
    let g = SamplingGeometry {
        r_in: radius,
        r_ex: radius + 1.0,
        mode,
        inner: offsets,
        outer: offsets,
    };
    let (w, h) = (img.width(), img.height());
    let rows = par::map_range(h, |y| {
        let mut row = vec![0u8; w];
        for (x, out) in row.iter_mut().enumerate() {
            let i_o = img.pixel(x, y);
            let mut code = 0u8;
            for (k, &off) in offsets.iter().enumerate() {
                code |= step(g.sample(img, x, y, off) - i_o) << k;
            }
            *out = code;
        }
        row
    });
    Ok(CodeMap::from_planes(w, h, vec![rows.concat()]))
}

/// Two-radius binary encoding: channel 0 at `r1`, channel 1 at `r2`.
pub fn encode_mslbp(img: &GrayImage, r1: f64, r2: f64, mode: SampleMode) -> Result<CodeMap> {
    if !(r1 < r2) {
        return Err(DcpError::Config(format!(
            "multi-scale radii must satisfy r1 < r2, got {r1} and {r2}"
        )));
    }
    let a = encode_lbp(img, r1, mode)?;
    let b = encode_lbp(img, r2, mode)?;
    Ok(CodeMap::from_planes(
        a.width,
        a.height,
        vec![a.planes.into_iter().next().unwrap(), b.planes.into_iter().next().unwrap()],
    ))
}

/// Ternary encoding split into two binary planes: the upper plane sets bit
/// `k` iff the difference is ≥ `t`, the lower plane iff it is ≤ `-t`.
pub fn encode_ltp(img: &GrayImage, radius: f64, t: f64, mode: SampleMode) -> Result<CodeMap> {
    if t < 0.0 {
        return Err(DcpError::Config(format!("ternary threshold must be ≥ 0, got {t}")));
    }
    let offsets = lbp_offsets(radius, mode)?;
    let g = SamplingGeometry {
        r_in: radius,
        r_ex: radius + 1.0,
        mode,
        inner: offsets,
        outer: offsets,
    };
    let (w, h) = (img.width(), img.height());
    let rows = par::map_range(h, |y| {
        let mut upper = vec![0u8; w];
        let mut lower = vec![0u8; w];
        for x in 0..w {
            let i_o = img.pixel(x, y);
            let mut up = 0u8;
            let mut lo = 0u8;
            for (k, &off) in offsets.iter().enumerate() {
                let diff = g.sample(img, x, y, off) - i_o;
                up |= ((diff >= t) as u8) << k;
                lo |= ((diff <= -t) as u8) << k;
            }
            upper[x] = up;
            lower[x] = lo;
        }
        (upper, lower)
    });
    let mut p0 = Vec::with_capacity(w * h);
    let mut p1 = Vec::with_capacity(w * h);
    for (upper, lower) in rows {
        p0.extend(upper);
        p1.extend(lower);
    }
    Ok(CodeMap::from_planes(w, h, vec![p0, p1]))
}

/// Concatenated per-region, per-channel code histograms.
///
/// Layout is region-major (regions in row-major grid order), then channel,
/// then bin: the histogram of region `r`, channel `c` occupies
/// `counts[(r·channels + c)·256 .. (r·channels + c + 1)·256]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionalHistogramFeature {
    pub grid: usize,
    pub channels: usize,
    pub code_cardinality: usize,
    pub counts: Vec<u32>,
}

impl RegionalHistogramFeature {
    pub fn regions(&self) -> usize {
        self.grid * self.grid
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Histogram slice of one region and channel.
    pub fn region_histogram(&self, region: usize, channel: usize) -> &[u32] {
        let start = (region * self.channels + channel) * self.code_cardinality;
        &self.counts[start..start + self.code_cardinality]
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }
}

/// Cell boundaries for an axis of `len` pixels split into `n` cells: the
/// first `n-1` cells take `len / n` pixels, the last absorbs the remainder.
pub(crate) fn cell_bounds(len: usize, n: usize) -> Vec<(usize, usize)> {
    let cell = len / n;
    (0..n)
        .map(|i| {
            let start = i * cell;
            let end = if i + 1 == n { len } else { start + cell };
            (start, end)
        })
        .collect()
}

/// Histogram a code map over an `grid_n × grid_n` partition of the raster.
pub fn regional_histograms(cm: &CodeMap, grid_n: usize) -> Result<RegionalHistogramFeature> {
    if grid_n < 1 || grid_n > cm.width().min(cm.height()) {
        return Err(DcpError::Config(format!(
            "grid {grid_n} out of range for a {}x{} code map",
            cm.width(),
            cm.height()
        )));
    }
    let channels = cm.channels();
    let xs = cell_bounds(cm.width(), grid_n);
    let ys = cell_bounds(cm.height(), grid_n);
    let blocks = par::map_range(grid_n * grid_n, |region| {
        let (y0, y1) = ys[region / grid_n];
        let (x0, x1) = xs[region % grid_n];
        let mut block = vec![0u32; channels * CODE_CARDINALITY];
        for (c, plane) in cm.planes.iter().enumerate() {
            let hist = &mut block[c * CODE_CARDINALITY..(c + 1) * CODE_CARDINALITY];
            for y in y0..y1 {
                for &code in &plane[y * cm.width() + x0..y * cm.width() + x1] {
                    hist[code as usize] += 1;
                }
            }
        }
        block
    });
    Ok(RegionalHistogramFeature {
        grid: grid_n,
        channels,
        code_cardinality: CODE_CARDINALITY,
        counts: blocks.concat(),
    })
}

/// Chi-squared histogram distance; `0/0` terms contribute nothing.
pub fn chi_squared(h1: &[f64], h2: &[f64]) -> Result<f64> {
    check_hist_pair(h1, h2)?;
    Ok(h1
        .iter()
        .zip(h2)
        .map(|(&a, &b)| {
            let s = a + b;
            if s > 0.0 {
                (a - b) * (a - b) / s
            } else {
                0.0
            }
        })
        .sum())
}

/// Histogram intersection similarity: the summed elementwise minimum.
pub fn hist_intersection(h1: &[f64], h2: &[f64]) -> Result<f64> {
    check_hist_pair(h1, h2)?;
    Ok(h1.iter().zip(h2).map(|(&a, &b)| a.min(b)).sum())
}

fn check_hist_pair(h1: &[f64], h2: &[f64]) -> Result<()> {
    if h1.len() != h2.len() {
        return Err(DcpError::Dimension(format!(
            "histogram lengths differ: {} vs {}",
            h1.len(),
            h2.len()
        )));
    }
    if h1.iter().chain(h2).any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(DcpError::Input("histogram entries must be finite and nonnegative".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, rng: &mut impl Rng) -> GrayImage {
        let data: Vec<u8> = (0..w * h).map(|_| rng.random()).collect();
        GrayImage::from_bytes(w, h, &data).unwrap()
    }

    /// Independent reference encoder: recomputes ring offsets from scratch
    /// per pixel and samples with its own arithmetic.
    fn oracle_sample(img: &GrayImage, x: usize, y: usize, radius: f64, k: usize, mode: SampleMode) -> f64 {
        let angle = k as f64 * std::f64::consts::PI / 4.0;
        let dx = radius * angle.cos();
        let dy = radius * angle.sin();
        match mode {
            SampleMode::Nearest => {
                img.pixel_clamped(x as i64 + dx.round() as i64, y as i64 + dy.round() as i64)
            }
            SampleMode::Bilinear => {
                // Same two-stage lerp contract as the library sampler (the
                // exactly constant-preserving formulation), written out
                // independently.
                let sx = x as f64 + dx;
                let sy = y as f64 + dy;
                let x0 = sx.floor() as i64;
                let y0 = sy.floor() as i64;
                let fx = sx - sx.floor();
                let fy = sy - sy.floor();
                let lerp = |a: f64, b: f64, f: f64| a + f * (b - a);
                let top = lerp(
                    img.pixel_clamped(x0, y0),
                    img.pixel_clamped(x0 + 1, y0),
                    fx,
                );
                let bottom = lerp(
                    img.pixel_clamped(x0, y0 + 1),
                    img.pixel_clamped(x0 + 1, y0 + 1),
                    fx,
                );
                lerp(top, bottom, fy)
            }
        }
    }

    fn oracle_dcp(img: &GrayImage, r_in: f64, r_ex: f64, mode: SampleMode) -> (Vec<u8>, Vec<u8>) {
        let mut even = Vec::new();
        let mut odd = Vec::new();
        for y in 0..img.height() {
            for x in 0..img.width() {
                let i_o = img.pixel(x, y);
                let mut dir = [0u8; 8];
                for (k, d) in dir.iter_mut().enumerate() {
                    let i_a = oracle_sample(img, x, y, r_in, k, mode);
                    let i_b = oracle_sample(img, x, y, r_ex, k, mode);
                    let s1 = if i_a - i_o >= 0.0 { 1u8 } else { 0 };
                    let s2 = if i_b - i_a >= 0.0 { 1u8 } else { 0 };
                    *d = s1 * 2 + s2;
                }
                even.push(dir[0] + 4 * dir[2] + 16 * dir[4] + 64 * dir[6]);
                odd.push(dir[1] + 4 * dir[3] + 16 * dir[5] + 64 * dir[7]);
            }
        }
        (even, odd)
    }

    fn oracle_lbp(img: &GrayImage, radius: f64, mode: SampleMode) -> Vec<u8> {
        let mut out = Vec::new();
        for y in 0..img.height() {
            for x in 0..img.width() {
                let i_o = img.pixel(x, y);
                let mut code = 0u16;
                for k in 0..8 {
                    if oracle_sample(img, x, y, radius, k, mode) - i_o >= 0.0 {
                        code += 1 << k;
                    }
                }
                out.push(code as u8);
            }
        }
        out
    }

    #[test]
    fn directional_code_examples() {
        assert_eq!(dcp_directional_code(100.0, 100.0, 100.0), 3);
        assert_eq!(dcp_directional_code(100.0, 120.0, 110.0), 2);
        assert_eq!(dcp_directional_code(100.0, 90.0, 95.0), 1);
    }

    #[test]
    fn constant_image_gives_all_255() {
        let img = GrayImage::constant(10, 8, 42.0).unwrap();
        let g = SamplingGeometry::new(4.0, 6.0).unwrap();
        let cm = encode_dcp(&img, &g);
        assert!(cm.plane(0).iter().all(|&c| c == 255));
        assert!(cm.plane(1).iter().all(|&c| c == 255));

        let lbp = encode_lbp(&img, 1.0, SampleMode::Nearest).unwrap();
        assert!(lbp.plane(0).iter().all(|&c| c == 255));
    }

    #[test]
    fn dcp_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for &(r_in, r_ex) in &[(1.0, 2.0), (2.0, 3.0), (4.0, 6.0)] {
            for mode in [SampleMode::Nearest, SampleMode::Bilinear] {
                let g = SamplingGeometry::with_mode(r_in, r_ex, mode).unwrap();
                for _ in 0..20 {
                    let img = random_image(32, 32, &mut rng);
                    let cm = encode_dcp(&img, &g);
                    let (even, odd) = oracle_dcp(&img, r_in, r_ex, mode);
                    assert_eq!(cm.plane(0), &even[..]);
                    assert_eq!(cm.plane(1), &odd[..]);
                }
            }
        }
    }

    #[test]
    fn lbp_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for radius in [1.0, 2.0, 3.0] {
            for mode in [SampleMode::Nearest, SampleMode::Bilinear] {
                for _ in 0..20 {
                    let img = random_image(32, 32, &mut rng);
                    let cm = encode_lbp(&img, radius, mode).unwrap();
                    assert_eq!(cm.plane(0), &oracle_lbp(&img, radius, mode)[..]);
                }
            }
        }
    }

    #[test]
    fn lbp_center_above_neighbors_is_zero() {
        let mut data = vec![0u8; 9];
        data[4] = 10;
        let img = GrayImage::from_bytes(3, 3, &data).unwrap();
        let cm = encode_lbp(&img, 1.0, SampleMode::Nearest).unwrap();
        assert_eq!(cm.code(0, 1, 1), 0);
    }

    #[test]
    fn mslbp_channel_zero_is_plain_lbp() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let img = random_image(20, 16, &mut rng);
        let ms = encode_mslbp(&img, 1.0, 3.0, SampleMode::Nearest).unwrap();
        let single = encode_lbp(&img, 1.0, SampleMode::Nearest).unwrap();
        assert_eq!(ms.plane(0), single.plane(0));
        assert_eq!(ms.channels(), 2);
        assert!(encode_mslbp(&img, 3.0, 1.0, SampleMode::Nearest).is_err());
    }

    #[test]
    fn ltp_threshold_zero_upper_equals_lbp() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let img = random_image(20, 16, &mut rng);
        let ltp = encode_ltp(&img, 2.0, 0.0, SampleMode::Nearest).unwrap();
        let lbp = encode_lbp(&img, 2.0, SampleMode::Nearest).unwrap();
        assert_eq!(ltp.plane(0), lbp.plane(0));
    }

    #[test]
    fn ltp_constant_image_is_all_zero() {
        let img = GrayImage::constant(9, 9, 100.0).unwrap();
        let ltp = encode_ltp(&img, 1.0, 5.0, SampleMode::Nearest).unwrap();
        assert!(ltp.plane(0).iter().all(|&c| c == 0));
        assert!(ltp.plane(1).iter().all(|&c| c == 0));
    }

    #[test]
    fn dual_cross_split_is_lossless() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let img = random_image(24, 24, &mut rng);
        let g = SamplingGeometry::new(2.0, 3.0).unwrap();
        let cm = encode_dcp(&img, &g);
        for y in 0..img.height() {
            for x in 0..img.width() {
                let i_o = img.pixel(x, y);
                let decoded = dcp_codes_at(&cm, x, y);
                for k in 0..8 {
                    let i_a = oracle_sample(&img, x, y, 2.0, k, SampleMode::Nearest);
                    let i_b = oracle_sample(&img, x, y, 3.0, k, SampleMode::Nearest);
                    assert_eq!(decoded[k], dcp_directional_code(i_o, i_a, i_b));
                }
            }
        }
    }

    #[test]
    fn flip_code_permutations_are_involutions() {
        for c in 0u16..256 {
            assert_eq!(dcp1_flip_code(dcp1_flip_code(c as u8)), c as u8);
            assert_eq!(dcp2_flip_code(dcp2_flip_code(c as u8)), c as u8);
        }
        for i in 0..DIRECTIONS {
            assert_eq!(FLIP_DIRECTION_MAP[FLIP_DIRECTION_MAP[i]], i);
        }
    }

    #[test]
    fn flipped_image_histogram_is_code_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let g = SamplingGeometry::new(4.0, 6.0).unwrap();
        for _ in 0..5 {
            let img = random_image(24, 20, &mut rng);
            let cm = encode_dcp(&img, &g);
            let fm = encode_dcp(&img.flip_horizontal(), &g);
            let hist = |plane: &[u8]| {
                let mut h = [0u32; 256];
                for &c in plane {
                    h[c as usize] += 1;
                }
                h
            };
            let h0 = hist(cm.plane(0));
            let f0 = hist(fm.plane(0));
            for c in 0..256 {
                assert_eq!(h0[c], f0[dcp1_flip_code(c as u8) as usize]);
            }
            let h1 = hist(cm.plane(1));
            let f1 = hist(fm.plane(1));
            for c in 0..256 {
                assert_eq!(h1[c], f1[dcp2_flip_code(c as u8) as usize]);
            }
        }
    }

    #[test]
    fn regional_histograms_grid8_on_128() {
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        let img = random_image(128, 128, &mut rng);
        let g = SamplingGeometry::new(4.0, 6.0).unwrap();
        let feat = regional_histograms(&encode_dcp(&img, &g), 8).unwrap();
        assert_eq!(feat.len(), 64 * 2 * 256);
        for region in 0..64 {
            for c in 0..2 {
                let sum: u32 = feat.region_histogram(region, c).iter().sum();
                assert_eq!(sum, 256);
            }
        }
    }

    #[test]
    fn regional_histograms_grid1_is_global_bincount() {
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        let img = random_image(17, 13, &mut rng);
        let cm = encode_lbp(&img, 1.0, SampleMode::Nearest).unwrap();
        let feat = regional_histograms(&cm, 1).unwrap();
        let mut expected = vec![0u32; 256];
        for &c in cm.plane(0) {
            expected[c as usize] += 1;
        }
        assert_eq!(feat.counts, expected);
    }

    #[test]
    fn regional_histograms_remainder_rule() {
        let img = GrayImage::constant(130, 130, 1.0).unwrap();
        let g = SamplingGeometry::new(4.0, 6.0).unwrap();
        let feat = regional_histograms(&encode_dcp(&img, &g), 8).unwrap();
        // First 7 cells span 16 px, the last spans 18: corner region holds
        // 16*16 px, the bottom-right one 18*18.
        let first: u32 = feat.region_histogram(0, 0).iter().sum();
        let last: u32 = feat.region_histogram(63, 0).iter().sum();
        assert_eq!(first, 256);
        assert_eq!(last, 324);
        let total: u32 = (0..64)
            .map(|r| feat.region_histogram(r, 0).iter().sum::<u32>())
            .sum();
        assert_eq!(total, 130 * 130);
    }

    #[test]
    fn regional_histograms_rejects_bad_grid() {
        let img = GrayImage::constant(8, 8, 0.0).unwrap();
        let cm = encode_lbp(&img, 1.0, SampleMode::Nearest).unwrap();
        assert!(matches!(regional_histograms(&cm, 0), Err(DcpError::Config(_))));
        assert!(matches!(regional_histograms(&cm, 9), Err(DcpError::Config(_))));
        assert!(regional_histograms(&cm, 8).is_ok());
    }

    #[test]
    fn chi_squared_examples() {
        let h = vec![3.0, 1.0, 0.0, 7.0];
        assert_eq!(chi_squared(&h, &h).unwrap(), 0.0);
        assert_eq!(chi_squared(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert!(matches!(
            chi_squared(&[1.0], &[1.0, 2.0]),
            Err(DcpError::Dimension(_))
        ));
        assert!(matches!(
            chi_squared(&[-1.0, 0.0], &[0.0, 1.0]),
            Err(DcpError::Input(_))
        ));
    }

    #[test]
    fn intersection_of_normalized_histograms() {
        let a = vec![0.25, 0.25, 0.5];
        let b = vec![0.5, 0.25, 0.25];
        let sim = hist_intersection(&a, &b).unwrap();
        assert!(sim < 1.0);
        assert_eq!(hist_intersection(&a, &a).unwrap(), 1.0);
    }

    /// A strictly increasing lookup table over the 256 gray levels.
    fn monotone_lut(steps: &[f64; 256]) -> [f64; 256] {
        let mut lut = [0.0f64; 256];
        let mut acc = -37.0;
        for (i, s) in steps.iter().enumerate() {
            acc += s;
            lut[i] = acc;
        }
        lut
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn dcp_codes_invariant_under_monotone_maps(
            seed in 0u64..1 << 20,
            steps in proptest::array::uniform32(0.01f64..8.0),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = random_image(16, 16, &mut rng);
            // Expand 32 random increments into 256 strictly positive steps.
            let mut full = [0.0f64; 256];
            for i in 0..256 {
                full[i] = steps[i % 32];
            }
            let lut = monotone_lut(&full);
            let mapped = img.map(|v| lut[v as usize]).unwrap();
            let g = SamplingGeometry::new(2.0, 3.0).unwrap();
            let base = encode_dcp(&img, &g);
            let remapped = encode_dcp(&mapped, &g);
            prop_assert_eq!(base.plane(0), remapped.plane(0));
            prop_assert_eq!(base.plane(1), remapped.plane(1));
            let l = encode_lbp(&img, 2.0, SampleMode::Nearest).unwrap();
            let lm = encode_lbp(&mapped, 2.0, SampleMode::Nearest).unwrap();
            prop_assert_eq!(l.plane(0), lm.plane(0));
        }

        #[test]
        fn regional_histogram_counts_cover_raster(
            seed in 0u64..1 << 20,
            w in 9usize..40,
            h in 9usize..40,
            grid in 1usize..9,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = random_image(w, h, &mut rng);
            let g = SamplingGeometry::new(1.0, 2.0).unwrap();
            let cm = encode_dcp(&img, &g);
            let feat = regional_histograms(&cm, grid).unwrap();
            prop_assert_eq!(feat.len(), grid * grid * 2 * 256);
            let total: u64 = feat.counts.iter().map(|&c| c as u64).sum();
            prop_assert_eq!(total, (w * h * 2) as u64);
        }
    }
}
