//! Synthetic data generators: stationary correlated random fields for
//! sampling-structure experiments, and a face-like corpus (images plus
//! 49-point annotations) for end-to-end protocol tests.
//!
//! Everything here is deterministic given a seed; corpus writes are
//! byte-reproducible.

use crate::imaging::{landmarks, GrayImage, LandmarkSet, Point, LANDMARK_COUNT};
use crate::model_io::{DatasetManifest, ManifestEntry, PairEntry, Role};
use crate::{DcpError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::path::{Path, PathBuf};

/// Stationary Gaussian random field with isotropic exponential covariance
/// `exp(-d / length_scale)`, sampled by circulant embedding on a 2W x 2H
/// torus and rescaled to [0, 255].
///
/// Negative embedding eigenvalues (the exponential kernel is not exactly
/// torus-embeddable) are clamped to zero; at these sizes the clamped mass is
/// negligible and the output covariance is a close approximation.
pub fn correlated_field(
    width: usize,
    height: usize,
    length_scale: f64,
    rng: &mut impl Rng,
) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(DcpError::Config("field dimensions must be nonzero".into()));
    }
    if !(length_scale > 0.0) || !length_scale.is_finite() {
        return Err(DcpError::Config(format!(
            "length scale must be positive and finite, got {length_scale}"
        )));
    }
    let nx = 2 * width;
    let ny = 2 * height;
    let n = nx * ny;

    // First row of the circulant covariance, with wrap-around distances.
    let mut spec: Vec<Complex64> = Vec::with_capacity(n);
    for j in 0..ny {
        let dy = j.min(ny - j) as f64;
        for i in 0..nx {
            let dx = i.min(nx - i) as f64;
            let d = (dx * dx + dy * dy).sqrt();
            spec.push(Complex64::new((-d / length_scale).exp(), 0.0));
        }
    }
    fft_2d(&mut spec, nx, ny, true);

    // Eigenvalues are real by symmetry; clamp tiny negatives from the
    // embedding. Scale by sqrt here so the draw below is a single multiply.
    for v in spec.iter_mut() {
        let lam = v.re.max(0.0);
        *v = Complex64::new(lam.sqrt(), 0.0);
    }

    for v in spec.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v *= Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
    }
    fft_2d(&mut spec, nx, ny, false);

    // Unnormalized inverse transform: divide by sqrt(N) for unit variance;
    // the real part of a circular complex field carries half the variance.
    let scale = (2.0 / n as f64).sqrt();
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            data.push(spec[y * nx + x].re * scale);
        }
    }
    let field = GrayImage::from_raw(width, height, data)?;
    Ok(crate::filtering::rescale_minmax(&field))
}

fn fft_2d(data: &mut [Complex64], nx: usize, ny: usize, forward: bool) {
    let mut planner = FftPlanner::new();
    let row_fft = if forward {
        planner.plan_fft_forward(nx)
    } else {
        planner.plan_fft_inverse(nx)
    };
    for row in data.chunks_exact_mut(nx) {
        row_fft.process(row);
    }
    let col_fft = if forward {
        planner.plan_fft_forward(ny)
    } else {
        planner.plan_fft_inverse(ny)
    };
    let mut col = vec![Complex64::new(0.0, 0.0); ny];
    for x in 0..nx {
        for y in 0..ny {
            col[y] = data[y * nx + x];
        }
        col_fft.process(&mut col);
        for y in 0..ny {
            data[y * nx + x] = col[y];
        }
    }
}

/// Canvas side for generated faces.
pub const SYNTH_CANVAS: usize = 200;

/// Mirror-symmetric 49-point annotation template on the synthetic canvas.
///
/// Coordinates are chosen so the horizontal flip of the template, after the
/// left/right index permutation, reproduces it exactly (all x values are
/// integers or half-integers, and the mirror `x' = (W-1) - x` is exact).
pub fn landmark_template() -> LandmarkSet {
    let m = (SYNTH_CANVAS - 1) as f64; // mirror via x' = m - x
    let mut pts = vec![Point { x: 0.0, y: 0.0 }; LANDMARK_COUNT];
    let mut set = |i: usize, x: f64, y: f64| {
        pts[i] = Point { x, y };
    };

    // Left brow, outer to inner.
    set(0, 52.0, 62.0);
    set(1, 61.0, 58.0);
    set(2, 70.0, 56.0);
    set(3, 79.0, 57.0);
    set(4, 88.0, 60.0);
    // Right brow, inner to outer, mirrored.
    set(5, m - 88.0, 60.0);
    set(6, m - 79.0, 57.0);
    set(7, m - 70.0, 56.0);
    set(8, m - 61.0, 58.0);
    set(9, m - 52.0, 62.0);
    // Nose bridge, top to tip, on the midline.
    set(10, 99.5, 85.0);
    set(11, 99.5, 95.0);
    set(12, 99.5, 104.0);
    set(13, 99.5, 112.0);
    // Nose base, left to right.
    set(14, 85.0, 120.0);
    set(15, 92.0, 123.0);
    set(16, 99.5, 125.0);
    set(17, m - 92.0, 123.0);
    set(18, m - 85.0, 120.0);
    // Left eye: outer corner, upper lid x2, inner corner, lower lid x2.
    set(19, 55.0, 85.0);
    set(20, 64.0, 81.0);
    set(21, 76.0, 81.0);
    set(22, 85.0, 85.0);
    set(23, 76.0, 89.0);
    set(24, 64.0, 89.0);
    // Right eye: inner corner, upper lid x2, outer corner, lower lid x2.
    set(25, m - 85.0, 85.0);
    set(26, m - 76.0, 81.0);
    set(27, m - 64.0, 81.0);
    set(28, m - 55.0, 85.0);
    set(29, m - 64.0, 89.0);
    set(30, m - 76.0, 89.0);
    // Outer mouth: left corner, upper arc to right corner, lower arc back.
    set(31, 78.0, 150.0);
    set(32, 85.0, 146.0);
    set(33, 92.0, 144.0);
    set(34, 99.5, 145.0);
    set(35, m - 92.0, 144.0);
    set(36, m - 85.0, 146.0);
    set(37, m - 78.0, 150.0);
    set(38, m - 85.0, 155.0);
    set(39, m - 92.0, 158.0);
    set(40, 99.5, 159.0);
    set(41, 92.0, 158.0);
    set(42, 85.0, 155.0);
    // Inner mouth: left corner, upper lip x2, right corner, lower lip x2.
    set(43, 85.0, 150.0);
    set(44, 93.0, 148.5);
    set(45, m - 93.0, 148.5);
    set(46, m - 85.0, 150.0);
    set(47, m - 93.0, 152.5);
    set(48, 93.0, 152.5);

    LandmarkSet::new(pts).expect("template is a valid landmark set")
}

/// One appearance variation applied to generated images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variation {
    /// Additive white Gaussian pixel noise with the given sigma.
    Noise(f64),
    /// Global multiplicative gain, log-uniform in [1/spread, spread].
    Gain(f64),
    /// Additive illumination plane with slopes uniform in [-max_slope, max_slope].
    IlluminationRamp(f64),
    /// Small similarity perturbation (shift, rotation, scale) of magnitude
    /// proportional to the given pixel amount, applied to both the image and
    /// its annotation.
    PoseJitter(f64),
}

impl Variation {
    pub const DEFAULT_NOISE: f64 = 2.0;
    pub const DEFAULT_GAIN: f64 = 1.2;
    pub const DEFAULT_RAMP: f64 = 0.15;
    pub const DEFAULT_JITTER: f64 = 1.5;

    fn parse_one(token: &str) -> Result<Variation> {
        let (name, value) = match token.split_once('=') {
            Some((n, v)) => {
                let parsed: f64 = v.trim().parse().map_err(|_| {
                    DcpError::Config(format!("variation value `{v}` is not a number"))
                })?;
                (n.trim(), Some(parsed))
            }
            None => (token.trim(), None),
        };
        if let Some(v) = value {
            if !(v > 0.0) || !v.is_finite() {
                return Err(DcpError::Config(format!(
                    "variation `{name}` needs a positive finite value, got {v}"
                )));
            }
        }
        match name {
            "noise" => Ok(Variation::Noise(value.unwrap_or(Self::DEFAULT_NOISE))),
            "gain" => Ok(Variation::Gain(value.unwrap_or(Self::DEFAULT_GAIN))),
            "ramp" => Ok(Variation::IlluminationRamp(value.unwrap_or(Self::DEFAULT_RAMP))),
            "jitter" => Ok(Variation::PoseJitter(value.unwrap_or(Self::DEFAULT_JITTER))),
            other => Err(DcpError::Config(format!(
                "unknown variation `{other}` (expected noise, gain, ramp, jitter, or none)"
            ))),
        }
    }

    /// Parses a comma-separated list like `noise,ramp=0.2,jitter`.
    /// The literal `none` yields an empty list.
    pub fn parse_list(s: &str) -> Result<Vec<Variation>> {
        let trimmed = s.trim();
        if trimmed.is_empty() || trimmed == "none" {
            return Ok(Vec::new());
        }
        trimmed.split(',').map(Variation::parse_one).collect()
    }
}

/// Corpus generation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n_ids: usize,
    pub n_per_id: usize,
    pub variations: Vec<Variation>,
    pub seed: u64,
}

impl SynthParams {
    pub fn new(n_ids: usize, n_per_id: usize, variations: Vec<Variation>, seed: u64) -> Result<Self> {
        if n_ids < 2 {
            return Err(DcpError::Config(format!(
                "need at least 2 identities, got {n_ids}"
            )));
        }
        if n_per_id < 1 {
            return Err(DcpError::Config("need at least 1 image per identity".into()));
        }
        Ok(SynthParams {
            n_ids,
            n_per_id,
            variations,
            seed,
        })
    }
}

/// One generated image with its annotation and identity.
#[derive(Debug, Clone)]
pub struct SynthSample {
    pub image: GrayImage,
    pub landmarks: LandmarkSet,
    pub subject: usize,
    pub index: usize,
}

struct Blob {
    x: f64,
    y: f64,
    amp: f64,
    inv_two_sigma_sq: f64,
}

struct Cosine {
    amp: f64,
    fx: f64,
    fy: f64,
    phase: f64,
}

/// Smooth per-identity appearance: a base level plus random low-frequency
/// cosines and Gaussian blobs anchored at the template landmarks.
struct IdentityPattern {
    cosines: Vec<Cosine>,
    blobs: Vec<Blob>,
}

const BASE_LEVEL: f64 = 150.0;

impl IdentityPattern {
    fn generate(template: &LandmarkSet, rng: &mut ChaCha8Rng) -> Self {
        let mut cosines = Vec::new();
        for l in 0..5 {
            let amp = 12.0 * rng.random_range(0.6..1.4) * 0.85f64.powi(l as i32);
            let fx = rng.random_range(-0.05..0.05);
            let fy = rng.random_range(-0.05..0.05);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            cosines.push(Cosine { amp, fx, fy, phase });
        }
        for _ in 0..3 {
            let amp = 5.0 * rng.random_range(0.6..1.4);
            let f = rng.random_range(0.08..0.15);
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            cosines.push(Cosine {
                amp,
                fx: f * theta.cos(),
                fy: f * theta.sin(),
                phase,
            });
        }

        let mut blobs = Vec::new();
        fn push_group(
            blobs: &mut Vec<Blob>,
            template: &LandmarkSet,
            indices: &[usize],
            base_amp: f64,
            base_sigma: f64,
            rng: &mut ChaCha8Rng,
        ) {
            let group_gain = rng.random_range(0.75..1.25);
            for &i in indices {
                let p = template.point(i);
                let amp = base_amp * group_gain * rng.random_range(0.85..1.15);
                let sigma = base_sigma * rng.random_range(0.9..1.1);
                blobs.push(Blob {
                    x: p.x,
                    y: p.y,
                    amp,
                    inv_two_sigma_sq: 1.0 / (2.0 * sigma * sigma),
                });
            }
        }
        push_group(&mut blobs, template, &landmarks::LEFT_BROW, -18.0, 3.0, rng);
        push_group(&mut blobs, template, &landmarks::RIGHT_BROW, -18.0, 3.0, rng);

        // Eye sockets as two large blobs at the eye centroids.
        let (left_eye, right_eye) = landmarks::eye_centers(template);
        for c in [left_eye, right_eye] {
            let amp = -45.0 * rng.random_range(0.8..1.2);
            let sigma = 5.5 * rng.random_range(0.9..1.1);
            blobs.push(Blob {
                x: c.x,
                y: c.y,
                amp,
                inv_two_sigma_sq: 1.0 / (2.0 * sigma * sigma),
            });
        }

        push_group(&mut blobs, template, &landmarks::NOSE_BRIDGE, 14.0, 3.5, rng);
        push_group(&mut blobs, template, &landmarks::NOSE_BASE, -12.0, 2.8, rng);
        push_group(&mut blobs, template, &landmarks::OUTER_MOUTH, -20.0, 2.8, rng);
        push_group(&mut blobs, template, &landmarks::INNER_MOUTH, -8.0, 2.4, rng);

        IdentityPattern { cosines, blobs }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let mut v = BASE_LEVEL;
        for c in &self.cosines {
            v += c.amp * (std::f64::consts::TAU * (c.fx * x + c.fy * y) + c.phase).cos();
        }
        for b in &self.blobs {
            let dx = x - b.x;
            let dy = y - b.y;
            v += b.amp * (-(dx * dx + dy * dy) * b.inv_two_sigma_sq).exp();
        }
        v
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generates the corpus in memory. Images are already quantized to the byte
/// grid, so in-memory pixels match what a PGM round trip would produce.
pub fn synth_faces(params: &SynthParams) -> Result<Vec<SynthSample>> {
    let template = landmark_template();
    let w = SYNTH_CANVAS;
    let h = SYNTH_CANVAS;
    let cx = (w - 1) as f64 / 2.0;
    let cy = (h - 1) as f64 / 2.0;

    let mut samples = Vec::with_capacity(params.n_ids * params.n_per_id);
    for id in 0..params.n_ids {
        let mut id_rng = stream_rng(params.seed, id as u64);
        let pattern = IdentityPattern::generate(&template, &mut id_rng);

        for index in 0..params.n_per_id {
            let stream = params.n_ids as u64 + (id * params.n_per_id + index) as u64;
            let mut img_rng = stream_rng(params.seed, stream);

            // Pose: forward map applied to landmarks; pixels are evaluated
            // analytically at the inverse-mapped coordinates, so no
            // resampling blur enters the corpus.
            let mut rot = 0.0;
            let mut scale = 1.0;
            let mut tx = 0.0;
            let mut ty = 0.0;
            let mut gain = 1.0;
            let mut ramp_a = 0.0;
            let mut ramp_b = 0.0;
            let mut noise_sigma = 0.0;
            for v in &params.variations {
                match *v {
                    Variation::PoseJitter(mag) => {
                        tx = img_rng.random_range(-mag..mag);
                        ty = img_rng.random_range(-mag..mag);
                        rot = img_rng.random_range(-0.02 * mag..0.02 * mag);
                        scale = 1.0 + img_rng.random_range(-0.015 * mag..0.015 * mag);
                    }
                    Variation::Gain(spread) => {
                        let ln_s = spread.ln();
                        gain = img_rng.random_range(-ln_s..ln_s).exp();
                    }
                    Variation::IlluminationRamp(max_slope) => {
                        ramp_a = img_rng.random_range(-max_slope..max_slope);
                        ramp_b = img_rng.random_range(-max_slope..max_slope);
                    }
                    Variation::Noise(sigma) => noise_sigma = sigma,
                }
            }

            let (sin_r, cos_r) = rot.sin_cos();
            // Forward: p' = s R (p - c) + c + t.
            let fwd = |p: Point| Point {
                x: scale * (cos_r * (p.x - cx) - sin_r * (p.y - cy)) + cx + tx,
                y: scale * (sin_r * (p.x - cx) + cos_r * (p.y - cy)) + cy + ty,
            };
            // Inverse: p = (1/s) R^T (p' - c - t) + c.
            let inv = |x: f64, y: f64| {
                let dx = x - cx - tx;
                let dy = y - cy - ty;
                (
                    (cos_r * dx + sin_r * dy) / scale + cx,
                    (-sin_r * dx + cos_r * dy) / scale + cy,
                )
            };

            let lm = template.map(fwd)?;
            let mut data = Vec::with_capacity(w * h);
            for yi in 0..h {
                for xi in 0..w {
                    let (sx, sy) = inv(xi as f64, yi as f64);
                    let mut v = pattern.eval(sx, sy);
                    v += ramp_a * (xi as f64 - cx) + ramp_b * (yi as f64 - cy);
                    v *= gain;
                    if noise_sigma > 0.0 {
                        let n: f64 = img_rng.sample(StandardNormal);
                        v += noise_sigma * n;
                    }
                    data.push(v.round().clamp(0.0, 255.0));
                }
            }
            samples.push(SynthSample {
                image: GrayImage::from_raw(w, h, data)?,
                landmarks: lm,
                subject: id,
                index,
            });
        }
    }
    Ok(samples)
}

/// Number of verification folds assigned to generated pair lists.
pub const SYNTH_FOLDS: usize = 5;

/// Writes a corpus directory: PGM images, landmark text files, and a
/// `manifest.json` with roles (first image of each identity is gallery) and
/// an exhaustive labeled pair list with round-robin fold assignment.
pub fn write_corpus(params: &SynthParams, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let samples = synth_faces(params)?;

    let mut entries = Vec::with_capacity(samples.len());
    for s in &samples {
        let stem = format!("s{:03}_i{:02}", s.subject, s.index);
        let image_name = format!("{stem}.pgm");
        let pts_name = format!("{stem}.pts");
        crate::imaging::save_pgm(&s.image, dir.join(&image_name))?;
        s.landmarks.save(dir.join(&pts_name))?;
        entries.push(ManifestEntry {
            image: image_name,
            landmarks: Some(pts_name),
            subject: format!("s{:03}", s.subject),
            role: if s.index == 0 { Role::Gallery } else { Role::Probe },
        });
    }

    let mut pairs = Vec::new();
    let mut counter = 0usize;
    for i in 0..samples.len() {
        for j in (i + 1)..samples.len() {
            pairs.push(PairEntry {
                a: i,
                b: j,
                same: samples[i].subject == samples[j].subject,
                fold: Some(counter % SYNTH_FOLDS),
            });
            counter += 1;
        }
    }

    let manifest = DatasetManifest {
        seed: Some(params.seed),
        entries,
        pairs: Some(pairs),
    };
    let path = dir.join("manifest.json");
    manifest.save(&path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::landmarks::FLIP_PERMUTATION;

    #[test]
    fn field_is_deterministic_and_in_range() {
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        let a = correlated_field(40, 30, 4.0, &mut r1).unwrap();
        let b = correlated_field(40, 30, 4.0, &mut r2).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!((a.width(), a.height()), (40, 30));
        let min = a.data().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = a.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(min, 0.0);
        assert_eq!(max, 255.0);
    }

    #[test]
    fn field_long_scale_is_smoother_than_short_scale() {
        // Mean absolute neighbor difference shrinks as correlation length grows.
        let rough = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            correlated_field(64, 64, 1.0, &mut rng).unwrap()
        };
        let smooth = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            correlated_field(64, 64, 8.0, &mut rng).unwrap()
        };
        let grad = |img: &GrayImage| {
            let mut sum = 0.0;
            for y in 0..img.height() {
                for x in 1..img.width() {
                    sum += (img.pixel(x, y) - img.pixel(x - 1, y)).abs();
                }
            }
            sum / ((img.width() - 1) * img.height()) as f64
        };
        assert!(grad(&smooth) < grad(&rough) * 0.7);
    }

    #[test]
    fn field_rejects_bad_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(correlated_field(0, 10, 4.0, &mut rng).is_err());
        assert!(correlated_field(10, 10, 0.0, &mut rng).is_err());
    }

    #[test]
    fn template_is_exactly_mirror_symmetric() {
        let t = landmark_template();
        let m = (SYNTH_CANVAS - 1) as f64;
        let mirrored = t
            .map(|p| Point { x: m - p.x, y: p.y })
            .unwrap()
            .permuted(&FLIP_PERMUTATION);
        for i in 0..LANDMARK_COUNT {
            assert_eq!(t.point(i).x, mirrored.point(i).x, "landmark {i}");
            assert_eq!(t.point(i).y, mirrored.point(i).y, "landmark {i}");
        }
    }

    #[test]
    fn template_eye_geometry() {
        let t = landmark_template();
        let (l, r) = landmarks::eye_centers(&t);
        assert_eq!((l.x, l.y), (70.0, 85.0));
        assert_eq!((r.x, r.y), (129.0, 85.0));
    }

    #[test]
    fn variation_parsing() {
        assert_eq!(Variation::parse_list("none").unwrap(), vec![]);
        assert_eq!(Variation::parse_list("").unwrap(), vec![]);
        assert_eq!(
            Variation::parse_list("noise,ramp=0.3").unwrap(),
            vec![
                Variation::Noise(Variation::DEFAULT_NOISE),
                Variation::IlluminationRamp(0.3)
            ]
        );
        assert!(Variation::parse_list("sparkle").is_err());
        assert!(Variation::parse_list("noise=-1").is_err());
        assert!(Variation::parse_list("noise=abc").is_err());
    }

    #[test]
    fn faces_are_deterministic() {
        let params = SynthParams::new(
            3,
            2,
            vec![Variation::Noise(2.0), Variation::PoseJitter(1.5)],
            11,
        )
        .unwrap();
        let a = synth_faces(&params).unwrap();
        let b = synth_faces(&params).unwrap();
        assert_eq!(a.len(), 6);
        for (s, t) in a.iter().zip(&b) {
            assert_eq!(s.image.data(), t.image.data());
            for i in 0..LANDMARK_COUNT {
                assert_eq!(s.landmarks.point(i).x, t.landmarks.point(i).x);
            }
        }
    }

    #[test]
    fn identities_differ_and_variations_perturb() {
        let base = SynthParams::new(2, 2, vec![], 3).unwrap();
        let samples = synth_faces(&base).unwrap();
        // Without variations, repeats of one identity are identical and
        // distinct identities are not.
        assert_eq!(samples[0].image.data(), samples[1].image.data());
        assert_ne!(samples[0].image.data(), samples[2].image.data());

        let noisy = SynthParams::new(2, 2, vec![Variation::Noise(2.0)], 3).unwrap();
        let noisy_samples = synth_faces(&noisy).unwrap();
        assert_ne!(noisy_samples[0].image.data(), noisy_samples[1].image.data());
    }

    #[test]
    fn pose_jitter_moves_landmarks() {
        let params = SynthParams::new(2, 2, vec![Variation::PoseJitter(2.0)], 4).unwrap();
        let samples = synth_faces(&params).unwrap();
        let a = &samples[0].landmarks;
        let b = &samples[1].landmarks;
        let moved = (0..LANDMARK_COUNT).any(|i| a.point(i).dist(b.point(i)) > 0.1);
        assert!(moved);
        for i in 0..LANDMARK_COUNT {
            let p = a.point(i);
            assert!(p.x.is_finite() && p.y.is_finite());
        }
    }

    #[test]
    fn corpus_write_is_byte_reproducible() {
        let params = SynthParams::new(2, 2, vec![Variation::Noise(1.0)], 8).unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let m1 = write_corpus(&params, d1.path()).unwrap();
        let m2 = write_corpus(&params, d2.path()).unwrap();
        assert_eq!(
            std::fs::read(&m1).unwrap(),
            std::fs::read(&m2).unwrap()
        );
        assert_eq!(
            std::fs::read(d1.path().join("s000_i01.pgm")).unwrap(),
            std::fs::read(d2.path().join("s000_i01.pgm")).unwrap()
        );

        let manifest = DatasetManifest::load(&m1).unwrap();
        assert_eq!(manifest.entries.len(), 4);
        assert_eq!(manifest.entries[0].role, Role::Gallery);
        assert_eq!(manifest.entries[1].role, Role::Probe);
        let pairs = manifest.pairs.unwrap();
        assert_eq!(pairs.len(), 6);
        assert_eq!(pairs.iter().filter(|p| p.same).count(), 2);
    }

    #[test]
    fn params_validation() {
        assert!(SynthParams::new(1, 5, vec![], 0).is_err());
        assert!(SynthParams::new(2, 0, vec![], 0).is_err());
    }
}
