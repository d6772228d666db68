//! Photometric normalization and the oriented first-derivative-of-Gaussian
//! filter bank.
//!
//! The normalization chain ("TT") is gamma correction, a
//! difference-of-Gaussians bandpass, two-stage contrast equalization, a
//! saturating tanh clip, and a min-max rescale to `[0, 255]`. The FDG bank
//! turns a grayscale face into one gradient image per orientation; raw
//! responses are signed, the rescaled variant maps each response to
//! `[0, 255]` (an affine map per orientation, so sign-of-difference codes
//! computed downstream are unaffected).

use crate::imaging::GrayImage;
use crate::{par, DcpError, Result};

/// Parameters of the photometric normalization chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTParams {
    /// Gamma-correction exponent applied to intensities scaled to `[0, 1]`.
    pub gamma: f64,
    /// Inner difference-of-Gaussians sigma, px.
    pub sigma1: f64,
    /// Outer difference-of-Gaussians sigma, px.
    pub sigma2: f64,
    /// Contrast-equalization exponent.
    pub alpha: f64,
    /// Contrast-equalization clip threshold.
    pub tau: f64,
}

impl Default for TTParams {
    fn default() -> Self {
        TTParams {
            gamma: 0.2,
            sigma1: 1.4,
            sigma2: 2.0,
            alpha: 0.1,
            tau: 10.0,
        }
    }
}

impl TTParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(DcpError::Config(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.sigma1 > 0.0 && self.sigma1 < self.sigma2) {
            return Err(DcpError::Config(format!(
                "need 0 < sigma1 < sigma2, got {} and {}",
                self.sigma1, self.sigma2
            )));
        }
        if !(self.tau > 0.0) {
            return Err(DcpError::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(self.alpha > 0.0) {
            return Err(DcpError::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Gamma correction on intensities rescaled to `[0, 1]`. Strictly
/// increasing, so it preserves every within-window intensity ranking.
pub fn gamma_correct(img: &GrayImage, gamma: f64) -> GrayImage {
    img.map(|v| (v / 255.0).max(0.0).powf(gamma))
        .expect("powf of finite nonnegative input is finite")
}

fn gaussian_kernel_1d(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|u| (-((u * u) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable Gaussian blur with replicate padding and a normalized kernel
/// truncated at `ceil(3·sigma)`.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    let k = gaussian_kernel_1d(sigma);
    let r = (k.len() / 2) as i64;
    let (w, h) = (img.width(), img.height());

    // Horizontal pass.
    let mut mid = vec![0.0f64; w * h];
    par::for_each_row(&mut mid, w, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                acc += kv * img.pixel_clamped(x as i64 + i as i64 - r, y as i64);
            }
            *out = acc;
        }
    });
    let mid = GrayImage::from_raw(w, h, mid).expect("finite blur");

    // Vertical pass.
    let mut out = vec![0.0f64; w * h];
    par::for_each_row(&mut out, w, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                acc += kv * mid.pixel_clamped(x as i64, y as i64 + i as i64 - r);
            }
            *o = acc;
        }
    });
    GrayImage::from_raw(w, h, out).expect("finite blur")
}

/// Min-max rescale to `[0, 255]`; a constant input maps to all zeros.
pub fn rescale_minmax(img: &GrayImage) -> GrayImage {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in img.data() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = hi - lo;
    if span <= 0.0 {
        return GrayImage::constant(img.width(), img.height(), 0.0).expect("nonzero dims");
    }
    img.map(|v| (v - lo) / span * 255.0).expect("finite rescale")
}

/// Photometric normalization: gamma correction, difference of Gaussians,
/// two-stage contrast equalization, tanh clip, rescale to `[0, 255]`.
pub fn tt_normalize(img: &GrayImage, p: &TTParams) -> Result<GrayImage> {
    p.validate()?;

    let g = gamma_correct(img, p.gamma);
    let narrow = gaussian_blur(&g, p.sigma1);
    let wide = gaussian_blur(&g, p.sigma2);
    let mut dog: Vec<f64> = narrow
        .data()
        .iter()
        .zip(wide.data())
        .map(|(a, b)| a - b)
        .collect();

    // Stage 1: divide by the alpha-power mean of magnitudes.
    let n = dog.len() as f64;
    let m1: f64 = dog.iter().map(|v| v.abs().powf(p.alpha)).sum::<f64>() / n;
    let d1 = m1.powf(1.0 / p.alpha);
    if d1 > 0.0 {
        for v in &mut dog {
            *v /= d1;
        }
    }

    // Stage 2: same, with magnitudes clipped at tau so outliers cannot
    // dominate the normalizer.
    let m2: f64 = dog
        .iter()
        .map(|v| v.abs().min(p.tau).powf(p.alpha))
        .sum::<f64>()
        / n;
    let d2 = m2.powf(1.0 / p.alpha);
    if d2 > 0.0 {
        for v in &mut dog {
            *v /= d2;
        }
    }

    // Saturating clip to (-tau, tau), then map onto [0, 255].
    for v in &mut dog {
        *v = p.tau * (*v / p.tau).tanh();
    }
    let clipped = GrayImage::from_raw(img.width(), img.height(), dog)?;
    Ok(rescale_minmax(&clipped))
}

/// Square odd-sided convolution kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    radius: usize,
    /// Row-major, side `2·radius + 1`; index `(v + r)·side + (u + r)` holds
    /// the weight at offset `(u, v)`.
    data: Vec<f64>,
}

impl Kernel {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    /// Weight at offset `(u, v)`, each in `[-radius, radius]`.
    pub fn at(&self, u: i64, v: i64) -> f64 {
        let r = self.radius as i64;
        debug_assert!(u.abs() <= r && v.abs() <= r);
        self.data[((v + r) as usize) * self.side() + (u + r) as usize]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// Oriented first-derivative-of-Gaussian kernel: the directional derivative
/// of `G(x, y) = exp(-(x² + y²)/σ²)` along `(cosθ, sinθ)`, sampled on the
/// integer grid and mean-subtracted so the entries sum to exactly zero.
pub fn fdg_kernel(theta: f64, sigma: f64, radius: usize) -> Kernel {
    let r = radius as i64;
    let side = 2 * radius + 1;
    let (ct, st) = (theta.cos(), theta.sin());
    let inv = 1.0 / (sigma * sigma);
    let mut data = Vec::with_capacity(side * side);
    for v in -r..=r {
        for u in -r..=r {
            let g = (-((u * u + v * v) as f64) * inv).exp();
            // dG/dx = -2x/sigma^2 * G, dG/dy likewise.
            let gx = -2.0 * u as f64 * inv * g;
            let gy = -2.0 * v as f64 * inv * g;
            data.push(ct * gx + st * gy);
        }
    }
    let mean = data.iter().sum::<f64>() / data.len() as f64;
    for d in &mut data {
        *d -= mean;
    }
    Kernel { radius, data }
}

/// Bank of oriented gradient kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct FDGBank {
    pub orientations: Vec<f64>,
    pub sigma: f64,
    pub kernel_radius: usize,
}

impl Default for FDGBank {
    fn default() -> Self {
        use std::f64::consts::PI;
        FDGBank::new(vec![0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0], 1.0)
            .expect("default parameters are valid")
    }
}

impl FDGBank {
    /// Bank with kernel radius `ceil(3·sigma)`.
    pub fn new(orientations: Vec<f64>, sigma: f64) -> Result<Self> {
        if orientations.is_empty() {
            return Err(DcpError::Config("need at least one orientation".into()));
        }
        if !(sigma > 0.0) {
            return Err(DcpError::Config(format!("sigma must be > 0, got {sigma}")));
        }
        Ok(FDGBank {
            orientations,
            sigma,
            kernel_radius: (3.0 * sigma).ceil() as usize,
        })
    }

    pub fn kernels(&self) -> Vec<Kernel> {
        self.orientations
            .iter()
            .map(|&t| fdg_kernel(t, self.sigma, self.kernel_radius))
            .collect()
    }
}

/// True 2-D convolution (kernel flipped) with replicate padding.
pub fn convolve(img: &GrayImage, kernel: &Kernel) -> GrayImage {
    let r = kernel.radius() as i64;
    let (w, h) = (img.width(), img.height());
    let mut out = vec![0.0f64; w * h];
    par::for_each_row(&mut out, w, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for v in -r..=r {
                for u in -r..=r {
                    acc += kernel.at(u, v) * img.pixel_clamped(x as i64 - u, y as i64 - v);
                }
            }
            *o = acc;
        }
    });
    GrayImage::from_raw(w, h, out).expect("finite convolution")
}

/// Raw signed gradient responses, one image per bank orientation.
pub fn fdg_responses(img: &GrayImage, bank: &FDGBank) -> Vec<GrayImage> {
    let kernels = bank.kernels();
    par::map_slice(&kernels, |k| convolve(img, k))
}

/// Gradient responses rescaled to `[0, 255]` per orientation, ready for
/// descriptor encoding.
pub fn fdg_filter(img: &GrayImage, bank: &FDGBank) -> Vec<GrayImage> {
    fdg_responses(img, bank)
        .iter()
        .map(rescale_minmax)
        .collect()
}
