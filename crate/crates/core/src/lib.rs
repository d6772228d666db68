//! Dual-Cross Patterns (DCP) face descriptors and the multi-directional
//! multi-level feature stack built on top of them.
//!
//! The crate is organized around the processing pipeline:
//!
//! * [`imaging`] — grayscale rasters, PGM I/O, landmarks, and the two
//!   landmark-driven geometric normalizations (similarity and affine).
//! * [`filtering`] — photometric normalization (TT) and the directional
//!   first-derivative-of-Gaussian filter bank (FDG).
//! * [`descriptors`] — the DCP/DCP-1/DCP-2 encoders, LBP/MsLBP/LTP
//!   baselines, code maps, and regional histogram features.
//! * [`entropy`] — direction-grouping enumeration and joint Shannon
//!   entropy scans over image corpora.
//! * [`representation`] — the nine-feature multi-level face representation
//!   (H1–H3, C1–C6) and multi-directional DCP blocks.
//! * [`learning`] — PCA/WPCA, PLDA with log-likelihood-ratio scoring, and
//!   score fusion.
//! * [`evaluation`] — identification/verification protocols, CMC/ROC
//!   metrics, and experiment orchestration over dataset manifests.
//! * [`synth`] — deterministic synthetic corpora for desk-scale
//!   experiments.
//!
//! With the default `parallel` feature the per-image and per-pair inner
//! loops run on the rayon thread pool; results are bit-identical at any
//! thread count because every parallel stage is an ordered map followed by
//! a sequential reduction. Disabling the feature compiles the same API
//! with sequential loops.

pub mod descriptors;
pub mod entropy;
mod error;
pub mod evaluation;
pub mod filtering;
pub mod imaging;
pub mod learning;
pub mod model_io;
mod par;
pub mod representation;
pub mod synth;

pub use error::{DcpError, Result};
