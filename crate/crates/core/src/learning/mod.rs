//! Subspace models and scorers: PCA, whitened-PCA projection with cosine
//! similarity, a two-factor Gaussian identity model scored by
//! log-likelihood ratio, and linear score fusion.
//!
//! Fitting is single-threaded and deterministic; fitted models are
//! immutable, and scoring is pure.

mod fusion;
mod pca;
mod plda;

pub use fusion::{fusion_fit, fusion_score, FusionKind, FusionModel};
pub use pca::{pca_fit, pca_project, wpca_project, GramProjector, PcaModel, WPCA_EIGENVALUE_FLOOR};
pub use plda::{plda_fit, plda_llr, PldaModel, PldaScorer};

use crate::{DcpError, Result};
use nalgebra::DMatrix;

/// Cosine similarity in [-1, 1]. Zero-norm inputs have no direction.
pub fn cosine_sim(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(DcpError::Dimension(format!(
            "cosine inputs differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(DcpError::UndefinedSimilarity(
            "cosine of a zero vector".into(),
        ));
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Stack sample vectors as matrix rows, validating a rectangular shape.
pub fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(DcpError::Input("no sample rows".into()));
    }
    let d = rows[0].len();
    if d == 0 {
        return Err(DcpError::Input("zero-dimensional samples".into()));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(DcpError::Dimension(format!(
                "row {i} has length {}, expected {d}",
                r.len()
            )));
        }
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        d,
        rows.iter().flat_map(|r| r.iter().copied()),
    ))
}
