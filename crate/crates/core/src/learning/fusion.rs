//! Score-level fusion: combine k per-feature similarity scores into one.
//!
//! `Average` weights every input equally with zero bias. `Linear` trains
//! a hinge-loss separator with an L2 penalty by deterministic batch
//! subgradient descent, so refits are bit-for-bit reproducible.

use crate::{DcpError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionKind {
    Average,
    Linear,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FusionModel {
    pub kind: FusionKind,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl FusionModel {
    pub fn input_dim(&self) -> usize {
        self.weights.len()
    }
}

const LINEAR_EPOCHS: usize = 2000;

/// Fit a fusion rule on k-dimensional score vectors with match/non-match
/// labels. `c` is the inverse regularization strength for `Linear`
/// (larger c fits the training scores harder); it is ignored by `Average`.
pub fn fusion_fit(
    scores: &[Vec<f64>],
    labels: &[bool],
    kind: FusionKind,
    c: f64,
) -> Result<FusionModel> {
    if scores.is_empty() {
        return Err(DcpError::Input("no training scores".into()));
    }
    if scores.len() != labels.len() {
        return Err(DcpError::Dimension(format!(
            "{} score vectors but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let k = scores[0].len();
    if k == 0 {
        return Err(DcpError::Dimension("empty score vectors".into()));
    }
    for (i, s) in scores.iter().enumerate() {
        if s.len() != k {
            return Err(DcpError::Dimension(format!(
                "score vector {i} has length {}, expected {k}",
                s.len()
            )));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(DcpError::Input(format!("non-finite score in vector {i}")));
        }
    }

    match kind {
        FusionKind::Average => Ok(FusionModel {
            kind,
            weights: vec![1.0 / k as f64; k],
            bias: 0.0,
        }),
        FusionKind::Linear => {
            if !(c > 0.0) || !c.is_finite() {
                return Err(DcpError::Config(format!(
                    "regularization parameter must be positive and finite, got {c}"
                )));
            }
            let pos = labels.iter().filter(|&&l| l).count();
            if pos == 0 || pos == labels.len() {
                return Err(DcpError::DegenerateTraining(
                    "linear fusion needs both match and non-match examples".into(),
                ));
            }
            Ok(fit_linear(scores, labels, k, c))
        }
    }
}

/// Batch subgradient descent on the regularized hinge objective
/// `lambda/2 ||w||^2 + (1/n) sum max(0, 1 - y (w.s + b))`,
/// lambda = 1 / (c n), step 1/(lambda t): deterministic from zero init.
fn fit_linear(scores: &[Vec<f64>], labels: &[bool], k: usize, c: f64) -> FusionModel {
    let n = scores.len();
    let lambda = 1.0 / (c * n as f64);
    let mut w = vec![0.0f64; k];
    let mut b = 0.0f64;

    for t in 1..=LINEAR_EPOCHS {
        let eta = 1.0 / (lambda * t as f64);
        let mut grad_w = vec![0.0f64; k];
        let mut grad_b = 0.0f64;
        for (s, &l) in scores.iter().zip(labels) {
            let y = if l { 1.0 } else { -1.0 };
            let margin = y * (dot(&w, s) + b);
            if margin < 1.0 {
                for (gj, &sj) in grad_w.iter_mut().zip(s) {
                    *gj += y * sj;
                }
                grad_b += y;
            }
        }
        let shrink = 1.0 - eta * lambda;
        for (wj, gj) in w.iter_mut().zip(&grad_w) {
            *wj = shrink * *wj + eta * gj / n as f64;
        }
        b += eta * grad_b / n as f64;
    }

    FusionModel {
        kind: FusionKind::Linear,
        weights: w,
        bias: b,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fused score `w . s + b`.
pub fn fusion_score(m: &FusionModel, scores: &[f64]) -> Result<f64> {
    if scores.len() != m.weights.len() {
        return Err(DcpError::Dimension(format!(
            "{} scores for a {}-input fusion model",
            scores.len(),
            m.weights.len()
        )));
    }
    Ok(dot(&m.weights, scores) + m.bias)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_is_the_arithmetic_mean() {
        let m = fusion_fit(
            &[vec![0.0, 0.0]],
            &[true],
            FusionKind::Average,
            1.0,
        )
        .unwrap();
        let fused = fusion_score(&m, &[0.2, 0.4]).unwrap();
        assert!((fused - 0.3).abs() < 1e-15);
    }

    #[test]
    fn average_of_one_input_is_identity() {
        let m = fusion_fit(&[vec![0.0]], &[true], FusionKind::Average, 1.0).unwrap();
        for &s in &[-2.5, 0.0, 0.7, 41.0] {
            assert_eq!(fusion_score(&m, &[s]).unwrap(), s);
        }
    }

    #[test]
    fn linear_separates_separable_scores_perfectly() {
        // Matches score high on both features, non-matches low.
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let t = i as f64 / 19.0;
            scores.push(vec![0.6 + 0.3 * t, 0.5 + 0.4 * (1.0 - t)]);
            labels.push(true);
            scores.push(vec![0.1 + 0.2 * t, 0.2 + 0.15 * t]);
            labels.push(false);
        }
        let m = fusion_fit(&scores, &labels, FusionKind::Linear, 10.0).unwrap();
        for (s, &l) in scores.iter().zip(&labels) {
            let fused = fusion_score(&m, s).unwrap();
            assert_eq!(fused > 0.0, l, "score {fused} mislabels {s:?}");
        }
    }

    #[test]
    fn linear_refit_is_deterministic() {
        let scores = vec![
            vec![0.9, 0.1],
            vec![0.2, 0.8],
            vec![0.1, 0.05],
            vec![0.6, 0.7],
        ];
        let labels = vec![true, true, false, true];
        let a = fusion_fit(&scores, &labels, FusionKind::Linear, 2.0).unwrap();
        let b = fusion_fit(&scores, &labels, FusionKind::Linear, 2.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_class_linear_training_is_degenerate() {
        let scores = vec![vec![0.5], vec![0.6]];
        assert!(matches!(
            fusion_fit(&scores, &[true, true], FusionKind::Linear, 1.0),
            Err(DcpError::DegenerateTraining(_))
        ));
        assert!(matches!(
            fusion_fit(&scores, &[false, false], FusionKind::Linear, 1.0),
            Err(DcpError::DegenerateTraining(_))
        ));
    }

    #[test]
    fn argmax_over_candidates_survives_common_positive_scaling() {
        // Scaling every input by the same positive factor scales the
        // average fusion output, preserving candidate ranking.
        let m = fusion_fit(&[vec![0.0; 3]], &[true], FusionKind::Average, 1.0).unwrap();
        let candidates = [
            vec![0.4, 0.1, 0.3],
            vec![0.2, 0.5, 0.25],
            vec![0.35, 0.3, 0.3],
        ];
        let rank = |scale: f64| -> usize {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (i, c) in candidates.iter().enumerate() {
                let scaled: Vec<f64> = c.iter().map(|v| v * scale).collect();
                let s = fusion_score(&m, &scaled).unwrap();
                if s > best_score {
                    best_score = s;
                    best = i;
                }
            }
            best
        };
        let base = rank(1.0);
        for &scale in &[0.01, 0.5, 3.0, 1000.0] {
            assert_eq!(rank(scale), base);
        }
    }

    #[test]
    fn validations() {
        assert!(matches!(
            fusion_fit(&[], &[], FusionKind::Average, 1.0),
            Err(DcpError::Input(_))
        ));
        assert!(matches!(
            fusion_fit(&[vec![0.1], vec![0.2]], &[true], FusionKind::Average, 1.0),
            Err(DcpError::Dimension(_))
        ));
        assert!(matches!(
            fusion_fit(&[vec![0.1], vec![0.2, 0.3]], &[true, false], FusionKind::Average, 1.0),
            Err(DcpError::Dimension(_))
        ));
        assert!(matches!(
            fusion_fit(
                &[vec![0.1], vec![0.2]],
                &[true, false],
                FusionKind::Linear,
                0.0
            ),
            Err(DcpError::Config(_))
        ));
        let m = fusion_fit(&[vec![0.0; 2]], &[true], FusionKind::Average, 1.0).unwrap();
        assert!(matches!(
            fusion_score(&m, &[0.1]),
            Err(DcpError::Dimension(_))
        ));
    }
}
