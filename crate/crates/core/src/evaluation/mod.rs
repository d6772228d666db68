//! Identification and verification metrics: rank-k/CMC over a gallery,
//! ROC/AUC/VR@FAR and k-fold thresholded accuracy over labeled pairs,
//! plus the horizontal-mirror augmentation.
//!
//! Conventions, frozen for byte-reproducible reports: higher score is
//! always better (negate distances); ranking ties break toward the lowest
//! gallery index; a pair is accepted when its score >= threshold; VR@FAR
//! reads the sweep point with the largest FAR not exceeding the target.

pub mod protocol;

use crate::imaging::{landmarks, GrayImage, LandmarkSet, Point};
use crate::{par, DcpError, Result};
use serde::{Deserialize, Serialize};

/// False-accept-rate operating points reported by [`verify`].
pub const VR_FAR_TARGETS: [f64; 3] = [0.001, 0.01, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub far: f64,
    pub vr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VrAtFar {
    pub target: f64,
    /// FAR actually achieved at the chosen operating point (<= target).
    pub far: f64,
    pub vr: f64,
}

/// Metric report. Identification runs fill the rank section, verification
/// runs the ROC section; the protocol layer may fill both.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    /// rank_k[i] = fraction of probes whose subject ranks within i+1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_k: Option<Vec<f64>>,
    /// Probes whose subject has no gallery entry; permanent misses,
    /// still counted in every rank-k denominator.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absent_subject_probes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roc: Option<Vec<RocPoint>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vr_at_far: Option<Vec<VrAtFar>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_se: Option<f64>,
}

impl EvalReport {
    /// Rank-1 identification rate, if this report has a rank section.
    pub fn rank1(&self) -> Option<f64> {
        self.rank_k.as_ref().and_then(|r| r.first().copied())
    }
}

fn validate_subjects(gallery_subjects: &[String], probe_subjects: &[String]) -> Result<()> {
    if gallery_subjects.is_empty() {
        return Err(DcpError::Input("empty gallery".into()));
    }
    if probe_subjects.is_empty() {
        return Err(DcpError::Input("empty probe set".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for s in gallery_subjects {
        if !seen.insert(s.as_str()) {
            return Err(DcpError::Input(format!(
                "gallery subject {s:?} appears more than once"
            )));
        }
    }
    Ok(())
}

/// Rank of the gallery entry `target` among `scores` (1-based), counting a
/// tie as better only when it sits at a lower index.
fn rank_of(scores: &[f64], target: usize) -> usize {
    let t = scores[target];
    let mut rank = 1;
    for (j, &s) in scores.iter().enumerate() {
        if s > t || (s == t && j < target) {
            rank += 1;
        }
    }
    rank
}

/// Identification from a precomputed similarity matrix, `scores[p][g]`
/// (higher is better). Produces the CMC curve up to
/// `min(k_max, gallery size)`.
pub fn identify_from_scores(
    gallery_subjects: &[String],
    probe_subjects: &[String],
    scores: &[Vec<f64>],
    k_max: usize,
) -> Result<EvalReport> {
    validate_subjects(gallery_subjects, probe_subjects)?;
    if k_max == 0 {
        return Err(DcpError::Config("k_max must be at least 1".into()));
    }
    if scores.len() != probe_subjects.len() {
        return Err(DcpError::Dimension(format!(
            "{} score rows for {} probes",
            scores.len(),
            probe_subjects.len()
        )));
    }
    let n_gallery = gallery_subjects.len();
    let k_len = k_max.min(n_gallery);
    let mut hits = vec![0usize; k_len];
    let mut absent = 0usize;
    for (p, row) in scores.iter().enumerate() {
        if row.len() != n_gallery {
            return Err(DcpError::Dimension(format!(
                "score row {p} has {} entries for {n_gallery} gallery items",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(DcpError::Input(format!("non-finite score in probe row {p}")));
        }
        match gallery_subjects.iter().position(|g| *g == probe_subjects[p]) {
            None => absent += 1,
            Some(g) => {
                let rank = rank_of(row, g);
                if rank <= k_len {
                    hits[rank - 1] += 1;
                }
            }
        }
    }
    let n_probes = probe_subjects.len() as f64;
    let mut rank_k = Vec::with_capacity(k_len);
    let mut cum = 0usize;
    for h in hits {
        cum += h;
        rank_k.push(cum as f64 / n_probes);
    }
    Ok(EvalReport {
        rank_k: Some(rank_k),
        absent_subject_probes: Some(absent),
        ..EvalReport::default()
    })
}

/// Identification over gallery/probe items with an arbitrary similarity
/// scorer (higher is better; negate a distance). Scoring is data-parallel
/// over probes; ranking and report assembly are sequential.
pub fn identify<T, F>(
    gallery: &[(String, T)],
    probes: &[(String, T)],
    score: F,
    k_max: usize,
) -> Result<EvalReport>
where
    T: Sync,
    F: Fn(&T, &T) -> Result<f64> + Sync,
{
    let gallery_subjects: Vec<String> = gallery.iter().map(|(s, _)| s.clone()).collect();
    let probe_subjects: Vec<String> = probes.iter().map(|(s, _)| s.clone()).collect();
    validate_subjects(&gallery_subjects, &probe_subjects)?;
    let rows: Vec<Result<Vec<f64>>> = par::map_range(probes.len(), |p| {
        gallery
            .iter()
            .map(|(_, g)| score(g, &probes[p].1))
            .collect()
    });
    let scores = rows.into_iter().collect::<Result<Vec<_>>>()?;
    identify_from_scores(&gallery_subjects, &probe_subjects, &scores, k_max)
}

/// Labeled pair list: `labels[i]` is true for a same-subject pair.
/// `folds`, when present, assigns each pair to a cross-validation fold;
/// indices must be contiguous from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PairList {
    pub labels: Vec<bool>,
    pub folds: Option<Vec<usize>>,
}

impl PairList {
    pub fn new(labels: Vec<bool>, folds: Option<Vec<usize>>) -> Result<Self> {
        let list = PairList { labels, folds };
        list.validate()?;
        Ok(list)
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.is_empty() {
            return Err(DcpError::Input("empty pair list".into()));
        }
        let same = self.labels.iter().filter(|&&l| l).count();
        if same == 0 || same == self.labels.len() {
            return Err(DcpError::DegenerateEval(
                "pair list needs both same and different labels".into(),
            ));
        }
        if let Some(folds) = &self.folds {
            if folds.len() != self.labels.len() {
                return Err(DcpError::Dimension(format!(
                    "{} fold indices for {} pairs",
                    folds.len(),
                    self.labels.len()
                )));
            }
            let max = *folds.iter().max().expect("nonempty");
            let mut present = vec![false; max + 1];
            for &f in folds {
                present[f] = true;
            }
            if present.iter().any(|p| !p) {
                return Err(DcpError::Input(
                    "fold indices must be contiguous from 0".into(),
                ));
            }
            if max == 0 {
                return Err(DcpError::DegenerateEval(
                    "cross-validation needs at least 2 folds".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Fraction of pairs classified correctly by "accept iff score >= t".
fn threshold_accuracy(scores: &[f64], labels: &[bool], idx: &[usize], t: f64) -> f64 {
    let correct = idx
        .iter()
        .filter(|&&i| (scores[i] >= t) == labels[i])
        .count();
    correct as f64 / idx.len() as f64
}

/// Best accept-threshold on the index subset: candidates are the distinct
/// subset scores plus an accept-none sentinel; ties take the smallest
/// threshold.
fn best_threshold(scores: &[f64], labels: &[bool], idx: &[usize]) -> f64 {
    let mut candidates: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    candidates.dedup();
    candidates.push(f64::INFINITY);
    let mut best_t = candidates[0];
    let mut best_acc = -1.0;
    for &t in &candidates {
        let acc = threshold_accuracy(scores, labels, idx, t);
        if acc > best_acc {
            best_acc = acc;
            best_t = t;
        }
    }
    best_t
}

/// Verification metrics for scored pairs: full ROC sweep over the distinct
/// scores, trapezoid AUC (equal to the tie-corrected pairwise comparison
/// statistic), VR at the [`VR_FAR_TARGETS`] operating points, and, when
/// folds are present, best-threshold-on-train accuracy mean +/- SE.
pub fn verify(pairs: &PairList, scores: &[f64]) -> Result<EvalReport> {
    pairs.validate()?;
    if scores.len() != pairs.labels.len() {
        return Err(DcpError::Dimension(format!(
            "{} scores for {} pairs",
            scores.len(),
            pairs.labels.len()
        )));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(DcpError::Input("non-finite pair score".into()));
    }
    let n_same = pairs.labels.iter().filter(|&&l| l).count();
    let n_diff = pairs.labels.len() - n_same;

    // Sweep thresholds descending; each distinct score admits its whole
    // tie group at once, which is what makes trapezoid AUC tie-corrected.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    let mut roc = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut auc = 0.0;
    let mut prev_far = 0.0;
    let mut prev_vr = 0.0;
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if pairs.labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let far = fp as f64 / n_diff as f64;
        let vr = tp as f64 / n_same as f64;
        auc += (far - prev_far) * (vr + prev_vr) / 2.0;
        roc.push(RocPoint { threshold: t, far, vr });
        prev_far = far;
        prev_vr = vr;
    }

    let vr_at_far = VR_FAR_TARGETS
        .iter()
        .map(|&target| {
            // Sweep order is non-decreasing in FAR and VR, so the last
            // qualifying point is the operating point with the largest
            // FAR <= target; the virtual start (0,0) always qualifies.
            let mut chosen = VrAtFar { target, far: 0.0, vr: 0.0 };
            for p in &roc {
                if p.far <= target {
                    chosen = VrAtFar { target, far: p.far, vr: p.vr };
                }
            }
            chosen
        })
        .collect();

    let (accuracy_mean, accuracy_se) = match &pairs.folds {
        None => (None, None),
        Some(folds) => {
            let n_folds = folds.iter().max().expect("nonempty") + 1;
            let mut fold_acc = Vec::with_capacity(n_folds);
            for f in 0..n_folds {
                let train: Vec<usize> = (0..scores.len()).filter(|&i| folds[i] != f).collect();
                let test: Vec<usize> = (0..scores.len()).filter(|&i| folds[i] == f).collect();
                let t = best_threshold(scores, &pairs.labels, &train);
                fold_acc.push(threshold_accuracy(scores, &pairs.labels, &test, t));
            }
            let mean = fold_acc.iter().sum::<f64>() / n_folds as f64;
            let var = fold_acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>()
                / (n_folds as f64 - 1.0);
            (Some(mean), Some(var.sqrt() / (n_folds as f64).sqrt()))
        }
    };

    Ok(EvalReport {
        roc: Some(roc),
        vr_at_far: Some(vr_at_far),
        auc: Some(auc),
        accuracy_mean,
        accuracy_se,
        ..EvalReport::default()
    })
}

/// Horizontal mirror of an image and its landmarks: pixel columns reverse,
/// landmark x maps to (width-1) - x, and left/right component indices swap
/// per the layout's flip table. An involution.
pub fn flip_augment(img: &GrayImage, lm: &LandmarkSet) -> (GrayImage, LandmarkSet) {
    let mirror_x = (img.width() - 1) as f64;
    let flipped = img.flip_horizontal();
    let mirrored = lm
        .map(|p| Point::new(mirror_x - p.x, p.y))
        .expect("mirroring finite landmarks stays finite");
    (flipped, mirrored.permuted(&landmarks::FLIP_PERMUTATION))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn subjects(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn identify_hand_ranking_oracle() {
        let gallery = subjects(&["a", "b", "c"]);
        let probes = subjects(&["b", "c", "a", "c"]);
        // Rows: probe scores against [a, b, c].
        let scores = vec![
            vec![0.1, 0.9, 0.5], // b ranks 1
            vec![0.8, 0.2, 0.7], // c ranks 2
            vec![0.3, 0.6, 0.9], // a ranks 3
            vec![0.5, 0.5, 0.5], // all tied: c loses to lower indices, rank 3
        ];
        let r = identify_from_scores(&gallery, &probes, &scores, 3).unwrap();
        let rank_k = r.rank_k.unwrap();
        assert_eq!(rank_k, vec![0.25, 0.5, 1.0]);
        assert_eq!(r.absent_subject_probes, Some(0));
    }

    #[test]
    fn identify_tie_breaks_to_lowest_gallery_index() {
        let gallery = subjects(&["a", "b"]);
        // Probe of subject a ties both entries: a is index 0, so rank 1.
        let r = identify_from_scores(&gallery, &subjects(&["a"]), &[vec![0.5, 0.5]], 2).unwrap();
        assert_eq!(r.rank_k.unwrap(), vec![1.0, 1.0]);
        // Probe of subject b ties both entries: b is index 1, so rank 2.
        let r = identify_from_scores(&gallery, &subjects(&["b"]), &[vec![0.5, 0.5]], 2).unwrap();
        assert_eq!(r.rank_k.unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn identify_flags_absent_subjects_as_permanent_misses() {
        let gallery = subjects(&["a", "b"]);
        let probes = subjects(&["a", "zz"]);
        let scores = vec![vec![1.0, 0.0], vec![1.0, 0.9]];
        let r = identify_from_scores(&gallery, &probes, &scores, 2).unwrap();
        assert_eq!(r.absent_subject_probes, Some(1));
        // The absent probe stays in the denominator at every k.
        assert_eq!(r.rank_k.unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn cmc_is_monotone_on_random_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gallery: Vec<String> = (0..20).map(|i| format!("s{i}")).collect();
        let probes: Vec<String> = (0..50).map(|i| format!("s{}", i % 20)).collect();
        let scores: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..20).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let r = identify_from_scores(&gallery, &probes, &scores, 20).unwrap();
        let rank_k = r.rank_k.unwrap();
        assert_eq!(rank_k.len(), 20);
        for w in rank_k.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!((rank_k[19] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identify_generic_matches_matrix_form() {
        let gallery: Vec<(String, Vec<f64>)> = vec![
            ("a".into(), vec![1.0, 0.0]),
            ("b".into(), vec![0.0, 1.0]),
        ];
        let probes: Vec<(String, Vec<f64>)> = vec![
            ("a".into(), vec![0.9, 0.1]),
            ("b".into(), vec![0.2, 0.8]),
        ];
        let r = identify(
            &gallery,
            &probes,
            |g, p| crate::learning::cosine_sim(g, p),
            1,
        )
        .unwrap();
        assert_eq!(r.rank_k.unwrap(), vec![1.0]);
    }

    #[test]
    fn identify_validations() {
        let gallery = subjects(&["a", "a"]);
        assert!(matches!(
            identify_from_scores(&gallery, &subjects(&["a"]), &[vec![0.0, 0.0]], 1),
            Err(DcpError::Input(_))
        ));
        let gallery = subjects(&["a"]);
        assert!(matches!(
            identify_from_scores(&gallery, &subjects(&["a"]), &[vec![0.0]], 0),
            Err(DcpError::Config(_))
        ));
        assert!(matches!(
            identify_from_scores(&gallery, &subjects(&["a"]), &[vec![f64::NAN]], 1),
            Err(DcpError::Input(_))
        ));
        assert!(matches!(
            identify_from_scores(&gallery, &subjects(&["a"]), &[vec![0.0, 1.0]], 1),
            Err(DcpError::Dimension(_))
        ));
    }

    #[test]
    fn verify_perfect_separation() {
        let pairs = PairList::new(vec![true, true, false, false], None).unwrap();
        let r = verify(&pairs, &[0.9, 0.8, 0.2, 0.1]).unwrap();
        assert_eq!(r.auc, Some(1.0));
        let vr = r.vr_at_far.unwrap();
        assert!(vr.iter().all(|p| p.vr == 1.0));
        assert_eq!(vr[0].target, 0.001);
    }

    #[test]
    fn verify_constant_scores_auc_half() {
        let pairs = PairList::new(vec![true, false, true, false], None).unwrap();
        let r = verify(&pairs, &[0.5; 4]).unwrap();
        assert!((r.auc.unwrap() - 0.5).abs() < 1e-15);
        // Single sweep point at (1, 1).
        let roc = r.roc.unwrap();
        assert_eq!(roc.len(), 1);
        assert_eq!((roc[0].far, roc[0].vr), (1.0, 1.0));
    }

    /// Tie-corrected pairwise comparison statistic, the independent oracle
    /// for trapezoid AUC.
    fn mann_whitney(scores: &[f64], labels: &[bool]) -> f64 {
        let same: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l)
            .map(|(&s, _)| s)
            .collect();
        let diff: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|(_, &l)| !l)
            .map(|(&s, _)| s)
            .collect();
        let mut total = 0.0;
        for &s in &same {
            for &d in &diff {
                total += if s > d {
                    1.0
                } else if s == d {
                    0.5
                } else {
                    0.0
                };
            }
        }
        total / (same.len() as f64 * diff.len() as f64)
    }

    #[test]
    fn auc_equals_mann_whitney_within_1e9() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let labels: Vec<bool> = (0..1000).map(|_| rng.random_range(0..3) == 0).collect();
        let scores: Vec<f64> = labels
            .iter()
            .map(|&l| {
                let base = if l { 0.3 } else { 0.0 };
                base + rng.random_range(0.0..1.0)
            })
            .collect();
        let pairs = PairList::new(labels.clone(), None).unwrap();
        let r = verify(&pairs, &scores).unwrap();
        let mw = mann_whitney(&scores, &labels);
        assert!((r.auc.unwrap() - mw).abs() < 1e-9, "{} vs {mw}", r.auc.unwrap());
    }

    #[test]
    fn auc_equals_mann_whitney_with_heavy_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let labels: Vec<bool> = (0..500).map(|_| rng.random_range(0..2) == 0).collect();
        // Quantized scores force large tie groups across both classes.
        let scores: Vec<f64> = labels
            .iter()
            .map(|&l| {
                let base = if l { 1.0 } else { 0.0 };
                ((base + rng.random_range(0.0..4.0)) as i64) as f64 * 0.25
            })
            .collect();
        let pairs = PairList::new(labels.clone(), None).unwrap();
        let r = verify(&pairs, &scores).unwrap();
        let mw = mann_whitney(&scores, &labels);
        assert!((r.auc.unwrap() - mw).abs() < 1e-9);
    }

    #[test]
    fn roc_is_monotone_and_ends_at_one_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let labels: Vec<bool> = (0..200).map(|_| rng.random_range(0..2) == 0).collect();
        let scores: Vec<f64> = (0..200).map(|_| rng.random_range(0.0..1.0)).collect();
        let pairs = PairList::new(labels, None).unwrap();
        let roc = verify(&pairs, &scores).unwrap().roc.unwrap();
        for w in roc.windows(2) {
            assert!(w[1].far >= w[0].far);
            assert!(w[1].vr >= w[0].vr);
            assert!(w[1].threshold < w[0].threshold);
        }
        let last = roc.last().unwrap();
        assert_eq!((last.far, last.vr), (1.0, 1.0));
    }

    #[test]
    fn vr_at_far_picks_largest_far_below_target() {
        // 501 diff pairs (FAR quantum 1/501 ~ 0.002): true pairs at the
        // top except one interloper scoring above everything.
        let mut labels = Vec::new();
        let mut scores = Vec::new();
        for i in 0..100 {
            labels.push(true);
            scores.push(1000.0 - i as f64);
        }
        for i in 0..500 {
            labels.push(false);
            scores.push(500.0 - i as f64);
        }
        scores[5] = 2000.0;
        labels[5] = false;
        let pairs = PairList::new(labels, None).unwrap();
        let r = verify(&pairs, &scores).unwrap();
        let vr = r.vr_at_far.unwrap();
        // Target 0.001: the smallest nonzero FAR is 1/501 > 0.001, so only
        // the virtual origin qualifies.
        assert_eq!((vr[0].far, vr[0].vr), (0.0, 0.0));
        // Target 0.01 admits the interloper; every true pair scores above
        // the rest of the negatives, so VR reaches 1.0 within budget.
        assert!(vr[1].far <= 0.01 && vr[1].far > 0.0);
        assert!((vr[1].vr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kfold_accuracy_hand_example() {
        // Training on either fold picks threshold 0.9 (its own true score,
        // ties resolving to the smallest candidate); the >= acceptance rule
        // then accepts the other fold's true pair exactly. Both test
        // accuracies are 1.0.
        let labels = vec![true, false, true, false];
        let folds = vec![0, 0, 1, 1];
        let scores = [0.9, 0.1, 0.9, 0.3];
        let pairs = PairList::new(labels, Some(folds)).unwrap();
        let r = verify(&pairs, &scores).unwrap();
        assert_eq!(r.accuracy_mean, Some(1.0));
        assert_eq!(r.accuracy_se, Some(0.0));
    }

    #[test]
    fn kfold_se_matches_hand_computation() {
        // Scores arranged so fold test accuracies differ: 1.0 and 0.5.
        let labels = vec![true, false, true, false];
        let folds = vec![0, 0, 1, 1];
        // Train on fold 1 (scores 0.4 same, 0.6 diff): best threshold over
        // candidates {0.4, 0.6, inf} is 0.4 (accuracy 0.5, ties resolve to
        // the smallest); applied to fold 0 -> accepts both -> 0.5.
        // Train on fold 0 (0.9 same, 0.1 diff): threshold 0.9 is perfect;
        // applied to fold 1 -> rejects both -> 0.5... choose values giving
        // distinct outcomes instead:
        let scores = [0.9, 0.1, 0.4, 0.6];
        let pairs = PairList::new(labels, Some(folds)).unwrap();
        let r = verify(&pairs, &scores).unwrap();
        let accs = [
            threshold_accuracy(&scores, &[true, false, true, false], &[0, 1], 0.4),
            threshold_accuracy(&scores, &[true, false, true, false], &[2, 3], 0.9),
        ];
        let mean = (accs[0] + accs[1]) / 2.0;
        let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / 1.0;
        assert_eq!(r.accuracy_mean, Some(mean));
        assert!((r.accuracy_se.unwrap() - (var / 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn verify_validations() {
        assert!(matches!(
            PairList::new(vec![], None),
            Err(DcpError::Input(_))
        ));
        assert!(matches!(
            PairList::new(vec![true, true], None),
            Err(DcpError::DegenerateEval(_))
        ));
        assert!(matches!(
            PairList::new(vec![true, false], Some(vec![0, 2])),
            Err(DcpError::Input(_))
        ));
        assert!(matches!(
            PairList::new(vec![true, false], Some(vec![0, 0])),
            Err(DcpError::DegenerateEval(_))
        ));
        let pairs = PairList::new(vec![true, false], None).unwrap();
        assert!(matches!(
            verify(&pairs, &[0.1]),
            Err(DcpError::Dimension(_))
        ));
        assert!(matches!(
            verify(&pairs, &[0.1, f64::NAN]),
            Err(DcpError::Input(_))
        ));
    }

    #[test]
    fn flip_augment_is_an_involution() {
        let (img, lm) = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let data: Vec<f64> = (0..60 * 40).map(|_| rng.random_range(0.0..=255.0)).collect();
            let img = GrayImage::from_raw(60, 40, data).unwrap();
            let pts: Vec<Point> = (0..crate::imaging::LANDMARK_COUNT)
                .map(|_| Point::new(rng.random_range(0.0..59.0), rng.random_range(0.0..39.0)))
                .collect();
            (img, LandmarkSet::new(pts).unwrap())
        };
        let (f_img, f_lm) = flip_augment(&img, &lm);
        let (ff_img, ff_lm) = flip_augment(&f_img, &f_lm);
        assert_eq!(img.data(), ff_img.data());
        for i in 0..crate::imaging::LANDMARK_COUNT {
            assert!((lm.point(i).x - ff_lm.point(i).x).abs() < 1e-9);
            assert!((lm.point(i).y - ff_lm.point(i).y).abs() < 1e-9);
        }
    }

    #[test]
    fn flip_augment_preserves_canvas_and_fixes_symmetric_faces() {
        let lm = crate::synth::landmark_template();
        let img = GrayImage::constant(crate::synth::SYNTH_CANVAS, crate::synth::SYNTH_CANVAS, 7.0)
            .unwrap();
        let (f_img, f_lm) = flip_augment(&img, &lm);
        assert_eq!((f_img.width(), f_img.height()), (img.width(), img.height()));
        // The template is mirror-symmetric about x = 99.5, so flipping
        // returns every landmark to its own slot exactly.
        for i in 0..crate::imaging::LANDMARK_COUNT {
            assert_eq!(lm.point(i).x, f_lm.point(i).x, "landmark {i} x");
            assert_eq!(lm.point(i).y, f_lm.point(i).y, "landmark {i} y");
        }
    }
}
