//! Direction-grouping enumeration and empirical joint-entropy scans.
//!
//! The 8 sampling directions can be split into two 4-direction subsets in
//! 35 distinct ways. For a given image and sampling geometry, each subset
//! induces an empirical distribution over the 4⁴ = 256 tuples of
//! directional codes; the summed joint Shannon entropy of the two subsets
//! measures how much information the split preserves. The dual-cross split
//! (even vs odd directions) maximizes this on natural-image-like inputs,
//! which is what motivates the encoder's channel layout.

use crate::descriptors::{dcp_codes_at, encode_dcp, SamplingGeometry, DIRECTIONS};
use crate::imaging::GrayImage;
use crate::{par, DcpError, Result};
use serde::{Deserialize, Serialize};

/// One of the 35 canonical partitions of the 8 directions into two 4-sets.
///
/// Canonical form: both subsets sorted ascending and direction 0 in
/// `subset_a`, which quotients out the subset-swap symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupingMode {
    pub canonical_id: usize,
    pub subset_a: [usize; 4],
    pub subset_b: [usize; 4],
}

impl GroupingMode {
    /// Canonicalize an arbitrary pair of complementary 4-sets.
    pub fn from_subsets(a: [usize; 4], b: [usize; 4]) -> Result<GroupingMode> {
        let mut seen = [false; DIRECTIONS];
        for &d in a.iter().chain(b.iter()) {
            if d >= DIRECTIONS || seen[d] {
                return Err(DcpError::Config(format!(
                    "subsets must partition directions 0..8, got {a:?} / {b:?}"
                )));
            }
            seen[d] = true;
        }
        let (mut a, mut b) = if a.contains(&0) { (a, b) } else { (b, a) };
        a.sort_unstable();
        b.sort_unstable();
        let id = enumerate_groupings()
            .iter()
            .position(|m| m.subset_a == a)
            .expect("every canonical subset is enumerated");
        Ok(GroupingMode {
            canonical_id: id,
            subset_a: a,
            subset_b: b,
        })
    }

    /// The even/odd split `{0,2,4,6} / {1,3,5,7}`.
    pub fn dual_cross() -> GroupingMode {
        GroupingMode::from_subsets([0, 2, 4, 6], [1, 3, 5, 7]).expect("valid partition")
    }

    pub fn is_dual_cross(&self) -> bool {
        self.subset_a == [0, 2, 4, 6]
    }
}

/// All 35 canonical grouping modes, ordered lexicographically by
/// `subset_a` and numbered by position.
pub fn enumerate_groupings() -> Vec<GroupingMode> {
    let mut out = Vec::with_capacity(35);
    // Direction 0 always joins subset_a; choose its 3 companions.
    for i in 1..DIRECTIONS {
        for j in i + 1..DIRECTIONS {
            for k in j + 1..DIRECTIONS {
                let a = [0, i, j, k];
                let mut b = [0usize; 4];
                let mut n = 0;
                for d in 1..DIRECTIONS {
                    if d != i && d != j && d != k {
                        b[n] = d;
                        n += 1;
                    }
                }
                out.push(GroupingMode {
                    canonical_id: out.len(),
                    subset_a: a,
                    subset_b: b,
                });
            }
        }
    }
    debug_assert_eq!(out.len(), 35);
    out
}

/// Largest |offset| component over both rings, in whole pixels.
fn footprint_margin(g: &SamplingGeometry) -> usize {
    let mut m = 0f64;
    for k in 0..DIRECTIONS {
        for (dx, dy) in [g.inner_offset(k), g.outer_offset(k)] {
            m = m.max(dx.abs().ceil()).max(dy.abs().ceil());
        }
    }
    m as usize
}

/// Per-pixel directional codes. Pixels whose sampling footprint crosses
/// the border are excluded: their codes reflect the replicate padding,
/// not the image statistics, and would bias entropies toward zero as the
/// radii grow. Images too small to leave an interior use every pixel.
fn directional_codes(img: &GrayImage, g: &SamplingGeometry) -> Vec<[u8; DIRECTIONS]> {
    let cm = encode_dcp(img, g);
    let m = footprint_margin(g);
    let (w, h) = (img.width(), img.height());
    let (x0, x1, y0, y1) = if w > 2 * m && h > 2 * m {
        (m, w - m, m, h - m)
    } else {
        (0, w, 0, h)
    };
    let mut out = Vec::with_capacity((x1 - x0) * (y1 - y0));
    for y in y0..y1 {
        for x in x0..x1 {
            out.push(dcp_codes_at(&cm, x, y));
        }
    }
    out
}

fn subset_entropy(codes: &[[u8; DIRECTIONS]], subset: &[usize; 4]) -> f64 {
    let mut hist = [0u32; 256];
    for c in codes {
        let idx = c[subset[0]] as usize
            + 4 * c[subset[1]] as usize
            + 16 * c[subset[2]] as usize
            + 64 * c[subset[3]] as usize;
        hist[idx] += 1;
    }
    entropy_bits(&hist, codes.len() as u64)
}

fn entropy_bits(hist: &[u32], total: u64) -> f64 {
    let n = total as f64;
    let mut acc = 0.0;
    for &c in hist {
        if c > 0 {
            let p = c as f64 / n;
            acc -= p * p.log2();
        }
    }
    acc
}

/// Empirical joint entropy (bits) of one 4-direction subset's codes over
/// the image, border-footprint pixels excluded (see `directional_codes`).
pub fn joint_entropy(img: &GrayImage, g: &SamplingGeometry, subset: &[usize; 4]) -> f64 {
    debug_assert!({
        let mut s = *subset;
        s.sort_unstable();
        s.windows(2).all(|w| w[0] < w[1]) && s[3] < DIRECTIONS
    });
    subset_entropy(&directional_codes(img, g), subset)
}

/// Mean summed joint entropy for one grouping mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeEntropy {
    pub canonical_id: usize,
    pub subset_a: [usize; 4],
    pub subset_b: [usize; 4],
    /// Mean over the corpus of `H(subset_a) + H(subset_b)`, bits.
    pub mean_bits: f64,
}

impl ModeEntropy {
    /// True for the alternating even/odd direction split.
    pub fn is_dual_cross(&self) -> bool {
        self.subset_a == [0, 2, 4, 6]
    }
}

/// Result of scanning a corpus over all 35 grouping modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub radii: (f64, f64),
    pub corpus_size: usize,
    /// Indexed by canonical id; always 35 entries.
    pub per_mode: Vec<ModeEntropy>,
}

impl EntropyReport {
    /// Modes sorted by descending mean entropy; ties keep ascending id.
    pub fn ranked(&self) -> Vec<&ModeEntropy> {
        let mut order: Vec<&ModeEntropy> = self.per_mode.iter().collect();
        order.sort_by(|x, y| {
            y.mean_bits
                .partial_cmp(&x.mean_bits)
                .expect("entropies are finite")
                .then(x.canonical_id.cmp(&y.canonical_id))
        });
        order
    }

    pub fn best(&self) -> &ModeEntropy {
        self.ranked()[0]
    }

    pub fn mode(&self, canonical_id: usize) -> &ModeEntropy {
        &self.per_mode[canonical_id]
    }
}

/// Mean summed joint entropy of every grouping mode over a corpus.
///
/// Entropies are computed per image and averaged, so each image
/// contributes equally regardless of size.
pub fn entropy_scan(corpus: &[GrayImage], g: &SamplingGeometry) -> Result<EntropyReport> {
    if corpus.is_empty() {
        return Err(DcpError::Input("entropy scan needs a nonempty corpus".into()));
    }
    let modes = enumerate_groupings();

    // Per image: one code pass, then all 70 subset entropies.
    let per_image: Vec<Vec<f64>> = par::map_slice(corpus, |img| {
        let codes = directional_codes(img, g);
        modes
            .iter()
            .map(|m| subset_entropy(&codes, &m.subset_a) + subset_entropy(&codes, &m.subset_b))
            .collect()
    });

    let n = corpus.len() as f64;
    let per_mode = modes
        .iter()
        .map(|m| {
            let sum: f64 = per_image.iter().map(|v| v[m.canonical_id]).sum();
            ModeEntropy {
                canonical_id: m.canonical_id,
                subset_a: m.subset_a,
                subset_b: m.subset_b,
                mean_bits: sum / n,
            }
        })
        .collect();
    Ok(EntropyReport {
        radii: (g.r_in(), g.r_ex()),
        corpus_size: corpus.len(),
        per_mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::correlated_field;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn enumeration_has_35_distinct_canonical_modes() {
        let modes = enumerate_groupings();
        assert_eq!(modes.len(), 35);
        for (i, m) in modes.iter().enumerate() {
            assert_eq!(m.canonical_id, i);
            assert_eq!(m.subset_a[0], 0);
            let mut all: Vec<usize> = m.subset_a.iter().chain(&m.subset_b).copied().collect();
            all.sort_unstable();
            assert_eq!(all, vec![0, 1, 2, 3, 4, 5, 6, 7]);
        }
        let ids: std::collections::BTreeSet<[usize; 4]> =
            modes.iter().map(|m| m.subset_a).collect();
        assert_eq!(ids.len(), 35);
        assert!(modes.iter().any(|m| m.is_dual_cross()));
    }

    #[test]
    fn canonicalization_ignores_subset_order() {
        let a = GroupingMode::from_subsets([1, 3, 5, 7], [0, 2, 4, 6]).unwrap();
        let b = GroupingMode::from_subsets([0, 2, 4, 6], [1, 3, 5, 7]).unwrap();
        assert_eq!(a, b);
        assert!(a.is_dual_cross());
        assert!(GroupingMode::from_subsets([0, 1, 2, 3], [3, 4, 5, 6]).is_err());
    }

    #[test]
    fn constant_corpus_has_zero_entropy_everywhere() {
        let corpus = vec![GrayImage::constant(32, 32, 7.0).unwrap(); 3];
        let g = SamplingGeometry::new(2.0, 3.0).unwrap();
        let report = entropy_scan(&corpus, &g).unwrap();
        assert_eq!(report.per_mode.len(), 35);
        for m in &report.per_mode {
            assert_eq!(m.mean_bits, 0.0);
        }
    }

    #[test]
    fn empty_corpus_is_input_error() {
        let g = SamplingGeometry::new(2.0, 3.0).unwrap();
        assert!(matches!(entropy_scan(&[], &g), Err(DcpError::Input(_))));
    }

    #[test]
    fn uniform_noise_entropy_is_near_maximal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<u8> = (0..256 * 256).map(|_| rng.random()).collect();
        let img = GrayImage::from_bytes(256, 256, &data).unwrap();
        let g = SamplingGeometry::new(4.0, 6.0).unwrap();
        let h = joint_entropy(&img, &g, &[0, 2, 4, 6]);
        // Even on iid noise one direction carries < 2 bits: the two
        // comparison bits share the inner sample (per-direction ceiling
        // H(1/6,1/3,1/3,1/6) = 1.918 bits), and the four directions share
        // the center pixel. 7.0 still certifies a far-from-degenerate code.
        assert!(h <= 8.0 + 1e-12);
        assert!(h >= 7.0, "entropy {h}");
    }

    #[test]
    fn entropy_is_invariant_to_subset_direction_order() {
        let field = correlated_field(48, 48, 4.0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let g = SamplingGeometry::new(2.0, 3.0).unwrap();
        let a = joint_entropy(&field, &g, &[0, 2, 4, 6]);
        let b = joint_entropy(&field, &g, &[4, 0, 6, 2]);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn joint_entropy_is_subadditive() {
        let field = correlated_field(48, 48, 4.0, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let g = SamplingGeometry::new(2.0, 3.0).unwrap();
        let codes_map = encode_dcp(&field, &g);
        let subset = [0usize, 1, 2, 3];
        let joint = joint_entropy(&field, &g, &subset);
        let mut marginal_sum = 0.0;
        for &d in &subset {
            let mut hist = [0u32; 4];
            for y in 0..field.height() {
                for x in 0..field.width() {
                    hist[dcp_codes_at(&codes_map, x, y)[d] as usize] += 1;
                }
            }
            marginal_sum += entropy_bits(&hist, (field.width() * field.height()) as u64);
        }
        assert!(joint <= marginal_sum + 1e-9, "{joint} vs {marginal_sum}");
    }

    #[test]
    fn dual_cross_ranks_first_on_correlated_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let corpus: Vec<GrayImage> = (0..12)
            .map(|_| correlated_field(96, 96, 4.0, &mut rng).unwrap())
            .collect();
        let g = SamplingGeometry::new(2.0, 3.0).unwrap();
        let report = entropy_scan(&corpus, &g).unwrap();
        assert!(report.best().is_dual_cross(), "best = {:?}", report.best());
        for m in &report.per_mode {
            assert!(m.mean_bits >= 0.0 && m.mean_bits <= 16.0);
        }
    }
}
