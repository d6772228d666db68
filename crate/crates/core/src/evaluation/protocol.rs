//! End-to-end experiment runner over dataset manifests.
//!
//! A protocol run loads every image and landmark file named by a manifest,
//! computes match scores with one of two pipelines, and produces an
//! [`EvalReport`]: identification metrics when the manifest assigns gallery
//! and probe roles, verification metrics when it carries a pair list, or
//! both. Every outcome names the hash of the exact configuration that
//! produced it so downstream artifacts can be traced back.
//!
//! Pipelines:
//! - `descriptor-chi2`: geometric normalization to the 128x128 frame, one
//!   code map per image, regional histograms compared with negated
//!   chi-squared distance. No training stage.
//! - `mdml-wpca`: the nine-feature multi-level representation, each feature
//!   whitened by a projector fit on the gallery (or on all images when the
//!   manifest has no roles), scores fused by averaging cosine similarity.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::descriptors::{
    chi_squared, encode_dcp, encode_lbp, encode_ltp, encode_mslbp, regional_histograms,
    SampleMode, SamplingGeometry,
};
use crate::filtering::TTParams;
use crate::imaging::{landmarks, load_pgm, warp, GrayImage, LandmarkSet, DESCRIPTOR_128};
use crate::learning::{cosine_sim, GramProjector};
use crate::model_io::{DatasetManifest, Role};
use crate::representation::{feature_from_maps, mdml_maps, FeatureId, MdDcpsConfig};
use crate::{par, DcpError, Result};

use super::{identify_from_scores, verify, EvalReport, PairList};

/// Target geometry and photometric preprocessing for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// 128x128 eye-aligned crops, photometric normalization on.
    #[serde(rename = "feret128")]
    Feret128,
    /// 180x180 multi-level frames, photometric normalization on.
    #[serde(rename = "mdml180")]
    Mdml180,
    /// 128x128 eye-aligned crops, photometric normalization off.
    #[serde(rename = "lfw-like")]
    LfwLike,
}

impl Preset {
    pub fn by_name(name: &str) -> Result<Preset> {
        match name {
            "feret128" => Ok(Preset::Feret128),
            "mdml180" => Ok(Preset::Mdml180),
            "lfw-like" => Ok(Preset::LfwLike),
            other => Err(DcpError::Config(format!(
                "unknown preset `{other}` (expected feret128, mdml180, or lfw-like)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Feret128 => "feret128",
            Preset::Mdml180 => "mdml180",
            Preset::LfwLike => "lfw-like",
        }
    }

    /// Photometric normalization parameters, `None` when the preset leaves
    /// raw intensities untouched.
    pub fn tt_params(self) -> Option<TTParams> {
        match self {
            Preset::Feret128 | Preset::Mdml180 => Some(TTParams::default()),
            Preset::LfwLike => None,
        }
    }

    /// Default sampling radii paired with the preset's working resolution.
    pub fn default_radii(self) -> (f64, f64) {
        match self {
            Preset::Feret128 | Preset::LfwLike => (4.0, 6.0),
            Preset::Mdml180 => (2.0, 3.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pipeline {
    #[serde(rename = "descriptor-chi2")]
    DescriptorChi2,
    #[serde(rename = "mdml-wpca")]
    MdmlWpca,
}

impl Pipeline {
    pub fn by_name(name: &str) -> Result<Pipeline> {
        match name {
            "descriptor-chi2" => Ok(Pipeline::DescriptorChi2),
            "mdml-wpca" => Ok(Pipeline::MdmlWpca),
            other => Err(DcpError::Config(format!(
                "unknown pipeline `{other}` (expected descriptor-chi2 or mdml-wpca)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::DescriptorChi2 => "descriptor-chi2",
            Pipeline::MdmlWpca => "mdml-wpca",
        }
    }
}

/// Which code map the `descriptor-chi2` pipeline builds per image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DescriptorKind {
    #[serde(rename = "dcp")]
    Dcp,
    #[serde(rename = "lbp")]
    Lbp,
    #[serde(rename = "mslbp")]
    MsLbp,
    #[serde(rename = "ltp")]
    Ltp,
}

impl DescriptorKind {
    pub fn by_name(name: &str) -> Result<DescriptorKind> {
        match name {
            "dcp" => Ok(DescriptorKind::Dcp),
            "lbp" => Ok(DescriptorKind::Lbp),
            "mslbp" => Ok(DescriptorKind::MsLbp),
            "ltp" => Ok(DescriptorKind::Ltp),
            other => Err(DcpError::Config(format!(
                "unknown descriptor `{other}` (expected dcp, lbp, mslbp, or ltp)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DescriptorKind::Dcp => "dcp",
            DescriptorKind::Lbp => "lbp",
            DescriptorKind::MsLbp => "mslbp",
            DescriptorKind::Ltp => "ltp",
        }
    }
}

/// Complete description of one experiment. The JSON serialization of this
/// struct (field order fixed by declaration order) is the canonical form
/// that [`ExperimentConfig::hash`] digests, so any change to any field
/// yields a different hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub pipeline: Pipeline,
    pub preset: Preset,
    /// Code map choice; only consulted by the `descriptor-chi2` pipeline.
    pub descriptor: DescriptorKind,
    /// Regional histogram grid (`grid` x `grid` regions).
    pub grid: usize,
    pub r_in: f64,
    pub r_ex: f64,
    /// Ternary-code noise band; only consulted when `descriptor` is `ltp`.
    pub ltp_threshold: f64,
    /// Upper bound on the whitened dimension; capped at one less than the
    /// training set size at fit time.
    pub wpca_dim: usize,
    /// Deepest rank reported in identification curves.
    pub k_max: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// A runnable default for the given pipeline and preset.
    pub fn for_preset(preset: Preset, pipeline: Pipeline) -> ExperimentConfig {
        let (r_in, r_ex) = preset.default_radii();
        ExperimentConfig {
            pipeline,
            preset,
            descriptor: DescriptorKind::Dcp,
            grid: 8,
            r_in,
            r_ex,
            ltp_threshold: 5.0,
            wpca_dim: 600,
            k_max: 5,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid == 0 {
            return Err(DcpError::Config("grid must be at least 1".into()));
        }
        if !(self.r_in > 0.0) || !(self.r_ex > self.r_in) {
            return Err(DcpError::Config(format!(
                "sampling radii must satisfy 0 < r_in < r_ex, got ({}, {})",
                self.r_in, self.r_ex
            )));
        }
        if !self.ltp_threshold.is_finite() || self.ltp_threshold < 0.0 {
            return Err(DcpError::Config(format!(
                "ltp_threshold must be finite and non-negative, got {}",
                self.ltp_threshold
            )));
        }
        if self.wpca_dim == 0 {
            return Err(DcpError::Config("wpca_dim must be at least 1".into()));
        }
        if self.k_max == 0 {
            return Err(DcpError::Config("k_max must be at least 1".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form. Stable across runs and
    /// processes; stamped on every protocol outcome and saved model.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        crate::model_io::sha256_hex(canonical.as_bytes())
    }
}

/// Result of one protocol run.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolOutcome {
    pub report: EvalReport,
    pub config_hash: String,
    pub n_gallery: usize,
    pub n_probes: usize,
    pub n_pairs: usize,
}

struct LoadedEntry {
    subject: String,
    image: GrayImage,
    landmarks: LandmarkSet,
}

/// Loads every image and landmark file, reporting all missing paths in one
/// error so a broken manifest is fixable in a single pass.
fn load_entries(manifest: &DatasetManifest, base_dir: &Path) -> Result<Vec<LoadedEntry>> {
    let mut missing = Vec::new();
    let mut unannotated = Vec::new();
    for entry in &manifest.entries {
        if !base_dir.join(&entry.image).is_file() {
            missing.push(entry.image.clone());
        }
        match &entry.landmarks {
            Some(name) => {
                if !base_dir.join(name).is_file() {
                    missing.push(name.clone());
                }
            }
            None => unannotated.push(entry.image.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(DcpError::Input(format!(
            "missing input files: {}",
            missing.join(", ")
        )));
    }
    if !unannotated.is_empty() {
        return Err(DcpError::Input(format!(
            "entries without landmark files: {}",
            unannotated.join(", ")
        )));
    }

    let mut loaded = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let image = load_pgm(base_dir.join(&entry.image))?;
        let lm_name = entry.landmarks.as_ref().expect("checked above");
        let lm = LandmarkSet::load(base_dir.join(lm_name))?;
        loaded.push(LoadedEntry {
            subject: entry.subject.clone(),
            image,
            landmarks: lm,
        });
    }
    Ok(loaded)
}

/// One histogram per entry: align to the 128x128 frame, normalize, encode,
/// pool regionally. Counts are returned as f64 ready for chi-squared.
fn chi2_features(entries: &[LoadedEntry], cfg: &ExperimentConfig) -> Result<Vec<Vec<f64>>> {
    let tt = cfg.preset.tt_params();
    let geometry = SamplingGeometry::new(cfg.r_in, cfg.r_ex)?;
    let results = par::map_range(entries.len(), |i| -> Result<Vec<f64>> {
        let entry = &entries[i];
        let (eye_l, eye_r) = landmarks::eye_centers(&entry.landmarks);
        let t = DESCRIPTOR_128.similarity_from(eye_l, eye_r)?;
        let mut img = warp(&entry.image, &t)?;
        if let Some(p) = &tt {
            img = crate::filtering::tt_normalize(&img, p)?;
        }
        let code_map = match cfg.descriptor {
            DescriptorKind::Dcp => encode_dcp(&img, &geometry),
            DescriptorKind::Lbp => encode_lbp(&img, cfg.r_in, SampleMode::Nearest)?,
            DescriptorKind::MsLbp => encode_mslbp(&img, cfg.r_in, cfg.r_ex, SampleMode::Nearest)?,
            DescriptorKind::Ltp => {
                encode_ltp(&img, cfg.r_in, cfg.ltp_threshold, SampleMode::Nearest)?
            }
        };
        let hist = regional_histograms(&code_map, cfg.grid)?;
        Ok(hist.counts.iter().map(|&c| c as f64).collect())
    });
    results.into_iter().collect()
}

/// Identification score matrix (probe-major) and pair scores for the
/// chi-squared pipeline. Distances are negated so higher means more similar.
fn chi2_scores(
    features: &[Vec<f64>],
    gallery_idx: &[usize],
    probe_idx: &[usize],
    pair_refs: &[(usize, usize)],
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let id_rows = par::map_range(probe_idx.len(), |pi| -> Result<Vec<f64>> {
        let p = probe_idx[pi];
        gallery_idx
            .iter()
            .map(|&g| chi_squared(&features[p], &features[g]).map(|d| -d))
            .collect()
    });
    let id_scores: Vec<Vec<f64>> = id_rows.into_iter().collect::<Result<_>>()?;
    let pair_rows = par::map_range(pair_refs.len(), |k| -> Result<f64> {
        let (a, b) = pair_refs[k];
        chi_squared(&features[a], &features[b]).map(|d| -d)
    });
    let pair_scores: Vec<f64> = pair_rows.into_iter().collect::<Result<_>>()?;
    Ok((id_scores, pair_scores))
}

/// Identification score matrix and pair scores for the multi-level
/// pipeline: per feature, whiten on the training set and score with cosine
/// similarity; fuse the nine features with equal weights. Accumulation is
/// sequential in feature order, so results do not depend on thread count.
fn mdml_scores(
    entries: &[LoadedEntry],
    gallery_idx: &[usize],
    probe_idx: &[usize],
    pair_refs: &[(usize, usize)],
    cfg: &ExperimentConfig,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let tt = cfg.preset.tt_params();
    let md_cfg = MdDcpsConfig {
        geometry: SamplingGeometry::new(cfg.r_in, cfg.r_ex)?,
        ..MdDcpsConfig::default()
    };
    let map_results = par::map_range(entries.len(), |i| {
        mdml_maps(&entries[i].image, &entries[i].landmarks, &md_cfg, tt.as_ref())
    });
    let maps: Vec<_> = map_results.into_iter().collect::<Result<_>>()?;

    // The whitening projector is fit on gallery images only, so probe data
    // never leaks into training. Manifests without role assignments (pure
    // verification sets) train on every image instead.
    let train_idx: Vec<usize> = if gallery_idx.is_empty() {
        (0..entries.len()).collect()
    } else {
        gallery_idx.to_vec()
    };
    if train_idx.len() < 2 {
        return Err(DcpError::DegenerateTraining(format!(
            "whitening needs at least 2 training images, got {}",
            train_idx.len()
        )));
    }

    let n_features = FeatureId::ALL.len() as f64;
    let mut id_scores = vec![vec![0.0f64; gallery_idx.len()]; probe_idx.len()];
    let mut pair_scores = vec![0.0f64; pair_refs.len()];
    for fid in FeatureId::ALL {
        let vec_results = par::map_range(entries.len(), |i| {
            feature_from_maps(&maps[i], fid).map(|f| f.values)
        });
        let vecs: Vec<Vec<f32>> = vec_results.into_iter().collect::<Result<_>>()?;
        let train: Vec<Vec<f32>> = train_idx.iter().map(|&i| vecs[i].clone()).collect();
        let d_out = cfg.wpca_dim.min(train.len() - 1);
        let projector = GramProjector::fit(&train, d_out)?;
        let proj_results = par::map_range(entries.len(), |i| {
            projector
                .project(&vecs[i], &train)
                .map(|v| v.as_slice().to_vec())
        });
        let projected: Vec<Vec<f64>> = proj_results.into_iter().collect::<Result<_>>()?;

        for (pi, &p) in probe_idx.iter().enumerate() {
            for (gi, &g) in gallery_idx.iter().enumerate() {
                id_scores[pi][gi] += cosine_sim(&projected[p], &projected[g])? / n_features;
            }
        }
        for (k, &(a, b)) in pair_refs.iter().enumerate() {
            pair_scores[k] += cosine_sim(&projected[a], &projected[b])? / n_features;
        }
    }
    Ok((id_scores, pair_scores))
}

/// Runs the configured pipeline over the manifest. Identification metrics
/// are produced when the manifest assigns at least one gallery and one
/// probe role; verification metrics when it carries pairs. A manifest that
/// enables neither is an input error.
pub fn run_protocol(
    manifest: &DatasetManifest,
    base_dir: &Path,
    cfg: &ExperimentConfig,
) -> Result<ProtocolOutcome> {
    cfg.validate()?;
    manifest.validate()?;

    let gallery_idx: Vec<usize> = manifest
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.role == Role::Gallery)
        .map(|(i, _)| i)
        .collect();
    let probe_idx: Vec<usize> = manifest
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.role == Role::Probe)
        .map(|(i, _)| i)
        .collect();
    let pair_refs: Vec<(usize, usize)> = manifest
        .pairs
        .as_deref()
        .unwrap_or(&[])
        .iter()
        .map(|p| (p.a, p.b))
        .collect();

    let want_identification = !gallery_idx.is_empty() && !probe_idx.is_empty();
    let want_verification = !pair_refs.is_empty();
    if !want_identification && !want_verification {
        return Err(DcpError::Input(
            "manifest enables no evaluation: needs gallery and probe roles, or a pair list".into(),
        ));
    }
    if want_identification {
        let mut seen = HashSet::new();
        for &g in &gallery_idx {
            if !seen.insert(manifest.entries[g].subject.as_str()) {
                return Err(DcpError::Input(format!(
                    "duplicate gallery subject `{}`",
                    manifest.entries[g].subject
                )));
            }
        }
    }

    let entries = load_entries(manifest, base_dir)?;

    let (id_scores, pair_scores) = match cfg.pipeline {
        Pipeline::DescriptorChi2 => {
            let features = chi2_features(&entries, cfg)?;
            chi2_scores(&features, &gallery_idx, &probe_idx, &pair_refs)?
        }
        Pipeline::MdmlWpca => mdml_scores(&entries, &gallery_idx, &probe_idx, &pair_refs, cfg)?,
    };

    let mut report = EvalReport::default();
    if want_identification {
        let gallery_subjects: Vec<String> = gallery_idx
            .iter()
            .map(|&i| entries[i].subject.clone())
            .collect();
        let probe_subjects: Vec<String> = probe_idx
            .iter()
            .map(|&i| entries[i].subject.clone())
            .collect();
        let id_report =
            identify_from_scores(&gallery_subjects, &probe_subjects, &id_scores, cfg.k_max)?;
        report.rank_k = id_report.rank_k;
        report.absent_subject_probes = id_report.absent_subject_probes;
    }
    if want_verification {
        let pairs = manifest.pairs.as_deref().expect("checked above");
        let labels: Vec<bool> = pairs.iter().map(|p| p.same).collect();
        let with_fold: Vec<usize> = pairs.iter().filter_map(|p| p.fold).collect();
        let folds = if with_fold.is_empty() {
            None
        } else if with_fold.len() == pairs.len() {
            Some(with_fold)
        } else {
            return Err(DcpError::Input(
                "either every pair carries a fold index or none do".into(),
            ));
        };
        let pair_list = PairList::new(labels, folds)?;
        let verify_report = verify(&pair_list, &pair_scores)?;
        report.roc = verify_report.roc;
        report.auc = verify_report.auc;
        report.vr_at_far = verify_report.vr_at_far;
        report.accuracy_mean = verify_report.accuracy_mean;
        report.accuracy_se = verify_report.accuracy_se;
    }

    Ok(ProtocolOutcome {
        report,
        config_hash: cfg.hash(),
        n_gallery: gallery_idx.len(),
        n_probes: probe_idx.len(),
        n_pairs: pair_refs.len(),
    })
}
