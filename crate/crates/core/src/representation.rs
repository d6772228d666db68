//! Multi-level face representation: two holistic features computed on a
//! similarity-normalized frame, plus seven component features built from
//! landmark-centered patches on an affine-normalized frame.
//!
//! Every feature concatenates per-region directional code histograms:
//! each region contributes, per filter orientation, a 2-channel 512-bin
//! count block. Output vectors are square-root compressed.

use crate::descriptors::{cell_bounds, encode_dcp, CodeMap, SamplingGeometry, CODE_CARDINALITY};
use crate::filtering::{fdg_filter, tt_normalize, FDGBank, TTParams};
use crate::imaging::{landmarks, warp, GrayImage, LandmarkSet, MDML_180};
use crate::{DcpError, Result};
use serde::{Deserialize, Serialize};

/// Axis-aligned pixel rectangle: `x, y` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Rect { x, y, w, h }
    }
}

/// Holistic crop for the full-face feature on the similarity frame.
pub const H1_CROP: Rect = Rect::new(27, 33, 110, 122);
/// Holistic crop excluding the face contour, also on the similarity frame.
pub const H2_CROP: Rect = Rect::new(41, 36, 82, 105);
/// Grid for holistic crops.
pub const HOLISTIC_GRID: usize = 9;
/// Side of a landmark-centered patch, px.
pub const PATCH_SIZE: usize = 40;
/// Grid for landmark-centered patches.
pub const PATCH_GRID: usize = 4;

/// Parameters shared by all nine features.
#[derive(Debug, Clone)]
pub struct MdDcpsConfig {
    pub bank: FDGBank,
    pub geometry: SamplingGeometry,
    /// Also encode the unfiltered frame and append it as an extra
    /// channel set after the orientations.
    pub include_unfiltered: bool,
}

impl Default for MdDcpsConfig {
    fn default() -> Self {
        MdDcpsConfig {
            bank: FDGBank::default(),
            geometry: SamplingGeometry::new(2.0, 3.0).expect("valid default radii"),
            include_unfiltered: false,
        }
    }
}

/// The nine features, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureId {
    H1,
    H2,
    H3,
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
}

impl FeatureId {
    pub const ALL: [FeatureId; 9] = [
        FeatureId::H1,
        FeatureId::H2,
        FeatureId::H3,
        FeatureId::C1,
        FeatureId::C2,
        FeatureId::C3,
        FeatureId::C4,
        FeatureId::C5,
        FeatureId::C6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureId::H1 => "H1",
            FeatureId::H2 => "H2",
            FeatureId::H3 => "H3",
            FeatureId::C1 => "C1",
            FeatureId::C2 => "C2",
            FeatureId::C3 => "C3",
            FeatureId::C4 => "C4",
            FeatureId::C5 => "C5",
            FeatureId::C6 => "C6",
        }
    }

    pub fn by_name(name: &str) -> Result<FeatureId> {
        FeatureId::ALL
            .iter()
            .copied()
            .find(|id| id.name() == name)
            .ok_or_else(|| DcpError::Config(format!("unknown feature `{name}`")))
    }
}

/// Landmark subset of the sparse whole-face feature: a 21-point spread
/// covering brows, eyes, nose, and mouth. Closed under the horizontal
/// mirror permutation.
pub const H3_POINTS: [usize; 21] = [
    0, 2, 4, 5, 7, 9, 10, 13, 14, 16, 18, 19, 20, 22, 25, 27, 28, 31, 34, 37, 40,
];

/// A named landmark subset defining one component feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub name: String,
    pub indices: Vec<usize>,
}

impl ComponentSpec {
    pub fn new(name: impl Into<String>, indices: Vec<usize>) -> Result<Self> {
        let name = name.into();
        if indices.is_empty() {
            return Err(DcpError::Config(format!("component `{name}` has no landmarks")));
        }
        let mut seen = [false; crate::imaging::LANDMARK_COUNT];
        for &i in &indices {
            if i >= crate::imaging::LANDMARK_COUNT {
                return Err(DcpError::Config(format!(
                    "component `{name}` references landmark {i}, past the layout"
                )));
            }
            if seen[i] {
                return Err(DcpError::Config(format!(
                    "component `{name}` repeats landmark {i}"
                )));
            }
            seen[i] = true;
        }
        Ok(ComponentSpec { name, indices })
    }
}

/// Landmark subset for one feature id (holistic ids have none).
pub fn component_spec(id: FeatureId) -> Option<ComponentSpec> {
    let (name, indices): (&str, Vec<usize>) = match id {
        FeatureId::H1 | FeatureId::H2 => return None,
        FeatureId::H3 => ("H3", H3_POINTS.to_vec()),
        FeatureId::C1 => ("C1", (0..10).collect()),
        FeatureId::C2 => ("C2", (19..31).collect()),
        FeatureId::C3 => ("C3", (0..5).chain(19..25).collect()),
        FeatureId::C4 => ("C4", (5..10).chain(25..31).collect()),
        FeatureId::C5 => ("C5", (10..19).collect()),
        FeatureId::C6 => ("C6", (31..49).collect()),
    };
    Some(ComponentSpec::new(name, indices).expect("standard specs are valid"))
}

/// Provenance of one 512-bin block of a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockInfo {
    /// Filter orientation index; `None` for the unfiltered channel set.
    pub orientation: Option<usize>,
    /// Region index within a holistic grid or a patch grid.
    pub region: usize,
    /// Landmark index for patch features.
    pub landmark: Option<usize>,
}

/// A named feature: square-rooted histogram counts plus per-block provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub name: String,
    pub values: Vec<f32>,
    /// One entry per 512-value block.
    pub layout: Vec<BlockInfo>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Directional code maps of one frame: one 2-channel map per orientation,
/// plus optionally one for the unfiltered frame.
pub struct OrientationMaps {
    maps: Vec<(Option<usize>, CodeMap)>,
    width: usize,
    height: usize,
}

/// Filter the frame with the bank and encode every response.
pub fn orientation_code_maps(img: &GrayImage, cfg: &MdDcpsConfig) -> OrientationMaps {
    let responses = fdg_filter(img, &cfg.bank);
    let mut maps: Vec<(Option<usize>, CodeMap)> = responses
        .iter()
        .enumerate()
        .map(|(k, r)| (Some(k), encode_dcp(r, &cfg.geometry)))
        .collect();
    if cfg.include_unfiltered {
        maps.push((None, encode_dcp(img, &cfg.geometry)));
    }
    OrientationMaps {
        maps,
        width: img.width(),
        height: img.height(),
    }
}

impl OrientationMaps {
    /// Values contributed by one region: orientations x 2 channels x 256.
    pub fn block_len(&self) -> usize {
        self.maps.len() * 2 * CODE_CARDINALITY
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Accumulate one window's counts, clamping coordinates to the frame
    /// (replicate padding at the code level for overhanging patches).
    fn accumulate_window(&self, x0: i64, y0: i64, w: usize, h: usize, out: &mut [u32]) {
        debug_assert_eq!(out.len(), self.block_len());
        let xmax = (self.width - 1) as i64;
        let ymax = (self.height - 1) as i64;
        for (mi, (_, cm)) in self.maps.iter().enumerate() {
            for ch in 0..2 {
                let base = (mi * 2 + ch) * CODE_CARDINALITY;
                let hist = &mut out[base..base + CODE_CARDINALITY];
                for dy in 0..h as i64 {
                    let sy = (y0 + dy).clamp(0, ymax) as usize;
                    for dx in 0..w as i64 {
                        let sx = (x0 + dx).clamp(0, xmax) as usize;
                        hist[cm.code(ch, sx, sy) as usize] += 1;
                    }
                }
            }
        }
    }

    fn check_rect(&self, r: Rect) -> Result<()> {
        if r.w == 0 || r.h == 0 || r.x + r.w > self.width || r.y + r.h > self.height {
            return Err(DcpError::Dimension(format!(
                "region {}x{} at ({}, {}) does not fit a {}x{} frame",
                r.w, r.h, r.x, r.y, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Raw counts of one in-bounds region, orientation-major.
    pub fn region_block(&self, r: Rect) -> Result<Vec<u32>> {
        self.check_rect(r)?;
        let mut out = vec![0u32; self.block_len()];
        self.accumulate_window(r.x as i64, r.y as i64, r.w, r.h, &mut out);
        Ok(out)
    }
}

/// Raw count block of one region: per orientation, the 2-channel 512-bin
/// histogram, concatenated in orientation order.
///
/// Filters the whole frame before histogramming, so border regions see the
/// same responses they would inside a full-feature build. Recomputes the
/// filter bank per call; batch extraction should go through
/// [`orientation_code_maps`] and [`OrientationMaps::region_block`].
pub fn md_dcps_region(img: &GrayImage, cfg: &MdDcpsConfig, region: Rect) -> Result<Vec<u32>> {
    orientation_code_maps(img, cfg).region_block(region)
}

fn push_block(values: &mut Vec<f32>, counts: &[u32]) {
    values.extend(counts.iter().map(|&c| (c as f32).sqrt()));
}

fn holistic_from_maps(
    maps: &OrientationMaps,
    crop: Rect,
    grid: usize,
    name: &str,
) -> Result<FeatureVector> {
    maps.check_rect(crop)?;
    if grid < 1 || grid > crop.w.min(crop.h) {
        return Err(DcpError::Config(format!(
            "grid {grid} out of range for a {}x{} crop",
            crop.w, crop.h
        )));
    }
    let xs = cell_bounds(crop.w, grid);
    let ys = cell_bounds(crop.h, grid);
    let n_maps = maps.maps.len();
    let mut values = Vec::with_capacity(grid * grid * maps.block_len());
    let mut layout = Vec::with_capacity(grid * grid * n_maps);
    let mut block = vec![0u32; maps.block_len()];
    for (ry, &(gy0, gy1)) in ys.iter().enumerate() {
        for (rx, &(gx0, gx1)) in xs.iter().enumerate() {
            block.fill(0);
            maps.accumulate_window(
                (crop.x + gx0) as i64,
                (crop.y + gy0) as i64,
                gx1 - gx0,
                gy1 - gy0,
                &mut block,
            );
            push_block(&mut values, &block);
            let region = ry * grid + rx;
            for (orientation, _) in &maps.maps {
                layout.push(BlockInfo {
                    orientation: *orientation,
                    region,
                    landmark: None,
                });
            }
        }
    }
    Ok(FeatureVector {
        name: name.to_string(),
        values,
        layout,
    })
}

fn landmark_from_maps(
    maps: &OrientationMaps,
    lm: &LandmarkSet,
    spec: &ComponentSpec,
) -> Result<FeatureVector> {
    let half = (PATCH_SIZE / 2) as i64;
    let cell = PATCH_SIZE / PATCH_GRID;
    let n_maps = maps.maps.len();
    let blocks = spec.indices.len() * PATCH_GRID * PATCH_GRID;
    let mut values = Vec::with_capacity(blocks * maps.block_len());
    let mut layout = Vec::with_capacity(blocks * n_maps);
    let mut block = vec![0u32; maps.block_len()];
    for &li in &spec.indices {
        let p = lm.point(li);
        let x0 = p.x.round() as i64 - half;
        let y0 = p.y.round() as i64 - half;
        for gy in 0..PATCH_GRID {
            for gx in 0..PATCH_GRID {
                block.fill(0);
                maps.accumulate_window(
                    x0 + (gx * cell) as i64,
                    y0 + (gy * cell) as i64,
                    cell,
                    cell,
                    &mut block,
                );
                push_block(&mut values, &block);
                let region = gy * PATCH_GRID + gx;
                for (orientation, _) in &maps.maps {
                    layout.push(BlockInfo {
                        orientation: *orientation,
                        region,
                        landmark: Some(li),
                    });
                }
            }
        }
    }
    Ok(FeatureVector {
        name: spec.name.clone(),
        values,
        layout,
    })
}

/// Gridded histogram feature over a crop of an already-normalized frame.
pub fn build_holistic(
    img: &GrayImage,
    cfg: &MdDcpsConfig,
    crop: Rect,
    grid: usize,
    name: &str,
) -> Result<FeatureVector> {
    holistic_from_maps(&orientation_code_maps(img, cfg), crop, grid, name)
}

/// Patch-grid histogram feature around each landmark of `spec`, on an
/// already-normalized frame with frame-space landmarks.
pub fn build_landmark_feature(
    img: &GrayImage,
    lm: &LandmarkSet,
    cfg: &MdDcpsConfig,
    spec: &ComponentSpec,
) -> Result<FeatureVector> {
    landmark_from_maps(&orientation_code_maps(img, cfg), lm, spec)
}

/// Code maps for both normalized frames of one face, ready for any of the
/// nine features. Building these once and extracting features on demand
/// avoids refiltering per feature.
pub struct MdmlMaps {
    pub sim: OrientationMaps,
    pub aff: OrientationMaps,
    pub landmarks_aff: LandmarkSet,
}

/// Normalize geometry (similarity and affine frames), optionally normalize
/// photometry, filter, and encode.
pub fn mdml_maps(
    img_raw: &GrayImage,
    lm_raw: &LandmarkSet,
    cfg: &MdDcpsConfig,
    tt: Option<&TTParams>,
) -> Result<MdmlMaps> {
    let (eye_left, eye_right) = landmarks::eye_centers(lm_raw);
    let mouth = landmarks::mouth_center(lm_raw);
    let sim_t = MDML_180.similarity_from(eye_left, eye_right)?;
    let aff_t = MDML_180.affine_from(eye_left, eye_right, mouth)?;

    let mut img_sim = warp(img_raw, &sim_t)?;
    let mut img_aff = warp(img_raw, &aff_t)?;
    if let Some(p) = tt {
        img_sim = tt_normalize(&img_sim, p)?;
        img_aff = tt_normalize(&img_aff, p)?;
    }
    let landmarks_aff = aff_t.apply_landmarks(lm_raw);
    Ok(MdmlMaps {
        sim: orientation_code_maps(&img_sim, cfg),
        aff: orientation_code_maps(&img_aff, cfg),
        landmarks_aff,
    })
}

/// Extract one feature from prepared maps.
pub fn feature_from_maps(maps: &MdmlMaps, id: FeatureId) -> Result<FeatureVector> {
    match id {
        FeatureId::H1 => holistic_from_maps(&maps.sim, H1_CROP, HOLISTIC_GRID, "H1"),
        FeatureId::H2 => holistic_from_maps(&maps.sim, H2_CROP, HOLISTIC_GRID, "H2"),
        _ => {
            let spec = component_spec(id).expect("component ids have specs");
            landmark_from_maps(&maps.aff, &maps.landmarks_aff, &spec)
        }
    }
}

/// Full nine-feature build for one face image with raw-frame landmarks.
/// `tt` applies photometric normalization to both frames before filtering;
/// pass `None` for corpora that are already photometrically stable.
pub fn build_mdml(
    img_raw: &GrayImage,
    lm_raw: &LandmarkSet,
    cfg: &MdDcpsConfig,
    tt: Option<&TTParams>,
) -> Result<Vec<FeatureVector>> {
    let maps = mdml_maps(img_raw, lm_raw, cfg, tt)?;
    FeatureId::ALL
        .iter()
        .map(|&id| feature_from_maps(&maps, id))
        .collect()
}
