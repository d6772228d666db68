//! File formats: dataset manifests, little-endian binary blocks, feature
//! containers, and trained-model serialization.
//!
//! Large numeric payloads go into raw little-endian `.bin` files; each is
//! described by a small JSON header (dims, layout, config hash) so every
//! artifact names the configuration that produced it.

use crate::learning::{FusionModel, GramProjector, PcaModel, PldaModel};
use crate::{DcpError, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

/// One image of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Image path, relative to the manifest's directory.
    pub image: String,
    /// Landmark file path, relative to the manifest's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landmarks: Option<String>,
    pub subject: String,
    /// `gallery` or `probe`.
    pub role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Gallery,
    Probe,
}

/// A labeled comparison between two manifest entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEntry {
    /// Index into `entries`.
    pub a: usize,
    /// Index into `entries`.
    pub b: usize,
    pub same: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold: Option<usize>,
}

/// JSON dataset description: images, landmarks, subjects, roles, and an
/// optional pair list for verification protocols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub entries: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<PairEntry>>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(DcpError::Input("manifest has no entries".into()));
        }
        if let Some(pairs) = &self.pairs {
            for p in pairs {
                if p.a >= self.entries.len() || p.b >= self.entries.len() {
                    return Err(DcpError::Input(format!(
                        "pair ({}, {}) out of range for {} entries",
                        p.a,
                        p.b,
                        self.entries.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| DcpError::Input(format!("read {}: {e}", path.display())))?;
        let manifest: DatasetManifest = serde_json::from_str(&text)
            .map_err(|e| DcpError::Format(format!("manifest parse: {e}")))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path.as_ref(), text)?;
        Ok(())
    }
}

/// Write a `u32` slice as little-endian bytes.
pub fn write_u32_le(w: &mut impl Write, data: &[u32]) -> Result<()> {
    for &v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_u32_le(r: &mut impl Read, len: usize) -> Result<Vec<u32>> {
    let mut bytes = vec![0u8; len * 4];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Write an `f32` slice as little-endian bytes.
pub fn write_f32_le(w: &mut impl Write, data: &[f32]) -> Result<()> {
    for &v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_f32_le(r: &mut impl Read, len: usize) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; len * 4];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Write an `f64` slice as little-endian bytes.
pub fn write_f64_le(w: &mut impl Write, data: &[f64]) -> Result<()> {
    for &v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_f64_le(r: &mut impl Read, len: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; len * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

/// Hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// One named little-endian payload inside a block file.
#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    U32(Vec<u32>),
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl Block {
    pub fn dtype(&self) -> &'static str {
        match self {
            Block::U32(_) => "u32",
            Block::F32(_) => "f32",
            Block::F64(_) => "f64",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Block::U32(v) => v.len(),
            Block::F32(v) => v.len(),
            Block::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sidecar entry describing one block of the binary file, in file order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDesc {
    pub name: String,
    pub dtype: String,
    /// Element count, not bytes.
    pub len: u64,
}

/// JSON sidecar written next to every binary block file (`<file>.json`).
/// Records what produced the data and enough layout to read it back, plus
/// the byte length and digest of the binary so corruption is detected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub byte_len: u64,
    pub sha256: String,
    pub blocks: Vec<BlockDesc>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".json");
    PathBuf::from(name)
}

/// Binary artifact: concatenated little-endian blocks plus a JSON sidecar.
/// The binary holds only raw numbers; names, types, and provenance live in
/// the sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFile {
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub blocks: Vec<(String, Block)>,
}

impl BlockFile {
    pub fn new(kind: &str, config_hash: &str, seed: u64) -> BlockFile {
        BlockFile {
            kind: kind.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            blocks: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, block: Block) {
        self.blocks.push((name.to_string(), block));
    }

    pub fn block(&self, name: &str) -> Result<&Block> {
        self.blocks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b)
            .ok_or_else(|| {
                DcpError::Format(format!("{} file has no `{name}` block", self.kind))
            })
    }

    pub fn u32s(&self, name: &str) -> Result<&[u32]> {
        match self.block(name)? {
            Block::U32(v) => Ok(v),
            other => Err(DcpError::Format(format!(
                "block `{name}` is {}, expected u32",
                other.dtype()
            ))),
        }
    }

    pub fn f32s(&self, name: &str) -> Result<&[f32]> {
        match self.block(name)? {
            Block::F32(v) => Ok(v),
            other => Err(DcpError::Format(format!(
                "block `{name}` is {}, expected f32",
                other.dtype()
            ))),
        }
    }

    pub fn f64s(&self, name: &str) -> Result<&[f64]> {
        match self.block(name)? {
            Block::F64(v) => Ok(v),
            other => Err(DcpError::Format(format!(
                "block `{name}` is {}, expected f64",
                other.dtype()
            ))),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut data = Vec::new();
        for (_, block) in &self.blocks {
            match block {
                Block::U32(v) => write_u32_le(&mut data, v)?,
                Block::F32(v) => write_f32_le(&mut data, v)?,
                Block::F64(v) => write_f64_le(&mut data, v)?,
            }
        }
        let sidecar = Sidecar {
            kind: self.kind.clone(),
            config_hash: self.config_hash.clone(),
            seed: self.seed,
            byte_len: data.len() as u64,
            sha256: sha256_hex(&data),
            blocks: self
                .blocks
                .iter()
                .map(|(name, b)| BlockDesc {
                    name: name.clone(),
                    dtype: b.dtype().to_string(),
                    len: b.len() as u64,
                })
                .collect(),
        };
        std::fs::write(path, &data)
            .map_err(|e| DcpError::Input(format!("write {}: {e}", path.display())))?;
        let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        let sc = sidecar_path(path);
        std::fs::write(&sc, text)
            .map_err(|e| DcpError::Input(format!("write {}: {e}", sc.display())))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<BlockFile> {
        let path = path.as_ref();
        let sidecar_file = sidecar_path(path);
        let text = std::fs::read_to_string(&sidecar_file).map_err(|e| {
            DcpError::Input(format!("sidecar {}: {e}", sidecar_file.display()))
        })?;
        let sidecar: Sidecar = serde_json::from_str(&text)
            .map_err(|e| DcpError::Format(format!("sidecar parse: {e}")))?;
        let data = std::fs::read(path)
            .map_err(|e| DcpError::Input(format!("read {}: {e}", path.display())))?;
        if data.len() as u64 != sidecar.byte_len {
            return Err(DcpError::Format(format!(
                "{} is {} bytes, sidecar says {}",
                path.display(),
                data.len(),
                sidecar.byte_len
            )));
        }
        let digest = sha256_hex(&data);
        if digest != sidecar.sha256 {
            return Err(DcpError::Format(format!(
                "{} digest mismatch: file {digest}, sidecar {}",
                path.display(),
                sidecar.sha256
            )));
        }
        let mut cursor = data.as_slice();
        let mut blocks = Vec::with_capacity(sidecar.blocks.len());
        for desc in &sidecar.blocks {
            let len = desc.len as usize;
            let block = match desc.dtype.as_str() {
                "u32" => Block::U32(read_u32_le(&mut cursor, len)?),
                "f32" => Block::F32(read_f32_le(&mut cursor, len)?),
                "f64" => Block::F64(read_f64_le(&mut cursor, len)?),
                other => {
                    return Err(DcpError::Format(format!(
                        "block `{}` has unknown dtype `{other}`",
                        desc.name
                    )))
                }
            };
            blocks.push((desc.name.clone(), block));
        }
        if !cursor.is_empty() {
            return Err(DcpError::Format(format!(
                "{} has {} trailing bytes past the declared blocks",
                path.display(),
                cursor.len()
            )));
        }
        Ok(BlockFile {
            kind: sidecar.kind,
            config_hash: sidecar.config_hash,
            seed: sidecar.seed,
            blocks,
        })
    }
}

fn matrix_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn matrix_from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<DMatrix<f64>> {
    if data.len() != rows * cols {
        return Err(DcpError::Format(format!(
            "matrix block of {} values does not fill {rows} x {cols}",
            data.len()
        )));
    }
    Ok(DMatrix::from_row_iterator(rows, cols, data.iter().copied()))
}

/// A whitening projector saved with the training matrix it projects
/// through, so loading yields a self-contained model.
pub struct SavedWpca {
    pub projector: GramProjector,
    pub train: Vec<Vec<f32>>,
    pub config_hash: String,
    pub seed: u64,
}

pub fn save_wpca(
    path: impl AsRef<Path>,
    projector: &GramProjector,
    train: &[Vec<f32>],
    config_hash: &str,
    seed: u64,
) -> Result<()> {
    let (mean, coeff, train_dot_mean, mean_dot_mean) = projector.to_parts();
    if train.len() != train_dot_mean.len() {
        return Err(DcpError::Dimension(format!(
            "projector was fitted on {} vectors, got {} to save",
            train_dot_mean.len(),
            train.len()
        )));
    }
    let mut flat_train = Vec::with_capacity(train.len() * mean.len());
    for row in train {
        flat_train.extend_from_slice(row);
    }
    let mut file = BlockFile::new("wpca-model", config_hash, seed);
    file.push("mean", Block::F64(mean));
    file.push("coefficients", Block::F64(coeff));
    file.push("train-dot-mean", Block::F64(train_dot_mean));
    file.push("mean-dot-mean", Block::F64(vec![mean_dot_mean]));
    file.push("train", Block::F32(flat_train));
    file.save(path)
}

pub fn load_wpca(path: impl AsRef<Path>) -> Result<SavedWpca> {
    let file = BlockFile::load(path)?;
    if file.kind != "wpca-model" {
        return Err(DcpError::Format(format!(
            "expected a wpca-model file, got `{}`",
            file.kind
        )));
    }
    let mean = file.f64s("mean")?.to_vec();
    let coeff = file.f64s("coefficients")?.to_vec();
    let train_dot_mean = file.f64s("train-dot-mean")?.to_vec();
    let mdm = file.f64s("mean-dot-mean")?;
    if mdm.len() != 1 {
        return Err(DcpError::Format("mean-dot-mean block must hold 1 value".into()));
    }
    let flat_train = file.f32s("train")?;
    let n = train_dot_mean.len();
    let d = mean.len();
    if n == 0 || d == 0 || flat_train.len() != n * d {
        return Err(DcpError::Format(format!(
            "train block of {} values does not fill {n} x {d}",
            flat_train.len()
        )));
    }
    let train: Vec<Vec<f32>> = flat_train.chunks_exact(d).map(|c| c.to_vec()).collect();
    let projector = GramProjector::from_parts(mean, coeff, train_dot_mean, mdm[0])?;
    Ok(SavedWpca {
        projector,
        train,
        config_hash: file.config_hash,
        seed: file.seed,
    })
}

pub struct SavedPca {
    pub model: PcaModel,
    pub config_hash: String,
    pub seed: u64,
}

pub fn save_pca(
    path: impl AsRef<Path>,
    model: &PcaModel,
    config_hash: &str,
    seed: u64,
) -> Result<()> {
    let mut file = BlockFile::new("pca-model", config_hash, seed);
    file.push("mean", Block::F64(model.mean.as_slice().to_vec()));
    file.push("basis", Block::F64(matrix_row_major(&model.basis)));
    file.push(
        "eigenvalues",
        Block::F64(model.eigenvalues.as_slice().to_vec()),
    );
    file.save(path)
}

pub fn load_pca(path: impl AsRef<Path>) -> Result<SavedPca> {
    let file = BlockFile::load(path)?;
    if file.kind != "pca-model" {
        return Err(DcpError::Format(format!(
            "expected a pca-model file, got `{}`",
            file.kind
        )));
    }
    let mean = file.f64s("mean")?;
    let eigenvalues = file.f64s("eigenvalues")?;
    let d = mean.len();
    let k = eigenvalues.len();
    let basis = matrix_from_row_major(d, k, file.f64s("basis")?)?;
    Ok(SavedPca {
        model: PcaModel {
            mean: DVector::from_column_slice(mean),
            basis,
            eigenvalues: DVector::from_column_slice(eigenvalues),
        },
        config_hash: file.config_hash,
        seed: file.seed,
    })
}

pub struct SavedPlda {
    pub model: PldaModel,
    pub config_hash: String,
    pub seed: u64,
}

pub fn save_plda(
    path: impl AsRef<Path>,
    model: &PldaModel,
    config_hash: &str,
    seed: u64,
) -> Result<()> {
    let mut file = BlockFile::new("plda-model", config_hash, seed);
    file.push("mean", Block::F64(model.mean.as_slice().to_vec()));
    file.push("between", Block::F64(matrix_row_major(&model.between)));
    file.push("within", Block::F64(matrix_row_major(&model.within)));
    file.push("noise", Block::F64(model.noise.as_slice().to_vec()));
    file.push("ll-trace", Block::F64(model.ll_trace.clone()));
    file.save(path)
}

pub fn load_plda(path: impl AsRef<Path>) -> Result<SavedPlda> {
    let file = BlockFile::load(path)?;
    if file.kind != "plda-model" {
        return Err(DcpError::Format(format!(
            "expected a plda-model file, got `{}`",
            file.kind
        )));
    }
    let mean = file.f64s("mean")?;
    let noise = file.f64s("noise")?;
    let d = mean.len();
    if d == 0 || noise.len() != d {
        return Err(DcpError::Format(
            "plda mean and noise blocks must have equal nonzero length".into(),
        ));
    }
    let between_flat = file.f64s("between")?;
    let within_flat = file.f64s("within")?;
    if between_flat.len() % d != 0 || within_flat.len() % d != 0 {
        return Err(DcpError::Format(
            "plda factor blocks do not tile the feature dimension".into(),
        ));
    }
    let between = matrix_from_row_major(d, between_flat.len() / d, between_flat)?;
    let within = matrix_from_row_major(d, within_flat.len() / d, within_flat)?;
    Ok(SavedPlda {
        model: PldaModel {
            mean: DVector::from_column_slice(mean),
            between,
            within,
            noise: DVector::from_column_slice(noise),
            ll_trace: file.f64s("ll-trace")?.to_vec(),
        },
        config_hash: file.config_hash,
        seed: file.seed,
    })
}

/// Fusion models are a handful of numbers; they are stored as plain JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedFusion {
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub model: FusionModel,
}

pub fn save_fusion(
    path: impl AsRef<Path>,
    model: &FusionModel,
    config_hash: &str,
    seed: u64,
) -> Result<()> {
    let saved = SavedFusion {
        kind: "fusion-model".into(),
        config_hash: config_hash.into(),
        seed,
        model: model.clone(),
    };
    let text = serde_json::to_string_pretty(&saved).expect("fusion model serializes");
    std::fs::write(path.as_ref(), text)?;
    Ok(())
}

pub fn load_fusion(path: impl AsRef<Path>) -> Result<SavedFusion> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let saved: SavedFusion = serde_json::from_str(&text)
        .map_err(|e| DcpError::Format(format!("fusion model parse: {e}")))?;
    if saved.kind != "fusion-model" {
        return Err(DcpError::Format(format!(
            "expected a fusion-model file, got `{}`",
            saved.kind
        )));
    }
    Ok(saved)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_roundtrip() {
        let m = DatasetManifest {
            seed: Some(7),
            entries: vec![
                ManifestEntry {
                    image: "a.pgm".into(),
                    landmarks: Some("a.pts".into()),
                    subject: "s0".into(),
                    role: Role::Gallery,
                },
                ManifestEntry {
                    image: "b.pgm".into(),
                    landmarks: None,
                    subject: "s0".into(),
                    role: Role::Probe,
                },
            ],
            pairs: Some(vec![PairEntry {
                a: 0,
                b: 1,
                same: true,
                fold: Some(0),
            }]),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        m.save(&path).unwrap();
        assert_eq!(DatasetManifest::load(&path).unwrap(), m);
    }

    #[test]
    fn manifest_rejects_bad_pairs() {
        let m = DatasetManifest {
            seed: None,
            entries: vec![ManifestEntry {
                image: "a.pgm".into(),
                landmarks: None,
                subject: "s0".into(),
                role: Role::Gallery,
            }],
            pairs: Some(vec![PairEntry {
                a: 0,
                b: 3,
                same: false,
                fold: None,
            }]),
        };
        assert!(m.validate().is_err());
    }

    #[test]
    fn le_block_roundtrips() {
        let mut buf = Vec::new();
        write_u32_le(&mut buf, &[1, 2, 0xdead_beef]).unwrap();
        assert_eq!(read_u32_le(&mut buf.as_slice(), 3).unwrap(), vec![1, 2, 0xdead_beef]);

        let mut buf = Vec::new();
        write_f32_le(&mut buf, &[1.5, -0.25]).unwrap();
        assert_eq!(read_f32_le(&mut buf.as_slice(), 2).unwrap(), vec![1.5, -0.25]);

        let mut buf = Vec::new();
        write_f64_le(&mut buf, &[std::f64::consts::PI]).unwrap();
        assert_eq!(
            read_f64_le(&mut buf.as_slice(), 1).unwrap(),
            vec![std::f64::consts::PI]
        );
    }

    #[test]
    fn block_file_roundtrips_all_dtypes() {
        let mut file = BlockFile::new("test-kind", "cafe", 9);
        file.push("counts", Block::U32(vec![1, 2, 3]));
        file.push("feat", Block::F32(vec![0.5, -1.5]));
        file.push("weights", Block::F64(vec![std::f64::consts::E]));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("artifact.bin");
        file.save(&path).unwrap();
        assert!(sidecar_path(&path).is_file());

        let back = BlockFile::load(&path).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.u32s("counts").unwrap(), &[1, 2, 3]);
        assert_eq!(back.f32s("feat").unwrap(), &[0.5, -1.5]);
        assert!(back.f64s("feat").is_err());
        assert!(back.block("nope").is_err());
    }

    #[test]
    fn block_file_detects_corruption() {
        let mut file = BlockFile::new("test-kind", "cafe", 0);
        file.push("feat", Block::F32(vec![1.0, 2.0, 3.0]));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("artifact.bin");
        file.save(&path).unwrap();

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] ^= 0xff;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(BlockFile::load(&path), Err(DcpError::Format(_))));

        bytes.pop();
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(BlockFile::load(&path), Err(DcpError::Format(_))));

        std::fs::remove_file(sidecar_path(&path)).unwrap();
        assert!(matches!(BlockFile::load(&path), Err(DcpError::Input(_))));
    }

    #[test]
    fn wpca_model_projects_identically_after_reload() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let train: Vec<Vec<f32>> = (0..8)
            .map(|_| (0..12).map(|_| rng.random_range(-1.0f32..1.0)).collect())
            .collect();
        let probe: Vec<f32> = (0..12).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let projector = GramProjector::fit(&train, 4).unwrap();
        let before = projector.project(&probe, &train).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.wpca");
        save_wpca(&path, &projector, &train, "dead", 5).unwrap();
        let saved = load_wpca(&path).unwrap();
        assert_eq!(saved.config_hash, "dead");
        assert_eq!(saved.seed, 5);
        let after = saved.projector.project(&probe, &saved.train).unwrap();
        assert_eq!(before.as_slice(), after.as_slice());
    }

    #[test]
    fn pca_model_roundtrips() {
        use crate::learning::{pca_fit, pca_project};
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let data = DMatrix::from_fn(20, 6, |_, _| rng.random_range(-1.0..1.0));
        let model = pca_fit(&data, 3).unwrap();
        let x = DVector::from_fn(6, |i, _| i as f64 * 0.3 - 1.0);
        let before = pca_project(&model, &x).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.pca");
        save_pca(&path, &model, "beef", 6).unwrap();
        let saved = load_pca(&path).unwrap();
        let after = pca_project(&saved.model, &x).unwrap();
        assert_eq!(before.as_slice(), after.as_slice());
        assert_eq!(saved.model.eigenvalues.as_slice(), model.eigenvalues.as_slice());
    }

    #[test]
    fn plda_model_roundtrips() {
        let model = PldaModel {
            mean: DVector::from_column_slice(&[0.5, -0.5, 1.0]),
            between: DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            within: DMatrix::from_row_slice(3, 1, &[0.1, 0.2, 0.3]),
            noise: DVector::from_column_slice(&[1.0, 1.5, 2.0]),
            ll_trace: vec![-10.0, -8.0, -7.5],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.plda");
        save_plda(&path, &model, "f00d", 11).unwrap();
        let saved = load_plda(&path).unwrap();
        assert_eq!(saved.model.mean, model.mean);
        assert_eq!(saved.model.between, model.between);
        assert_eq!(saved.model.within, model.within);
        assert_eq!(saved.model.noise, model.noise);
        assert_eq!(saved.model.ll_trace, model.ll_trace);
        assert_eq!(saved.seed, 11);

        assert!(matches!(
            load_pca(&path),
            Err(DcpError::Format(_))
        ));
    }

    #[test]
    fn fusion_model_roundtrips_as_json() {
        use crate::learning::FusionKind;
        let model = FusionModel {
            kind: FusionKind::Linear,
            weights: vec![0.7, 0.3],
            bias: -0.1,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.fusion.json");
        save_fusion(&path, &model, "0123", 2).unwrap();
        let saved = load_fusion(&path).unwrap();
        assert_eq!(saved.model, model);
        assert_eq!(saved.config_hash, "0123");
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"linear\""));
    }
}
