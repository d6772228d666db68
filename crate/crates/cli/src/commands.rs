//! Subcommand implementations. Each returns the JSON report for stdout;
//! artifacts (feature files, models, images) are written as side effects
//! and listed in the report together with the config hash that produced
//! them.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use dcp_core::descriptors::{
    encode_dcp, encode_lbp, encode_ltp, encode_mslbp, regional_histograms, CodeMap, SampleMode,
    SamplingGeometry,
};
use dcp_core::entropy::{entropy_scan, GroupingMode, ModeEntropy};
use dcp_core::evaluation::protocol::{
    run_protocol, DescriptorKind, ExperimentConfig, Pipeline, Preset,
};
use dcp_core::filtering::{fdg_filter, tt_normalize, FDGBank, TTParams};
use dcp_core::imaging::{load_pgm, save_pgm, GrayImage, LandmarkSet};
use dcp_core::learning::{fusion_fit, plda_fit, FusionKind, GramProjector};
use dcp_core::model_io::{
    save_fusion, save_plda, save_wpca, sha256_hex, sidecar_path, Block, BlockFile, DatasetManifest,
};
use dcp_core::representation::{build_mdml, MdDcpsConfig};
use dcp_core::synth::{correlated_field, write_corpus, SynthParams, Variation};
use dcp_core::{DcpError, Result};

use crate::{
    BenchmarkArgs, EncodeArgs, EntropyScanArgs, EvalArgs, FilterArgs, RepresentArgs,
    SynthCorpusArgs, TrainFusionArgs, TrainPldaArgs, TrainWpcaArgs,
};

/// Runs one stage and reports its wall time on stderr, never in the report.
fn stage<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f()?;
    eprintln!(
        "timing: {name} {:.1} ms",
        start.elapsed().as_secs_f64() * 1e3
    );
    Ok(out)
}

/// Canonical hash of a subcommand's effective parameters: serde struct
/// field order fixes the JSON, so equal parameters give equal hashes and
/// any parameter change gives a new one.
fn config_hash<T: Serialize>(params: &T) -> String {
    let canonical = serde_json::to_string(params).expect("params serialize");
    sha256_hex(canonical.as_bytes())
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn encode_by_kind(
    img: &GrayImage,
    kind: DescriptorKind,
    geometry: &SamplingGeometry,
    r_in: f64,
    r_ex: f64,
    ltp_t: f64,
) -> Result<CodeMap> {
    match kind {
        DescriptorKind::Dcp => Ok(encode_dcp(img, geometry)),
        DescriptorKind::Lbp => encode_lbp(img, r_in, SampleMode::Nearest),
        DescriptorKind::MsLbp => encode_mslbp(img, r_in, r_ex, SampleMode::Nearest),
        DescriptorKind::Ltp => encode_ltp(img, r_in, ltp_t, SampleMode::Nearest),
    }
}

#[derive(Serialize)]
struct FilterParams {
    gamma: f64,
    sigma1: f64,
    sigma2: f64,
    alpha: f64,
    tau: f64,
    fdg_sigma: f64,
    orientations: usize,
}

pub fn run_filter(args: &FilterArgs, seed: u64) -> Result<Value> {
    let params = FilterParams {
        gamma: args.gamma,
        sigma1: args.sigma1,
        sigma2: args.sigma2,
        alpha: args.alpha,
        tau: args.tau,
        fdg_sigma: args.fdg_sigma,
        orientations: args.orientations,
    };
    let hash = config_hash(&params);
    let tt = TTParams {
        gamma: args.gamma,
        sigma1: args.sigma1,
        sigma2: args.sigma2,
        alpha: args.alpha,
        tau: args.tau,
    };
    if args.orientations == 0 {
        return Err(DcpError::Config("need at least one orientation".into()));
    }
    let angles: Vec<f64> = (0..args.orientations)
        .map(|k| k as f64 * PI / args.orientations as f64)
        .collect();
    let bank = FDGBank::new(angles, args.fdg_sigma)?;

    let img = load_pgm(&args.image)?;
    let normalized = stage("tt-normalize", || tt_normalize(&img, &tt))?;
    let responses = stage("fdg-filter", || Ok(fdg_filter(&normalized, &bank)))?;

    let stem = args
        .image
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into());
    std::fs::create_dir_all(&args.out_dir)?;
    let mut outputs = Vec::new();
    let tt_path = args.out_dir.join(format!("{stem}_tt.pgm"));
    save_pgm(&normalized, &tt_path)?;
    outputs.push(path_str(&tt_path));
    for (k, response) in responses.iter().enumerate() {
        let path = args.out_dir.join(format!("{stem}_fdg{k}.pgm"));
        save_pgm(response, &path)?;
        outputs.push(path_str(&path));
    }
    let _ = seed;
    Ok(json!({
        "command": "filter",
        "config_hash": hash,
        "outputs": outputs,
    }))
}

#[derive(Serialize)]
struct EncodeParams {
    descriptor: String,
    r_in: f64,
    r_ex: f64,
    grid: usize,
    ltp_threshold: f64,
}

pub fn run_encode(args: &EncodeArgs, seed: u64) -> Result<Value> {
    let kind = DescriptorKind::by_name(&args.descriptor)?;
    let params = EncodeParams {
        descriptor: kind.name().into(),
        r_in: args.rin,
        r_ex: args.rex,
        grid: args.grid,
        ltp_threshold: args.ltp_t,
    };
    let hash = config_hash(&params);
    let geometry = SamplingGeometry::new(args.rin, args.rex)?;

    let img = load_pgm(&args.image)?;
    let code_map = stage("encode", || {
        encode_by_kind(&img, kind, &geometry, args.rin, args.rex, args.ltp_t)
    })?;
    let hist = regional_histograms(&code_map, args.grid)?;
    // Region counts stay far below 2^24, so f32 holds them exactly.
    let counts: Vec<f32> = hist.counts.iter().map(|&c| c as f32).collect();
    let len = counts.len();

    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.image.with_extension("feat"));
    let mut file = BlockFile::new("descriptor-histogram", &hash, seed);
    file.push("histogram", Block::F32(counts));
    file.save(&out)?;

    Ok(json!({
        "command": "encode",
        "config_hash": hash,
        "descriptor": kind.name(),
        "grid": args.grid,
        "feature_len": len,
        "outputs": [path_str(&out), path_str(&sidecar_path(&out))],
    }))
}

#[derive(Serialize)]
struct RepresentParams {
    preset: String,
    r_in: f64,
    r_ex: f64,
    tt: bool,
}

pub fn run_represent(args: &RepresentArgs, seed: u64) -> Result<Value> {
    let (tt, radii) = match args.preset.as_str() {
        "feret" => (Some(TTParams::default()), (2.0, 3.0)),
        "lfw" => (None, (4.0, 6.0)),
        other => {
            return Err(DcpError::Config(format!(
                "unknown preset `{other}` (expected feret or lfw)"
            )))
        }
    };
    let params = RepresentParams {
        preset: args.preset.clone(),
        r_in: radii.0,
        r_ex: radii.1,
        tt: tt.is_some(),
    };
    let hash = config_hash(&params);
    let cfg = MdDcpsConfig {
        geometry: SamplingGeometry::new(radii.0, radii.1)?,
        ..MdDcpsConfig::default()
    };

    let img = load_pgm(&args.image)?;
    let lm = LandmarkSet::load(&args.landmarks)?;
    let features = stage("represent", || build_mdml(&img, &lm, &cfg, tt.as_ref()))?;

    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.image.with_extension("mdml"));
    let mut file = BlockFile::new("mdml-features", &hash, seed);
    let mut blocks = Vec::new();
    for feature in features {
        blocks.push(json!({"name": feature.name, "len": feature.values.len()}));
        file.push(&feature.name.clone(), Block::F32(feature.values));
    }
    file.save(&out)?;

    Ok(json!({
        "command": "represent",
        "config_hash": hash,
        "preset": args.preset,
        "blocks": blocks,
        "outputs": [path_str(&out), path_str(&sidecar_path(&out))],
    }))
}

#[derive(Serialize)]
struct EntropyScanParams {
    fields: usize,
    size: usize,
    length_scale: f64,
    radii: Vec<(f64, f64)>,
    seed: u64,
}

fn parse_radii_list(s: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for token in s.split(';') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let (a, b) = token.split_once(',').ok_or_else(|| {
            DcpError::Config(format!("radius pair `{token}` is not of the form a,b"))
        })?;
        let parse = |v: &str| {
            v.trim().parse::<f64>().map_err(|_| {
                DcpError::Config(format!("radius `{}` is not a number", v.trim()))
            })
        };
        out.push((parse(a)?, parse(b)?));
    }
    if out.is_empty() {
        return Err(DcpError::Config("no radius pairs given".into()));
    }
    Ok(out)
}

fn mode_json(mode: &ModeEntropy) -> Value {
    json!({
        "canonical_id": mode.canonical_id,
        "subset_a": mode.subset_a,
        "subset_b": mode.subset_b,
        "mean_bits": mode.mean_bits,
    })
}

pub fn run_entropy_scan(args: &EntropyScanArgs, seed: u64) -> Result<Value> {
    let radii = parse_radii_list(&args.radii)?;
    let params = EntropyScanParams {
        fields: args.fields,
        size: args.size,
        length_scale: args.length_scale,
        radii: radii.clone(),
        seed,
    };
    let hash = config_hash(&params);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corpus: Vec<GrayImage> = stage("synthesize-fields", || {
        (0..args.fields)
            .map(|_| correlated_field(args.size, args.size, args.length_scale, &mut rng))
            .collect()
    })?;

    let dual_cross_id = GroupingMode::dual_cross().canonical_id;
    let mut scans = Vec::new();
    for &(r_in, r_ex) in &radii {
        let geometry = SamplingGeometry::new(r_in, r_ex)?;
        let report = stage(&format!("entropy-scan {r_in},{r_ex}"), || {
            entropy_scan(&corpus, &geometry)
        })?;
        let ranked = report.ranked();
        let dual_rank = ranked
            .iter()
            .position(|m| m.canonical_id == dual_cross_id)
            .expect("dual-cross mode is always enumerated")
            + 1;
        scans.push(json!({
            "radii": [r_in, r_ex],
            "best": mode_json(ranked[0]),
            "dual_cross": mode_json(report.mode(dual_cross_id)),
            "dual_cross_rank": dual_rank,
            "modes": ranked.iter().map(|m| mode_json(m)).collect::<Vec<_>>(),
        }));
    }

    Ok(json!({
        "command": "entropy-scan",
        "config_hash": hash,
        "fields": args.fields,
        "size": args.size,
        "length_scale": args.length_scale,
        "seed": seed,
        "scans": scans,
    }))
}

/// Reads the named block from each feature file as one training row.
fn load_feature_rows(paths: &[PathBuf], block: &str) -> Result<Vec<Vec<f32>>> {
    let mut rows = Vec::with_capacity(paths.len());
    for path in paths {
        let file = BlockFile::load(path)?;
        rows.push(file.f32s(block)?.to_vec());
    }
    Ok(rows)
}

#[derive(Serialize)]
struct TrainWpcaParams {
    feature: String,
    dim: usize,
}

pub fn run_train_wpca(args: &TrainWpcaArgs, seed: u64) -> Result<Value> {
    let params = TrainWpcaParams {
        feature: args.feature.clone(),
        dim: args.dim,
    };
    let hash = config_hash(&params);
    if args.dim == 0 {
        return Err(DcpError::Config("--dim must be at least 1".into()));
    }

    let rows = stage("load-features", || {
        load_feature_rows(&args.features, &args.feature)
    })?;
    let n = rows.len();
    let input_dim = rows.first().map(|r| r.len()).unwrap_or(0);
    let d_out = args.dim.min(n.saturating_sub(1)).min(input_dim).max(1);
    let projector = stage("fit", || GramProjector::fit(&rows, d_out))?;
    save_wpca(&args.out, &projector, &rows, &hash, seed)?;

    Ok(json!({
        "command": "train-wpca",
        "config_hash": hash,
        "n_train": n,
        "input_dim": input_dim,
        "output_dim": projector.output_dim(),
        "outputs": [path_str(&args.out), path_str(&sidecar_path(&args.out))],
    }))
}

/// Labels file: JSON array of identity names (strings) or integers.
/// Strings map to dense identity indices in first-appearance order.
fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| DcpError::Format(format!("labels parse: {e}")))?;
    let arr = value
        .as_array()
        .ok_or_else(|| DcpError::Format("labels file must hold a JSON array".into()))?;
    let mut names: Vec<String> = Vec::new();
    let mut labels = Vec::with_capacity(arr.len());
    for item in arr {
        let label = if let Some(s) = item.as_str() {
            match names.iter().position(|n| n == s) {
                Some(i) => i,
                None => {
                    names.push(s.to_string());
                    names.len() - 1
                }
            }
        } else if let Some(n) = item.as_u64() {
            n as usize
        } else {
            return Err(DcpError::Format(format!(
                "label `{item}` is neither a string nor a non-negative integer"
            )));
        };
        labels.push(label);
    }
    Ok(labels)
}

#[derive(Serialize)]
struct TrainPldaParams {
    feature: String,
    d_h: usize,
    d_w: usize,
    iters: usize,
    seed: u64,
}

pub fn run_train_plda(args: &TrainPldaArgs, seed: u64) -> Result<Value> {
    let params = TrainPldaParams {
        feature: args.feature.clone(),
        d_h: args.dh,
        d_w: args.dw,
        iters: args.iters,
        seed,
    };
    let hash = config_hash(&params);

    let rows = stage("load-features", || {
        load_feature_rows(&args.features, &args.feature)
    })?;
    let labels = load_labels(&args.labels)?;
    if labels.len() != rows.len() {
        return Err(DcpError::Dimension(format!(
            "{} labels for {} feature files",
            labels.len(),
            rows.len()
        )));
    }
    let n = rows.len();
    let d = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != d) {
        return Err(DcpError::Dimension("feature files disagree on length".into()));
    }
    let data = nalgebra::DMatrix::from_fn(n, d, |i, j| rows[i][j] as f64);
    let model = stage("fit", || {
        plda_fit(&data, &labels, args.dh, args.dw, args.iters, seed)
    })?;
    save_plda(&args.out, &model, &hash, seed)?;

    let identities = {
        let mut distinct: Vec<usize> = labels.clone();
        distinct.sort_unstable();
        distinct.dedup();
        distinct.len()
    };
    Ok(json!({
        "command": "train-plda",
        "config_hash": hash,
        "n_train": n,
        "identities": identities,
        "dim": d,
        "d_h": args.dh,
        "d_w": args.dw,
        "iters": args.iters,
        "ll_first": model.ll_trace.first(),
        "ll_final": model.ll_trace.last(),
        "outputs": [path_str(&args.out), path_str(&sidecar_path(&args.out))],
    }))
}

#[derive(Serialize)]
struct TrainFusionParams {
    mode: String,
    c: f64,
    seed: u64,
}

pub fn run_train_fusion(args: &TrainFusionArgs, seed: u64) -> Result<Value> {
    let kind = match args.mode.as_str() {
        "average" => FusionKind::Average,
        "linear" => FusionKind::Linear,
        other => {
            return Err(DcpError::Config(format!(
                "unknown fusion mode `{other}` (expected average or linear)"
            )))
        }
    };
    let params = TrainFusionParams {
        mode: args.mode.clone(),
        c: args.c,
        seed,
    };
    let hash = config_hash(&params);

    let scores_text = std::fs::read_to_string(&args.scores)?;
    let scores: Vec<Vec<f64>> = serde_json::from_str(&scores_text)
        .map_err(|e| DcpError::Format(format!("scores parse: {e}")))?;
    let labels_text = std::fs::read_to_string(&args.labels)?;
    let labels: Vec<bool> = serde_json::from_str(&labels_text)
        .map_err(|e| DcpError::Format(format!("labels parse: {e}")))?;

    let model = stage("fit", || fusion_fit(&scores, &labels, kind, args.c))?;
    save_fusion(&args.out, &model, &hash, seed)?;

    Ok(json!({
        "command": "train-fusion",
        "config_hash": hash,
        "mode": args.mode,
        "n_train": scores.len(),
        "weights": model.weights,
        "bias": model.bias,
        "outputs": [path_str(&args.out)],
    }))
}

fn eval_config(args: &EvalArgs, seed: u64) -> Result<ExperimentConfig> {
    let pipeline = Pipeline::by_name(&args.pipeline)?;
    let preset = Preset::by_name(&args.preset)?;
    let descriptor = DescriptorKind::by_name(&args.descriptor)?;
    let (preset_rin, preset_rex) = preset.default_radii();
    let cfg = ExperimentConfig {
        pipeline,
        preset,
        descriptor,
        grid: args.grid,
        r_in: args.rin.unwrap_or(preset_rin),
        r_ex: args.rex.unwrap_or(preset_rex),
        ltp_threshold: args.ltp_t,
        wpca_dim: args.wpca_dim,
        k_max: args.kmax,
        seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn run_eval(args: &EvalArgs, seed: u64, command: &str) -> Result<Value> {
    let cfg = eval_config(args, seed)?;
    let manifest = DatasetManifest::load(&args.manifest)?;
    let base_dir = args
        .manifest
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let outcome = stage("protocol", || run_protocol(&manifest, &base_dir, &cfg))?;

    if command == "identify" && outcome.report.rank_k.is_none() {
        return Err(DcpError::Input(
            "manifest assigns no gallery and probe roles, nothing to identify".into(),
        ));
    }
    if command == "verify" && outcome.report.roc.is_none() {
        return Err(DcpError::Input(
            "manifest carries no pair list, nothing to verify".into(),
        ));
    }

    let mut value = serde_json::to_value(&outcome).expect("outcome serializes");
    if let Value::Object(map) = &mut value {
        map.insert("command".into(), json!(command));
    }
    Ok(value)
}

#[derive(Serialize)]
struct BenchmarkParams {
    descriptors: Vec<String>,
    size: usize,
    r_in: f64,
    r_ex: f64,
    reps: usize,
    seed: u64,
}

pub fn run_benchmark(args: &BenchmarkArgs, seed: u64) -> Result<Value> {
    let kinds: Vec<DescriptorKind> = args
        .descriptor
        .split(',')
        .map(|t| DescriptorKind::by_name(t.trim()))
        .collect::<Result<_>>()?;
    if kinds.is_empty() {
        return Err(DcpError::Config("no descriptors given".into()));
    }
    if args.reps == 0 {
        return Err(DcpError::Config("--reps must be at least 1".into()));
    }
    let params = BenchmarkParams {
        descriptors: kinds.iter().map(|k| k.name().into()).collect(),
        size: args.size,
        r_in: args.rin,
        r_ex: args.rex,
        reps: args.reps,
        seed,
    };
    let hash = config_hash(&params);
    let geometry = SamplingGeometry::new(args.rin, args.rex)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels: Vec<f64> = (0..args.size * args.size)
        .map(|_| rng.random_range(0..256) as f64)
        .collect();
    let img = GrayImage::from_raw(args.size, args.size, pixels)?;

    let mut results = Vec::new();
    let mut wall_by_kind = Vec::new();
    for &kind in &kinds {
        // Warm-up run; its code map also provides a checksum proving the
        // timed work is not optimized away.
        let code_map = encode_by_kind(&img, kind, &geometry, args.rin, args.rex, 5.0)?;
        let checksum: u64 = (0..code_map.channels())
            .map(|c| code_map.plane(c).iter().map(|&v| v as u64).sum::<u64>())
            .sum();
        let mut reps_ms = Vec::with_capacity(args.reps);
        for _ in 0..args.reps {
            let start = Instant::now();
            let timed = encode_by_kind(&img, kind, &geometry, args.rin, args.rex, 5.0)?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            std::hint::black_box(&timed);
            reps_ms.push(elapsed);
        }
        let wall_ms = reps_ms.iter().cloned().fold(f64::INFINITY, f64::min);
        eprintln!("timing: benchmark {} {wall_ms:.1} ms", kind.name());
        wall_by_kind.push((kind, wall_ms));
        results.push(json!({
            "descriptor": kind.name(),
            "wall_ms": wall_ms,
            "reps_ms": reps_ms,
            "checksum": checksum,
        }));
    }

    let mut ratios = serde_json::Map::new();
    for i in 0..wall_by_kind.len() {
        for j in (i + 1)..wall_by_kind.len() {
            let (a, ta) = &wall_by_kind[i];
            let (b, tb) = &wall_by_kind[j];
            ratios.insert(format!("{}_over_{}", a.name(), b.name()), json!(ta / tb));
        }
    }

    Ok(json!({
        "command": "benchmark",
        "config_hash": hash,
        "size": args.size,
        "reps": args.reps,
        "threads": rayon::current_num_threads(),
        "results": results,
        "ratios": ratios,
    }))
}

#[derive(Serialize)]
struct SynthCorpusParams {
    ids: usize,
    per_id: usize,
    variation: String,
    seed: u64,
}

pub fn run_synth_corpus(args: &SynthCorpusArgs, seed: u64) -> Result<Value> {
    let variations = Variation::parse_list(&args.variation)?;
    let params = SynthCorpusParams {
        ids: args.ids,
        per_id: args.per_id,
        variation: args.variation.clone(),
        seed,
    };
    let hash = config_hash(&params);
    let synth_params = SynthParams::new(args.ids, args.per_id, variations, seed)?;
    let manifest_path = stage("synthesize", || write_corpus(&synth_params, &args.out_dir))?;

    Ok(json!({
        "command": "synth-corpus",
        "config_hash": hash,
        "ids": args.ids,
        "per_id": args.per_id,
        "images": args.ids * args.per_id,
        "seed": seed,
        "manifest": path_str(&manifest_path),
    }))
}
