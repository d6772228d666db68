//! `dcpkit`: encode, represent, train, and evaluate from the command line.
//!
//! Every run is a pure function of (argv, input files, seed): reports on
//! stdout are byte-identical across reruns and thread counts. Stage
//! timings go to stderr only, so they never perturb report bytes. The one
//! exception is `benchmark`, whose payload is wall-clock measurement by
//! design.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 input error,
//! 4 numeric/conditioning error.

mod commands;

use clap::{Args, Parser, Subcommand};
use dcp_core::{DcpError, Result};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "dcpkit",
    version,
    about = "Dual-cross pattern descriptors, multi-level face representations, and evaluation pipelines"
)]
struct Cli {
    /// Worker threads (overrides DCPKIT_THREADS; default 1).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed governing every stochastic step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Photometric normalization and oriented gradient filtering of one image.
    Filter(FilterArgs),
    /// Encode one image into a regional code histogram feature file.
    Encode(EncodeArgs),
    /// Build the nine-feature multi-level representation of one face.
    Represent(RepresentArgs),
    /// Rank direction groupings by joint entropy over synthetic fields.
    EntropyScan(EntropyScanArgs),
    /// Fit a whitened projector on feature files.
    TrainWpca(TrainWpcaArgs),
    /// Fit a probabilistic LDA model on labeled feature files.
    TrainPlda(TrainPldaArgs),
    /// Fit a score fusion model on labeled score tuples.
    TrainFusion(TrainFusionArgs),
    /// Closed-set identification over a dataset manifest.
    Identify(EvalArgs),
    /// Pair verification over a dataset manifest.
    Verify(EvalArgs),
    /// Wall-clock comparison of descriptor encoders on a noise image.
    Benchmark(BenchmarkArgs),
    /// Generate a deterministic synthetic corpus with a manifest.
    SynthCorpus(SynthCorpusArgs),
}

#[derive(Args)]
pub struct FilterArgs {
    /// Input PGM image.
    #[arg(long)]
    pub image: PathBuf,
    /// Directory for the filtered PGM outputs.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Gamma-correction exponent.
    #[arg(long, default_value_t = 0.2)]
    pub gamma: f64,
    /// Inner difference-of-Gaussians sigma, px.
    #[arg(long, default_value_t = 1.4)]
    pub sigma1: f64,
    /// Outer difference-of-Gaussians sigma, px.
    #[arg(long, default_value_t = 2.0)]
    pub sigma2: f64,
    /// Contrast-equalization exponent.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Contrast-equalization clip threshold.
    #[arg(long, default_value_t = 10.0)]
    pub tau: f64,
    /// Oriented gradient kernel sigma, px.
    #[arg(long, default_value_t = 1.0)]
    pub fdg_sigma: f64,
    /// Gradient orientation count (angles k*pi/n, k in 0..n).
    #[arg(long, default_value_t = 4)]
    pub orientations: usize,
}

#[derive(Args)]
pub struct EncodeArgs {
    /// Input PGM image.
    pub image: PathBuf,
    /// Code map: dcp, lbp, mslbp, or ltp.
    #[arg(long, default_value = "dcp")]
    pub descriptor: String,
    /// Inner sampling radius, px.
    #[arg(long, default_value_t = 4.0)]
    pub rin: f64,
    /// Outer sampling radius, px.
    #[arg(long, default_value_t = 6.0)]
    pub rex: f64,
    /// Regional histogram grid (grid x grid regions).
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    /// Ternary-code noise band (ltp only).
    #[arg(long, default_value_t = 5.0)]
    pub ltp_t: f64,
    /// Output feature file (default: input with .feat extension).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct RepresentArgs {
    /// Input PGM image.
    #[arg(long)]
    pub image: PathBuf,
    /// Landmark file for the input image.
    #[arg(long)]
    pub landmarks: PathBuf,
    /// feret (normalization on, radii 2/3) or lfw (normalization off, radii 4/6).
    #[arg(long, default_value = "feret")]
    pub preset: String,
    /// Output feature file (default: input with .mdml extension).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EntropyScanArgs {
    /// Number of random fields in the corpus.
    #[arg(long, default_value_t = 50)]
    pub fields: usize,
    /// Field edge length, px.
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    /// Correlation length scale of the fields, px.
    #[arg(long, default_value_t = 4.0)]
    pub length_scale: f64,
    /// Radius pairs to scan, e.g. "1,2;2,3;4,6;6,8".
    #[arg(long, default_value = "1,2;2,3;4,6;6,8")]
    pub radii: String,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct TrainWpcaArgs {
    /// Feature files, one per training image.
    #[arg(long, num_args = 1.., required = true)]
    pub features: Vec<PathBuf>,
    /// Block name to read from each feature file.
    #[arg(long, default_value = "histogram")]
    pub feature: String,
    /// Output dimension (clipped to one less than the training count).
    #[arg(long, default_value_t = 600)]
    pub dim: usize,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TrainPldaArgs {
    /// Feature files, one per training image.
    #[arg(long, num_args = 1.., required = true)]
    pub features: Vec<PathBuf>,
    /// Block name to read from each feature file.
    #[arg(long, default_value = "histogram")]
    pub feature: String,
    /// JSON array of per-file identity labels (strings or integers).
    #[arg(long)]
    pub labels: PathBuf,
    /// Identity subspace dimension.
    #[arg(long, default_value_t = 100)]
    pub dh: usize,
    /// Within-identity subspace dimension.
    #[arg(long, default_value_t = 100)]
    pub dw: usize,
    /// EM iterations.
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TrainFusionArgs {
    /// JSON array of score tuples, one inner array per comparison.
    #[arg(long)]
    pub scores: PathBuf,
    /// JSON array of booleans, true for same-identity comparisons.
    #[arg(long)]
    pub labels: PathBuf,
    /// average or linear.
    #[arg(long, default_value = "average")]
    pub mode: String,
    /// Regularization trade-off for linear fusion.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Output model file (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Dataset manifest; entry paths resolve against its directory.
    #[arg(long)]
    pub manifest: PathBuf,
    /// descriptor-chi2 or mdml-wpca.
    #[arg(long, default_value = "descriptor-chi2")]
    pub pipeline: String,
    /// feret128, mdml180, or lfw-like.
    #[arg(long, default_value = "feret128")]
    pub preset: String,
    /// Code map for the descriptor-chi2 pipeline: dcp, lbp, mslbp, or ltp.
    #[arg(long, default_value = "dcp")]
    pub descriptor: String,
    /// Regional histogram grid.
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    /// Inner sampling radius (default: preset radii).
    #[arg(long)]
    pub rin: Option<f64>,
    /// Outer sampling radius (default: preset radii).
    #[arg(long)]
    pub rex: Option<f64>,
    /// Ternary-code noise band (ltp only).
    #[arg(long, default_value_t = 5.0)]
    pub ltp_t: f64,
    /// Whitened subspace dimension bound.
    #[arg(long, default_value_t = 600)]
    pub wpca_dim: usize,
    /// Deepest identification rank reported.
    #[arg(long, default_value_t = 5)]
    pub kmax: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchmarkArgs {
    /// Comma-separated encoders to time, e.g. "dcp,lbp".
    #[arg(long, default_value = "dcp,lbp")]
    pub descriptor: String,
    /// Noise image edge length, px.
    #[arg(long, default_value_t = 1000)]
    pub size: usize,
    /// Inner sampling radius, px.
    #[arg(long, default_value_t = 4.0)]
    pub rin: f64,
    /// Outer sampling radius, px.
    #[arg(long, default_value_t = 6.0)]
    pub rex: f64,
    /// Timed repetitions per encoder (fastest wins).
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SynthCorpusArgs {
    /// Number of identities.
    #[arg(long, default_value_t = 10)]
    pub ids: usize,
    /// Images per identity.
    #[arg(long, default_value_t = 5)]
    pub per_id: usize,
    /// Comma-separated variations: none, noise[=s], gain[=s], ramp[=s], jitter[=s].
    #[arg(long, default_value = "none")]
    pub variation: String,
    /// Output directory for images, landmarks, and manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        if n == 0 {
            return Err(DcpError::Config("--threads must be at least 1".into()));
        }
        return Ok(n);
    }
    match std::env::var("DCPKIT_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                DcpError::Config(format!(
                    "DCPKIT_THREADS must be a positive integer, got `{s}`"
                ))
            }),
        Err(_) => Ok(1),
    }
}

fn run(cli: &Cli) -> Result<(serde_json::Value, Option<PathBuf>)> {
    let seed = cli.seed;
    match &cli.command {
        Command::Filter(a) => Ok((commands::run_filter(a, seed)?, None)),
        Command::Encode(a) => Ok((commands::run_encode(a, seed)?, None)),
        Command::Represent(a) => Ok((commands::run_represent(a, seed)?, None)),
        Command::EntropyScan(a) => Ok((commands::run_entropy_scan(a, seed)?, a.out.clone())),
        Command::TrainWpca(a) => Ok((commands::run_train_wpca(a, seed)?, None)),
        Command::TrainPlda(a) => Ok((commands::run_train_plda(a, seed)?, None)),
        Command::TrainFusion(a) => Ok((commands::run_train_fusion(a, seed)?, None)),
        Command::Identify(a) => Ok((commands::run_eval(a, seed, "identify")?, a.out.clone())),
        Command::Verify(a) => Ok((commands::run_eval(a, seed, "verify")?, a.out.clone())),
        Command::Benchmark(a) => Ok((commands::run_benchmark(a, seed)?, a.out.clone())),
        Command::SynthCorpus(a) => Ok((commands::run_synth_corpus(a, seed)?, None)),
    }
}

fn main() {
    let cli = Cli::parse();

    let outcome = resolve_threads(cli.threads).and_then(|threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| DcpError::Config(format!("thread pool: {e}")))?;
        run(&cli)
    });

    match outcome {
        Ok((report, out)) => {
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, text + "\n") {
                        eprintln!("error: report write: {e}");
                        std::process::exit(3);
                    }
                }
                None => println!("{text}"),
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
