//! Subcommand implementations for the `dgsep` binary.
//!
//! `separate` runs the full pipeline (load, optional motionless-frame
//! removal, graph construction, solve, artifact export), `evaluate` scores
//! recovered backgrounds and masks, `synth` materializes a ground-truth
//! fixture, and `laplacian` dumps a graph Laplacian with summary stats.
//!
//! Numeric parameters resolve in one fixed precedence order: explicit flag,
//! then `--config` JSON value (flat keys named like the flags), then the
//! built-in default. Every `separate` run writes a `manifest.json` with the
//! fully resolved configuration before any result file; re-running with
//! `--config manifest.json` on the same input reproduces the outputs.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{self, GraphConfig, SparseSymMatrix};
use crate::metrics::{self, AverageMode, MaskSequence, MetricsReport};
use crate::solver::{self, SolverConfig, UpdateMode};
use crate::synth::{self, SynthSpec};
use crate::video::{self, VideoMatrix};

#[derive(Parser)]
#[command(
    name = "dgsep",
    version,
    about = "Moving-object detection by dual-graph regularized low-rank + sparse separation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)] // parsed once, size is irrelevant
pub enum Command {
    /// Separate a frame directory into background, foreground, and masks.
    Separate(SeparateArgs),
    /// Score a recovered background and/or foreground masks against truth.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic fixture with exact ground truth.
    Synth(SynthArgs),
    /// Build a graph Laplacian, print summary stats, optionally dump it.
    Laplacian(LaplacianArgs),
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Separate(args) => cmd_separate(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Synth(args) => cmd_synth(&args),
        Command::Laplacian(args) => cmd_laplacian(&args),
    }
}

#[derive(Args)]
pub struct SeparateArgs {
    /// Directory of input frames.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub output: PathBuf,
    /// Frame file glob within the input directory.
    #[arg(long)]
    pub pattern: Option<String>,
    /// JSON config file (flat keys matching flag names, or a manifest).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Weighted-nuclear-norm weight [default: 1/sqrt(max(n, m))].
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Foreground L1 weight, an intensity threshold [default: 0.2].
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Spatial graph weight [default: 2].
    #[arg(long)]
    pub gamma1: Option<f64>,
    /// Temporal graph weight [default: 2].
    #[arg(long)]
    pub gamma2: Option<f64>,
    /// Penalty parameter of the U = L constraint [default: 1].
    #[arg(long)]
    pub rho1: Option<f64>,
    /// Penalty parameter of the D - L - S + V = 0 constraint [default: 1].
    #[arg(long)]
    pub rho2: Option<f64>,
    /// Spatial kernel width [default: 1].
    #[arg(long)]
    pub hs: Option<f64>,
    /// Temporal kernel width [default: 1].
    #[arg(long)]
    pub ht: Option<f64>,
    /// Patch side length (odd) [default: 3].
    #[arg(long)]
    pub patch: Option<usize>,
    /// Spatial neighbor count [default: 4].
    #[arg(long)]
    pub knn: Option<usize>,
    /// Gaussian pre-smoothing sigma for patch comparison [default: 0 = off].
    #[arg(long)]
    pub presmooth_sigma: Option<f64>,
    /// Weight-scheme scale [default: median singular value of D].
    #[arg(long)]
    pub sigma_scale: Option<f64>,
    /// Gradient step size [default: 0.9/(2 gamma1 + 2 gamma2 + rho1 + rho2)].
    #[arg(long)]
    pub dt: Option<f64>,
    /// Maximum outer iterations [default: 200].
    #[arg(long)]
    pub tout: Option<usize>,
    /// Gradient steps per outer iteration [default: 5].
    #[arg(long)]
    pub tin: Option<usize>,
    /// Relative-change stopping tolerance [default: 1e-4].
    #[arg(long)]
    pub tol: Option<f64>,
    /// S-update variant: paper | consistent [default: paper].
    #[arg(long)]
    pub update_mode: Option<UpdateMode>,
    /// L1 threshold for motionless-frame removal (omit to keep all frames).
    #[arg(long)]
    pub motion_threshold: Option<f64>,
    /// Hard threshold for foreground masks [default: 0.05].
    #[arg(long)]
    pub mask_threshold: Option<f64>,
}

/// Fully resolved parameters of a `separate` run, as stored in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub pattern: String,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub hs: f64,
    pub ht: f64,
    pub patch: usize,
    pub knn: usize,
    pub presmooth_sigma: f64,
    pub sigma_scale: f64,
    pub dt: f64,
    pub tout: usize,
    pub tin: usize,
    pub tol: f64,
    pub update_mode: UpdateMode,
    pub motion_threshold: Option<f64>,
    pub mask_threshold: f64,
}

impl RunConfig {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            rho1: self.rho1,
            rho2: self.rho2,
            dt: self.dt,
            sigma_scale: self.sigma_scale,
            t_out: self.tout,
            t_in: self.tin,
            tol: self.tol,
            update_mode: self.update_mode,
        }
    }

    pub fn graph_config(&self) -> GraphConfig {
        GraphConfig {
            h_s: self.hs,
            h_t: self.ht,
            p: self.patch,
            k: self.knn,
            gaussian_presmooth_sigma: self.presmooth_sigma,
        }
    }

    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Run provenance, serialized to `manifest.json` before any result file.
#[derive(Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub created_unix: u64,
    pub input: String,
    pub output: String,
    /// Original 0-based indices of frames that survived preprocessing.
    pub kept_frames: Vec<usize>,
    pub config: RunConfig,
    pub config_hash: String,
}

const CONFIG_KEYS: [&str; 20] = [
    "pattern",
    "lambda1",
    "lambda2",
    "gamma1",
    "gamma2",
    "rho1",
    "rho2",
    "hs",
    "ht",
    "patch",
    "knn",
    "presmooth-sigma",
    "sigma-scale",
    "dt",
    "tout",
    "tin",
    "tol",
    "update-mode",
    "motion-threshold",
    "mask-threshold",
];

/// Values loaded from `--config`: either a flat flag-name map or a manifest
/// (in which case its `config` object is used).
struct FileOverrides(serde_json::Map<String, serde_json::Value>);

impl FileOverrides {
    fn empty() -> Self {
        FileOverrides(serde_json::Map::new())
    }

    fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&raw)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let mut map = match value {
            serde_json::Value::Object(map) => map,
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "{}: config must be a JSON object",
                    path.display()
                )))
            }
        };
        if let Some(serde_json::Value::Object(inner)) = map.remove("config") {
            map = inner; // a manifest: use its resolved config block
        }
        for key in map.keys() {
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "{}: unknown config key {key:?}",
                    path.display()
                )));
            }
        }
        Ok(FileOverrides(map))
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.0.get(key) {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| Error::InvalidConfig(format!("config key {key:?} must be a number"))),
        }
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        match self.0.get(key) {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(v) => v
                .as_u64()
                .map(|u| Some(u as usize))
                .ok_or_else(|| {
                    Error::InvalidConfig(format!("config key {key:?} must be a nonnegative integer"))
                }),
        }
    }

    fn string(&self, key: &str) -> Result<Option<String>> {
        match self.0.get(key) {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(v) => v
                .as_str()
                .map(|s| Some(s.to_string()))
                .ok_or_else(|| Error::InvalidConfig(format!("config key {key:?} must be a string"))),
        }
    }

    fn update_mode(&self, key: &str) -> Result<Option<UpdateMode>> {
        match self.string(key)? {
            None => Ok(None),
            Some(s) => s.parse().map(Some).map_err(Error::InvalidConfig),
        }
    }
}

fn resolve_run_config(
    args: &SeparateArgs,
    file: &FileOverrides,
    pattern: String,
    motion_threshold: Option<f64>,
    d: &VideoMatrix,
) -> Result<RunConfig> {
    let base = SolverConfig::defaults_for(d)?;
    let graph_base = GraphConfig::default();
    let lambda1 = args.lambda1.or(file.f64("lambda1")?).unwrap_or(base.lambda1);
    let gamma1 = args.gamma1.or(file.f64("gamma1")?).unwrap_or(base.gamma1);
    let gamma2 = args.gamma2.or(file.f64("gamma2")?).unwrap_or(base.gamma2);
    let rho1 = args.rho1.or(file.f64("rho1")?).unwrap_or(base.rho1);
    let rho2 = args.rho2.or(file.f64("rho2")?).unwrap_or(base.rho2);
    let config = RunConfig {
        pattern,
        lambda1,
        lambda2: args
            .lambda2
            .or(file.f64("lambda2")?)
            .unwrap_or(base.lambda2),
        gamma1,
        gamma2,
        rho1,
        rho2,
        hs: args.hs.or(file.f64("hs")?).unwrap_or(graph_base.h_s),
        ht: args.ht.or(file.f64("ht")?).unwrap_or(graph_base.h_t),
        patch: args.patch.or(file.usize("patch")?).unwrap_or(graph_base.p),
        knn: args.knn.or(file.usize("knn")?).unwrap_or(graph_base.k),
        presmooth_sigma: args
            .presmooth_sigma
            .or(file.f64("presmooth-sigma")?)
            .unwrap_or(graph_base.gaussian_presmooth_sigma),
        sigma_scale: args
            .sigma_scale
            .or(file.f64("sigma-scale")?)
            .unwrap_or(base.sigma_scale),
        dt: args
            .dt
            .or(file.f64("dt")?)
            .unwrap_or_else(|| SolverConfig::stable_dt(gamma1, gamma2, rho1, rho2)),
        tout: args.tout.or(file.usize("tout")?).unwrap_or(base.t_out),
        tin: args.tin.or(file.usize("tin")?).unwrap_or(base.t_in),
        tol: args.tol.or(file.f64("tol")?).unwrap_or(base.tol),
        update_mode: args
            .update_mode
            .or(file.update_mode("update-mode")?)
            .unwrap_or(base.update_mode),
        motion_threshold,
        mask_threshold: args
            .mask_threshold
            .or(file.f64("mask-threshold")?)
            .unwrap_or(0.05),
    };
    config.solver_config().validate()?;
    config.graph_config().validate()?;
    Ok(config)
}

fn write_frames(
    dir: &Path,
    data: &nalgebra::DMatrix<f64>,
    n1: usize,
    n2: usize,
    prefix: &str,
) -> Result<usize> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (seq, clamped) = video::from_matrix(data, n1, n2)?;
    for (j, frame) in seq.frames().iter().enumerate() {
        video::write_pgm(&dir.join(format!("{prefix}_{j:04}.pgm")), frame)?;
    }
    Ok(clamped)
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn cmd_separate(args: &SeparateArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => FileOverrides::load(path)?,
        None => FileOverrides::empty(),
    };
    let pattern = args
        .pattern
        .clone()
        .or(file.string("pattern")?)
        .unwrap_or_else(|| "*.pgm".to_string());
    let motion_threshold = args.motion_threshold.or(file.f64("motion-threshold")?);

    let seq = video::load_frames(&args.input, &pattern)?;
    let full = video::to_matrix(&seq);
    let (d, kept_frames) = match motion_threshold {
        Some(threshold) => video::remove_motionless(&full, threshold)?,
        None => {
            let indices = (0..full.m()).collect();
            (full, indices)
        }
    };

    let config = resolve_run_config(args, &file, pattern, motion_threshold, &d)?;

    std::fs::create_dir_all(&args.output).map_err(|e| Error::io(&args.output, e))?;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix: unix_now(),
        input: args.input.display().to_string(),
        output: args.output.display().to_string(),
        kept_frames,
        config_hash: config.config_hash(),
        config,
    };
    let manifest_path = args.output.join("manifest.json");
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, manifest_json).map_err(|e| Error::io(&manifest_path, e))?;
    let config = &manifest.config;

    eprintln!(
        "separating {} frames of {}x{} ({} pixels)",
        d.m(),
        d.n1(),
        d.n2(),
        d.n()
    );
    let graph_config = config.graph_config();
    let phi_s = graph::normalized_laplacian(&graph::spatial_adjacency(&d, &graph_config)?)?;
    let phi_t = graph::normalized_laplacian(&graph::temporal_adjacency(&d, &graph_config)?)?;
    let result = solver::run(&d, &phi_s, &phi_t, &config.solver_config())?;
    eprintln!(
        "solved in {} iterations (last rel_dL = {:.3e})",
        result.iterations,
        result.history.last().map(|r| r.rel_dl).unwrap_or(0.0)
    );

    let clamped = write_frames(&args.output.join("bg"), &result.l, d.n1(), d.n2(), "bg")?;
    if clamped > 0 {
        eprintln!("background: clamped {clamped} out-of-range values for export");
    }
    write_frames(
        &args.output.join("fg"),
        &result.s.abs(),
        d.n1(),
        d.n2(),
        "fg",
    )?;
    let mean = video::mean_background(&result.l, d.n1(), d.n2())?;
    video::write_pgm(&args.output.join("background_mean.pgm"), &mean)?;
    let masks = metrics::threshold_mask(&result.s, d.n1(), d.n2(), config.mask_threshold)?;
    masks.write_pgm_dir(&args.output.join("masks"))?;
    solver::write_history_csv(&args.output.join("history.csv"), &result.history)?;
    Ok(())
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Recovered background image (PGM).
    #[arg(long, requires = "truth")]
    pub estimate: Option<PathBuf>,
    /// Ground-truth background image (PGM).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Directory of predicted mask PGMs.
    #[arg(long, requires = "truth_masks")]
    pub masks: Option<PathBuf>,
    /// Directory of ground-truth mask PGMs.
    #[arg(long)]
    pub truth_masks: Option<PathBuf>,
    /// Mask file glob within the mask directories.
    #[arg(long, default_value = "*.pgm")]
    pub mask_pattern: String,
    /// Average detection metrics per frame instead of pooling counts.
    #[arg(long)]
    pub per_frame: bool,
    /// Write the metrics CSV here in addition to printing.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    if args.estimate.is_none() && args.masks.is_none() {
        return Err(Error::Usage(
            "nothing to evaluate: pass --estimate/--truth and/or --masks/--truth-masks".into(),
        ));
    }
    let mut report = MetricsReport {
        re: 0.0,
        psnr: 0.0,
        precision: 0.0,
        recall: 0.0,
        f_measure: 0.0,
    };
    if let (Some(est), Some(truth)) = (&args.estimate, &args.truth) {
        let est = video::read_pnm(est)?;
        let truth = video::read_pnm(truth)?;
        report.re = metrics::relative_error(&est, &truth)?;
        report.psnr = metrics::psnr(&est, &truth)?;
        println!("RE      = {}", metrics::fmt_sig6(report.re));
        println!("PSNR    = {} dB", metrics::fmt_sig6(report.psnr));
    }
    if let (Some(pred_dir), Some(truth_dir)) = (&args.masks, &args.truth_masks) {
        let pred = MaskSequence::from_pgm_dir(pred_dir, &args.mask_pattern)?;
        let truth = MaskSequence::from_pgm_dir(truth_dir, &args.mask_pattern)?;
        let mode = if args.per_frame {
            AverageMode::PerFrame
        } else {
            AverageMode::Pooled
        };
        let detection = metrics::detection_metrics(&pred, &truth, mode)?;
        report.precision = detection.precision;
        report.recall = detection.recall;
        report.f_measure = detection.f_measure;
        println!("Pr      = {}", metrics::fmt_sig6(report.precision));
        println!("Re      = {}", metrics::fmt_sig6(report.recall));
        println!("Fm      = {}", metrics::fmt_sig6(report.f_measure));
        if detection.degenerate {
            println!("note: a degenerate 0/0 ratio was reported as 0");
        }
    }
    if let Some(path) = &args.output {
        std::fs::write(path, report.to_csv()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[derive(Args)]
pub struct SynthArgs {
    /// Output directory for the fixture.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 40)]
    pub n1: usize,
    #[arg(long, default_value_t = 40)]
    pub n2: usize,
    #[arg(long, default_value_t = 12)]
    pub frames: usize,
    #[arg(long, default_value_t = 2)]
    pub bg_rank: usize,
    #[arg(long, default_value_t = 6)]
    pub object_height: usize,
    #[arg(long, default_value_t = 6)]
    pub object_width: usize,
    /// Top-left row of the object in the first frame.
    #[arg(long, default_value_t = 17)]
    pub start_row: i64,
    /// Top-left column of the object in the first frame.
    #[arg(long, default_value_t = 2)]
    pub start_col: i64,
    /// Row velocity in pixels per frame.
    #[arg(long, default_value_t = 0)]
    pub vel_row: i64,
    /// Column velocity in pixels per frame.
    #[arg(long, default_value_t = 2)]
    pub vel_col: i64,
    /// Intensity added on the object.
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.01)]
    pub outlier_fraction: f64,
    #[arg(long, default_value_t = 0.8)]
    pub outlier_magnitude: f64,
    #[arg(long, default_value_t = 15)]
    pub seed: u64,
}

impl SynthArgs {
    pub fn to_spec(&self) -> SynthSpec {
        SynthSpec {
            n1: self.n1,
            n2: self.n2,
            m: self.frames,
            bg_rank: self.bg_rank,
            object_size: (self.object_height, self.object_width),
            trajectory: synth::linear_trajectory(
                (self.start_row, self.start_col),
                (self.vel_row, self.vel_col),
                self.frames,
            ),
            object_intensity_delta: self.delta,
            outlier_fraction: self.outlier_fraction,
            outlier_magnitude: self.outlier_magnitude,
            rng_seed: self.seed,
        }
    }
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let spec = args.to_spec();
    let out = synth::generate(&spec)?;
    std::fs::create_dir_all(&args.output).map_err(|e| Error::io(&args.output, e))?;
    let spec_path = args.output.join("spec.json");
    let spec_json = serde_json::to_string_pretty(&spec).expect("spec serializes");
    std::fs::write(&spec_path, spec_json).map_err(|e| Error::io(&spec_path, e))?;
    write_frames(
        &args.output.join("frames"),
        out.d.data(),
        spec.n1,
        spec.n2,
        "frame",
    )?;
    video::write_matrix_dump(
        &args.output.join("l_true.dgm"),
        out.l_true.data(),
        spec.n1,
        spec.n2,
    )?;
    video::write_matrix_dump(&args.output.join("s_true.dgm"), &out.s_true, spec.n1, spec.n2)?;
    out.masks.write_pgm_dir(&args.output.join("masks"))?;
    println!(
        "wrote {} frames of {}x{} to {}",
        spec.m,
        spec.n1,
        spec.n2,
        args.output.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct LaplacianArgs {
    /// Directory of input frames.
    #[arg(long)]
    pub input: PathBuf,
    /// Frame file glob within the input directory.
    #[arg(long, default_value = "*.pgm")]
    pub pattern: String,
    /// Build the temporal Laplacian.
    #[arg(long, conflicts_with = "spatial")]
    pub temporal: bool,
    /// Build the spatial Laplacian.
    #[arg(long)]
    pub spatial: bool,
    /// Write the SPSYM text dump here.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub hs: Option<f64>,
    #[arg(long)]
    pub ht: Option<f64>,
    #[arg(long)]
    pub patch: Option<usize>,
    #[arg(long)]
    pub knn: Option<usize>,
    #[arg(long)]
    pub presmooth_sigma: Option<f64>,
}

pub fn cmd_laplacian(args: &LaplacianArgs) -> Result<()> {
    if args.temporal == args.spatial {
        return Err(Error::Usage(
            "pass exactly one of --temporal or --spatial".into(),
        ));
    }
    let base = GraphConfig::default();
    let config = GraphConfig {
        h_s: args.hs.unwrap_or(base.h_s),
        h_t: args.ht.unwrap_or(base.h_t),
        p: args.patch.unwrap_or(base.p),
        k: args.knn.unwrap_or(base.k),
        gaussian_presmooth_sigma: args.presmooth_sigma.unwrap_or(base.gaussian_presmooth_sigma),
    };
    let seq = video::load_frames(&args.input, &args.pattern)?;
    let d = video::to_matrix(&seq);
    let adjacency: SparseSymMatrix = if args.temporal {
        graph::temporal_adjacency(&d, &config)?
    } else {
        graph::spatial_adjacency(&d, &config)?
    };
    let phi = graph::normalized_laplacian(&adjacency)?;
    let max_eig = phi.max_eigenvalue_estimate(200);
    let min_eig = phi.min_eigenvalue_estimate(200);
    println!(
        "dim = {}, nnz = {}, max_eig ~ {:.6}, min_eig ~ {:.6}",
        phi.dim(),
        phi.nnz(),
        max_eig,
        min_eig
    );
    if let Some(path) = &args.output {
        phi.write_spsym(path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
