//! Moving-object detection by dual-graph regularized low-rank + sparse
//! video separation.
//!
//! A video with a static background is reshaped into a matrix `D` (one
//! column per frame) and decomposed as `D ≈ L + S`, where `L` is a
//! low-rank background and `S` a sparse foreground. Low-rankness is
//! promoted with a weighted nuclear norm, spatial and temporal structure
//! with graph-Laplacian quadratic penalties, and robustness to outliers
//! with an elementwise L1 fidelity term. The decomposition is computed by
//! ADMM with a gradient-descent inner loop for the background update.
//!
//! Modules:
//! - [`video`]: frame I/O (PGM), video/matrix reshaping, motionless-frame
//!   removal, background extraction.
//! - [`graph`]: sparse spatial/temporal adjacency and symmetrically
//!   normalized Laplacians from patchwise similarity.
//! - [`prox`]: shrinkage, weighted singular value thresholding, and the
//!   exponential singular-value weight scheme.
//! - [`solver`]: the ADMM driver with residual logging and checkpoints.
//! - [`metrics`]: background (RE, PSNR) and foreground (Pr/Re/Fm) quality
//!   metrics with hard-threshold mask extraction.
//! - [`synth`]: seeded synthetic fixtures with exact ground truth.
//! - [`cli`]: subcommand implementations for the `dgsep` binary.

pub mod cli;
pub mod graph;
pub mod metrics;
pub mod prox;
pub mod solver;
pub mod synth;
pub mod video;

mod error;

pub use error::{Error, Result};
pub use graph::{GraphConfig, SparseSymMatrix};
pub use metrics::{DetectionMetrics, MaskSequence, MetricsReport};
pub use prox::{SvdFactors, WeightVector};
pub use solver::{SeparationResult, SolverConfig, SolverState, UpdateMode};
pub use synth::{SynthOutput, SynthSpec};
pub use video::{FrameSequence, VideoMatrix};
