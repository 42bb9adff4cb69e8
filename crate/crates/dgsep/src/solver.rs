//! ADMM driver for the dual-graph regularized separation model.
//!
//! The model splits `D` into a background `L` and foreground `S` through
//! auxiliary variables `U` (weighted-nuclear-norm carrier, constraint
//! `U = L`) and `V` (robust L1 fidelity carrier, constraint
//! `D - L - S + V = 0`), with multipliers `U~`, `V~`. One outer iteration
//! runs, in order: a `t_in`-step gradient descent on the smooth `L`
//! subproblem, the closed-form `S` update, the weighted-SVT `U` update
//! followed by the weight refresh (effective next iteration), the
//! closed-form `V` update, and the multiplier ascent steps.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{laplacian_quadratic, Side, SparseSymMatrix};
use crate::prox::{compute_weights, shrink, singular_values, weighted_nuclear_norm, weighted_svt, WeightVector};
use crate::video::{read_matrix_dump, write_matrix_dump, VideoMatrix};

/// Which `S` update the solver runs.
///
/// `Paper` is the direct closed form `S <- shrink(D - L, lambda2)`, which
/// leaves the `V` terms out of the subproblem. `Consistent` derives `S`
/// from the full augmented Lagrangian instead:
/// `S <- shrink(D - L + V + V~, lambda2 / rho2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateMode {
    Paper,
    Consistent,
}

impl std::str::FromStr for UpdateMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "paper" => Ok(UpdateMode::Paper),
            "consistent" => Ok(UpdateMode::Consistent),
            other => Err(format!("unknown update mode {other:?} (paper|consistent)")),
        }
    }
}

impl std::fmt::Display for UpdateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UpdateMode::Paper => "paper",
            UpdateMode::Consistent => "consistent",
        })
    }
}

/// All solver hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Weighted-nuclear-norm weight on the background.
    pub lambda1: f64,
    /// L1 weight on the foreground.
    pub lambda2: f64,
    /// Spatial graph regularization weight.
    pub gamma1: f64,
    /// Temporal graph regularization weight.
    pub gamma2: f64,
    /// Penalty parameter of the `U = L` constraint.
    pub rho1: f64,
    /// Penalty parameter of the `D - L - S + V = 0` constraint.
    pub rho2: f64,
    /// Gradient step size for the `L` subproblem.
    pub dt: f64,
    /// Scale `sigma` in the weight formula `w_i = exp(-s_i^2 / sigma^2)`.
    pub sigma_scale: f64,
    /// Maximum outer iterations.
    pub t_out: usize,
    /// Gradient steps per outer iteration.
    pub t_in: usize,
    /// Relative-change tolerance of the stopping criterion.
    pub tol: f64,
    pub update_mode: UpdateMode,
}

impl SolverConfig {
    /// Defaults tuned on the synthetic fixtures.
    ///
    /// The weight scheme drives the scales: with `sigma_scale` at
    /// `0.55 * sigma_1(D)`, background-sized singular values get weights
    /// near 0 (barely shrunk) while foreground-sized ones keep weights
    /// near 1, so `lambda1 = sigma_1(D)` makes `w_i lambda1` exceed the
    /// foreground singular values and the weighted SVT removes them.
    /// `lambda2` is an intensity threshold on [0, 1] data (the final
    /// foreground is `shrink(D - L, lambda2)` entrywise), so it does not
    /// scale with the video size; 0.2 keeps moderate-contrast objects
    /// while suppressing background-level residuals.
    /// `gamma1 = gamma2 = 2`: beyond smoothing, the graph terms damp the
    /// multiplier oscillation the S and V updates can otherwise fall into
    /// on small videos. `rho1 = rho2 = 1`, and `dt` from
    /// [`SolverConfig::stable_dt`].
    pub fn defaults_for(d: &VideoMatrix) -> Result<SolverConfig> {
        let top = singular_values(d.data())?[0].max(f64::MIN_POSITIVE);
        let (gamma1, gamma2, rho1, rho2) = (2.0, 2.0, 1.0, 1.0);
        let cfg = SolverConfig {
            lambda1: top,
            lambda2: 0.2,
            gamma1,
            gamma2,
            rho1,
            rho2,
            dt: Self::stable_dt(gamma1, gamma2, rho1, rho2),
            sigma_scale: 0.55 * top,
            t_out: 200,
            t_in: 5,
            tol: 1e-4,
            update_mode: UpdateMode::Paper,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Step size guaranteeing descent of the smooth `L` objective:
    /// `0.9 / (2 gamma1 + 2 gamma2 + rho1 + rho2)`, using the eigenvalue
    /// bound 2 of normalized Laplacians.
    pub fn stable_dt(gamma1: f64, gamma2: f64, rho1: f64, rho2: f64) -> f64 {
        0.9 / (2.0 * gamma1 + 2.0 * gamma2 + rho1 + rho2)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("dt", self.dt),
            ("sigma_scale", self.sigma_scale),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.gamma1 < 0.0 || self.gamma2 < 0.0 {
            return Err(Error::InvalidConfig("gamma1/gamma2 must be nonnegative".into()));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidConfig("tol must be in (0, 1)".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization, hex-encoded.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex_string(&hasher.finalize())
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Full iterate of the ADMM scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub l: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub u_tilde: DMatrix<f64>,
    pub v_tilde: DMatrix<f64>,
    pub weights: WeightVector,
    pub iter: usize,
}

impl SolverState {
    /// Data-feasible start: `L = D`, `S = 0`, `U = L`, `V = 0`, zero
    /// multipliers. The initial weights come from the weight formula
    /// applied to the initial iterate (`L - U~ = D`); starting from
    /// all-ones instead makes the first SVT threshold `lambda1` uniformly,
    /// which at the tuned `lambda1` scale wipes out `U` and destabilizes
    /// the multipliers.
    pub fn init(d: &VideoMatrix, cfg: &SolverConfig) -> Result<SolverState> {
        let (n, m) = (d.n(), d.m());
        let weights = compute_weights(singular_values(d.data())?.as_slice(), cfg.sigma_scale)?;
        Ok(SolverState {
            l: d.data().clone(),
            s: DMatrix::zeros(n, m),
            u: d.data().clone(),
            v: DMatrix::zeros(n, m),
            u_tilde: DMatrix::zeros(n, m),
            v_tilde: DMatrix::zeros(n, m),
            weights,
            iter: 0,
        })
    }

    fn all_finite(&self) -> bool {
        [&self.l, &self.s, &self.u, &self.v, &self.u_tilde, &self.v_tilde]
            .iter()
            .all(|m| m.iter().all(|v| v.is_finite()))
    }
}

/// One per-iteration history record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRecord {
    pub iter: usize,
    /// `||L+ - L||_F / ||L||_F` (absolute change if the previous norm is 0).
    pub rel_dl: f64,
    /// Same for `S`.
    pub rel_ds: f64,
    /// `||U - L||_F`.
    pub residual_ul: f64,
    /// `||D - L - S + V||_F`, the residual the multiplier update drives to 0.
    pub residual_dlsv: f64,
    /// Model objective with the current weights; diagnostics only.
    pub objective: f64,
}

/// Final decomposition plus the run's diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationResult {
    pub l: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub iterations: usize,
    pub history: Vec<HistoryRecord>,
}

/// Gradient of the smooth `L` subproblem:
/// `gamma1 Phi_s L + gamma2 L Phi_t + rho1 (L - U - U~) + rho2 (L - D + S - V - V~)`.
pub fn gradient_l(
    state: &SolverState,
    d: &VideoMatrix,
    phi_s: &SparseSymMatrix,
    phi_t: &SparseSymMatrix,
    cfg: &SolverConfig,
) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(state.l.nrows(), state.l.ncols());
    if cfg.gamma1 != 0.0 {
        g += cfg.gamma1 * phi_s.mul_left(&state.l);
    }
    if cfg.gamma2 != 0.0 {
        g += cfg.gamma2 * phi_t.mul_right(&state.l);
    }
    g += cfg.rho1 * (&state.l - &state.u - &state.u_tilde);
    g += cfg.rho2 * (&state.l - d.data() + &state.s - &state.v - &state.v_tilde);
    g
}

/// The smooth `L` objective the gradient steps descend:
/// `gamma1/2 tr(L^T Phi_s L) + gamma2/2 tr(L Phi_t L^T)
///  + rho1/2 ||U - L + U~||_F^2 + rho2/2 ||D - L - S + V + V~||_F^2`.
pub fn l_objective(
    l: &DMatrix<f64>,
    state: &SolverState,
    d: &VideoMatrix,
    phi_s: &SparseSymMatrix,
    phi_t: &SparseSymMatrix,
    cfg: &SolverConfig,
) -> f64 {
    let mut f = 0.0;
    if cfg.gamma1 != 0.0 {
        f += 0.5 * cfg.gamma1 * laplacian_quadratic(phi_s, l, Side::Left).unwrap_or(f64::NAN);
    }
    if cfg.gamma2 != 0.0 {
        f += 0.5 * cfg.gamma2 * laplacian_quadratic(phi_t, l, Side::Right).unwrap_or(f64::NAN);
    }
    f += 0.5 * cfg.rho1 * (&state.u - l + &state.u_tilde).norm_squared();
    f += 0.5 * cfg.rho2 * (d.data() - l - &state.s + &state.v + &state.v_tilde).norm_squared();
    f
}

/// Runs `t_in` gradient steps `L <- L - dt * grad f(L)` in place.
pub fn update_l(
    state: &mut SolverState,
    d: &VideoMatrix,
    phi_s: &SparseSymMatrix,
    phi_t: &SparseSymMatrix,
    cfg: &SolverConfig,
) -> Result<()> {
    for _ in 0..cfg.t_in {
        let g = gradient_l(state, d, phi_s, phi_t, cfg);
        state.l -= cfg.dt * g;
        if !l_objective(&state.l, state, d, phi_s, phi_t, cfg).is_finite() {
            return Err(Error::DivergentLUpdate);
        }
    }
    Ok(())
}

/// Closed-form `S` update; see [`UpdateMode`].
pub fn update_s(state: &SolverState, d: &VideoMatrix, cfg: &SolverConfig) -> DMatrix<f64> {
    match cfg.update_mode {
        UpdateMode::Paper => shrink(&(d.data() - &state.l), cfg.lambda2),
        UpdateMode::Consistent => shrink(
            &(d.data() - &state.l + &state.v + &state.v_tilde),
            cfg.lambda2 / cfg.rho2,
        ),
    }
}

/// Weighted-SVT `U` update on `L - U~`, followed by the weight refresh
/// from the singular values of the same matrix (used by the next outer
/// iteration). Returns the new `U` and refreshed weights.
pub fn update_u(state: &SolverState, cfg: &SolverConfig) -> Result<(DMatrix<f64>, WeightVector)> {
    let target = &state.l - &state.u_tilde;
    let (u, factors) = weighted_svt(&target, &state.weights, cfg.lambda1 / cfg.rho1)?;
    let weights = compute_weights(factors.singulars.as_slice(), cfg.sigma_scale)?;
    Ok((u, weights))
}

/// Closed-form `V` update `V <- shrink(L + S - D - V~, 1 / rho2)`, the prox
/// scale of the `V` subproblem of the augmented Lagrangian.
pub fn update_v(state: &SolverState, d: &VideoMatrix, cfg: &SolverConfig) -> DMatrix<f64> {
    shrink(
        &(&state.l + &state.s - d.data() - &state.v_tilde),
        1.0 / cfg.rho2,
    )
}

/// Dual ascent: `U~ += U - L`, `V~ += D - L - S + V`.
pub fn update_multipliers(state: &mut SolverState, d: &VideoMatrix) {
    state.u_tilde += &state.u - &state.l;
    state.v_tilde += d.data() - &state.l - &state.s + &state.v;
}

/// Stopping criterion: both relative changes below `tol`. Zero previous
/// norms report not-converged rather than dividing by zero.
pub fn converged(
    prev_l: &DMatrix<f64>,
    prev_s: &DMatrix<f64>,
    l: &DMatrix<f64>,
    s: &DMatrix<f64>,
    tol: f64,
) -> bool {
    let (nl, ns) = (prev_l.norm(), prev_s.norm());
    if nl == 0.0 || ns == 0.0 {
        return false;
    }
    (l - prev_l).norm() / nl < tol && (s - prev_s).norm() / ns < tol
}

/// Full model objective with the current weights (diagnostics only; the
/// weights change between iterations, so no monotonicity is implied):
/// `||D - L - S||_1 + lambda1 ||L||_{W,*} + lambda2 ||S||_1 + graph terms`.
pub fn objective(
    state: &SolverState,
    d: &VideoMatrix,
    phi_s: &SparseSymMatrix,
    phi_t: &SparseSymMatrix,
    cfg: &SolverConfig,
) -> Result<f64> {
    let fidelity = (d.data() - &state.l - &state.s).abs().sum();
    let wnn = weighted_nuclear_norm(&state.l, &state.weights)?;
    let sparse = state.s.abs().sum();
    let graph_s = 0.5 * cfg.gamma1 * laplacian_quadratic(phi_s, &state.l, Side::Left)?;
    let graph_t = 0.5 * cfg.gamma2 * laplacian_quadratic(phi_t, &state.l, Side::Right)?;
    Ok(fidelity + cfg.lambda1 * wnn + cfg.lambda2 * sparse + graph_s + graph_t)
}

fn relative_change(prev: &DMatrix<f64>, curr: &DMatrix<f64>) -> f64 {
    let denom = prev.norm();
    let change = (curr - prev).norm();
    if denom > 0.0 {
        change / denom
    } else {
        change
    }
}

/// Runs the full algorithm from the standard initialization.
pub fn run(
    d: &VideoMatrix,
    phi_s: &SparseSymMatrix,
    phi_t: &SparseSymMatrix,
    cfg: &SolverConfig,
) -> Result<SeparationResult> {
    let state = SolverState::init(d, cfg)?;
    let (result, _) = run_from(state, d, phi_s, phi_t, cfg)?;
    Ok(result)
}

/// Continues the algorithm from an existing state (fresh or loaded from a
/// checkpoint) until convergence or `t_out` total outer iterations. Also
/// returns the final state for checkpointing.
pub fn run_from(
    mut state: SolverState,
    d: &VideoMatrix,
    phi_s: &SparseSymMatrix,
    phi_t: &SparseSymMatrix,
    cfg: &SolverConfig,
) -> Result<(SeparationResult, SolverState)> {
    cfg.validate()?;
    if phi_s.dim() != d.n() {
        return Err(Error::DimensionMismatch {
            context: "spatial Laplacian",
            expected_rows: d.n(),
            expected_cols: d.n(),
            found_rows: phi_s.dim(),
            found_cols: phi_s.dim(),
        });
    }
    if phi_t.dim() != d.m() {
        return Err(Error::DimensionMismatch {
            context: "temporal Laplacian",
            expected_rows: d.m(),
            expected_cols: d.m(),
            found_rows: phi_t.dim(),
            found_cols: phi_t.dim(),
        });
    }

    let mut history = Vec::new();
    while state.iter < cfg.t_out {
        let iter = state.iter + 1;
        let prev_l = state.l.clone();
        let prev_s = state.s.clone();

        update_l(&mut state, d, phi_s, phi_t, cfg)?;
        state.s = update_s(&state, d, cfg);
        let (u, weights) = update_u(&state, cfg)?;
        state.u = u;
        state.weights = weights;
        state.v = update_v(&state, d, cfg);
        update_multipliers(&mut state, d);
        state.iter = iter;

        if !state.all_finite() {
            return Err(Error::NonFiniteState { iter });
        }

        history.push(HistoryRecord {
            iter,
            rel_dl: relative_change(&prev_l, &state.l),
            rel_ds: relative_change(&prev_s, &state.s),
            residual_ul: (&state.u - &state.l).norm(),
            residual_dlsv: (d.data() - &state.l - &state.s + &state.v).norm(),
            objective: objective(&state, d, phi_s, phi_t, cfg)?,
        });

        if converged(&prev_l, &prev_s, &state.l, &state.s, cfg.tol) {
            break;
        }
    }

    let result = SeparationResult {
        l: state.l.clone(),
        s: state.s.clone(),
        iterations: history.len(),
        history,
    };
    Ok((result, state))
}

/// Writes the history CSV with the fixed column set.
pub fn write_history_csv(path: &Path, history: &[HistoryRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    let mut emit = |s: String| out.write_all(s.as_bytes()).map_err(|e| Error::io(path, e));
    emit("iter,rel_dL,rel_dS,residual_UL,residual_DLSV,objective\n".to_string())?;
    for r in history {
        emit(format!(
            "{},{},{},{},{},{}\n",
            r.iter, r.rel_dl, r.rel_ds, r.residual_ul, r.residual_dlsv, r.objective
        ))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct CheckpointSidecar {
    iter: usize,
    weights: Vec<f64>,
    sigma_scale: f64,
    config_hash: String,
}

const CHECKPOINT_MATRICES: [&str; 6] = ["l", "s", "u", "v", "u_tilde", "v_tilde"];

/// Writes the six state matrices as `DGM1` dumps plus a JSON sidecar with
/// the iteration count, weights, and the config hash.
pub fn save_checkpoint(
    dir: &Path,
    state: &SolverState,
    n1: usize,
    n2: usize,
    cfg: &SolverConfig,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mats = [&state.l, &state.s, &state.u, &state.v, &state.u_tilde, &state.v_tilde];
    for (name, m) in CHECKPOINT_MATRICES.iter().zip(mats) {
        write_matrix_dump(&dir.join(format!("{name}.dgm")), m, n1, n2)?;
    }
    let sidecar = CheckpointSidecar {
        iter: state.iter,
        weights: state.weights.weights().to_vec(),
        sigma_scale: state.weights.sigma_scale(),
        config_hash: cfg.config_hash(),
    };
    let path = dir.join("checkpoint.json");
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

/// Loads a checkpoint; returns the state and the stored config hash so the
/// caller can verify it resumes under the same configuration.
pub fn load_checkpoint(dir: &Path) -> Result<(SolverState, String)> {
    let mut mats = Vec::with_capacity(6);
    for name in CHECKPOINT_MATRICES {
        let (m, _, _) = read_matrix_dump(&dir.join(format!("{name}.dgm")))?;
        mats.push(m);
    }
    let path = dir.join("checkpoint.json");
    let raw = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let sidecar: CheckpointSidecar =
        serde_json::from_str(&raw).map_err(|e| Error::bad_dump(&path, e.to_string()))?;
    let weights = restore_weights(&sidecar)?;
    let mut it = mats.into_iter();
    let state = SolverState {
        l: it.next().unwrap(),
        s: it.next().unwrap(),
        u: it.next().unwrap(),
        v: it.next().unwrap(),
        u_tilde: it.next().unwrap(),
        v_tilde: it.next().unwrap(),
        weights,
        iter: sidecar.iter,
    };
    Ok((state, sidecar.config_hash))
}

fn restore_weights(sidecar: &CheckpointSidecar) -> Result<WeightVector> {
    WeightVector::from_parts(sidecar.weights.clone(), sidecar.sigma_scale)
}
