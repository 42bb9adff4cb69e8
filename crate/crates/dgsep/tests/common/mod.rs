//! Shared oracles for the integration and acceptance suites. Everything
//! here recomputes expected values by an independent route (dense
//! formulas, eigendecompositions, brute-force scans) and must stay
//! decoupled from the library's own implementation paths.

// each test target compiles this module separately and uses a subset
#![allow(dead_code)]

use nalgebra::DMatrix;

use dgsep::graph::SparseSymMatrix;

/// Deterministic 64-bit LCG mapped to [0, 1).
pub fn lcg(seed: u64) -> impl FnMut() -> f64 {
    let mut state = seed.wrapping_add(0x9e3779b97f4a7c15);
    move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / ((1u64 << 53) as f64)
    }
}

/// Minimizes a convex scalar function that is quadratic away from a single
/// possible kink at 0 (the 1-D prox objectives): coarse grid scan, golden-
/// section refinement, then per-segment parabolic interpolation. Comparison
/// search alone bottoms out near sqrt(machine eps) in the argument; the
/// parabola vertex is exact on a quadratic piece, so the segments are split
/// at the kink before fitting.
pub fn brute_force_minimize(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let steps = 60_000usize;
    let width = (hi - lo) / steps as f64;
    let mut best = (f64::INFINITY, lo);
    for k in 0..=steps {
        let x = lo + k as f64 * width;
        let v = f(x);
        if v < best.0 {
            best = (v, x);
        }
    }
    // golden-section to a bracket wide enough that parabola fitting stays
    // well conditioned
    let (mut a, mut b) = (best.1 - 2.0 * width, best.1 + 2.0 * width);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > 1e-3 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }

    let mut candidates = vec![a, b];
    let mut segments = Vec::new();
    if a < 0.0 && 0.0 < b {
        candidates.push(0.0);
        segments.push((a, 0.0));
        segments.push((0.0, b));
    } else {
        segments.push((a, b));
    }
    for (lo, hi) in segments {
        let span = hi - lo;
        let (x1, x2, x3) = (lo + 0.25 * span, lo + 0.5 * span, lo + 0.75 * span);
        let (f1, f2, f3) = (f(x1), f(x2), f(x3));
        let denom = (f1 - f2) * (x3 - x2) - (f3 - f2) * (x1 - x2);
        if denom != 0.0 {
            let numer =
                (f1 - f2) * (x3 - x2) * (x3 + x2) - (f3 - f2) * (x1 - x2) * (x1 + x2);
            let vertex = 0.5 * numer / denom;
            candidates.push(vertex.clamp(lo, hi));
        }
        candidates.push(x2);
    }
    candidates
        .into_iter()
        .min_by(|&x, &y| f(x).partial_cmp(&f(y)).expect("finite objective"))
        .expect("nonempty candidates")
}

/// Plain singular value thresholding computed through an eigendecomposition
/// of `M^T M`, an independent route from the library's Golub-Kahan SVD.
pub fn plain_svt_via_eig(m: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let eig = nalgebra::SymmetricEigen::new(m.transpose() * m);
    let mut x = DMatrix::zeros(m.nrows(), m.ncols());
    for k in 0..eig.eigenvalues.len() {
        let sigma = eig.eigenvalues[k].max(0.0).sqrt();
        if sigma < 1e-12 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        let u = m * v / sigma;
        let shrunk = (sigma - tau).max(0.0);
        if shrunk > 0.0 {
            x += shrunk * u * v.transpose();
        }
    }
    x
}

/// Random connected weighted graph: a ring plus random chords, positive
/// weights, `dim >= 2`.
pub fn random_graph(dim: usize, seed: u64) -> SparseSymMatrix {
    let mut next = lcg(seed);
    let mut triplets = Vec::new();
    for i in 0..dim {
        let j = (i + 1) % dim;
        if i < j {
            triplets.push((i, j, 0.1 + next()));
        }
    }
    if dim > 2 {
        triplets.push((0, dim - 1, 0.1 + next()));
    }
    for i in 0..dim {
        for j in (i + 2)..dim {
            if (i, j) != (0, dim - 1) && next() < 0.3 {
                triplets.push((i, j, 0.05 + next()));
            }
        }
    }
    SparseSymMatrix::from_triplets(dim, triplets).expect("valid graph")
}

/// Dense normalized Laplacian computed directly from a dense adjacency.
pub fn dense_normalized_laplacian(adj: &DMatrix<f64>) -> DMatrix<f64> {
    let n = adj.nrows();
    let degrees: Vec<f64> = (0..n).map(|i| adj.row(i).sum()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        let kron = if i == j { 1.0 } else { 0.0 };
        kron - adj[(i, j)] / (degrees[i] * degrees[j]).sqrt()
    })
}

/// Frobenius norm of the difference relative to the norm of `b`.
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
