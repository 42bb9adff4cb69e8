//! Sparse spatial and temporal graphs over a video matrix.
//!
//! The temporal graph connects each frame to the two frames on either side
//! with Gaussian weights on column distances. The spatial graph connects
//! each pixel to its location-nearest grid neighbors with Gaussian weights
//! on the Frobenius distance between the spatio-temporal patches centered
//! at the two pixels. Both are turned into symmetrically normalized
//! Laplacians `Phi = I - W^{-1/2} A W^{-1/2}`, stored sparse.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::video::VideoMatrix;

/// A symmetric sparse matrix storing only the upper triangle (`i <= j`),
/// sorted by `(i, j)`, with no explicit zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

/// Which side of the matrix product a Laplacian acts on in the quadratic
/// form: `Left` is `tr(L^T Phi L)`, `Right` is `tr(L Phi L^T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl SparseSymMatrix {
    /// Builds from `(i, j, value)` triplets. Each unordered pair may appear
    /// once; exact zeros are dropped, non-finite values rejected.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in triplets {
            if i >= dim || j >= dim {
                return Err(Error::InvalidConfig(format!(
                    "sparse entry ({i}, {j}) outside dimension {dim}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "non-finite sparse entry at ({i}, {j})"
                )));
            }
            if v == 0.0 {
                continue;
            }
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            entries.push((a, b, v));
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::DuplicateEntry(w[0].0, w[0].1));
            }
        }
        Ok(SparseSymMatrix { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored (upper-triangle) entries.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Stored entries, `i <= j`, sorted by `(i, j)`.
    pub fn iter_upper(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    /// Value at `(i, j)` honoring symmetry; zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let key = if i <= j { (i, j) } else { (j, i) };
        match self
            .entries
            .binary_search_by_key(&key, |&(a, b, _)| (a, b))
        {
            Ok(pos) => self.entries[pos].2,
            Err(_) => 0.0,
        }
    }

    /// Row sums of the full symmetric matrix.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for &(i, j, v) in &self.entries {
            d[i] += v;
            if i != j {
                d[j] += v;
            }
        }
        d
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    /// `self * x` for a dense `dim x c` matrix.
    pub fn mul_left(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.dim, "mul_left dimension mismatch");
        let mut y = DMatrix::zeros(x.nrows(), x.ncols());
        for c in 0..x.ncols() {
            let xc = x.column(c);
            let mut yc = y.column_mut(c);
            for &(i, j, v) in &self.entries {
                yc[i] += v * xc[j];
                if i != j {
                    yc[j] += v * xc[i];
                }
            }
        }
        y
    }

    /// `x * self` for a dense `r x dim` matrix.
    pub fn mul_right(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.ncols(), self.dim, "mul_right dimension mismatch");
        let mut y = DMatrix::zeros(x.nrows(), x.ncols());
        for &(i, j, v) in &self.entries {
            y.column_mut(j).axpy(v, &x.column(i), 1.0);
            if i != j {
                y.column_mut(i).axpy(v, &x.column(j), 1.0);
            }
        }
        y
    }

    /// Largest-eigenvalue estimate by power iteration with a fixed,
    /// deterministic start vector. A Rayleigh quotient, so never above the
    /// true maximum.
    pub fn max_eigenvalue_estimate(&self, iterations: usize) -> f64 {
        let mut v = DMatrix::from_fn(self.dim, 1, |i, _| (i as f64 + 1.0).sin() + 1.5);
        let norm = v.norm();
        v /= norm;
        for _ in 0..iterations {
            let w = self.mul_left(&v);
            let n = w.norm();
            if n == 0.0 {
                return 0.0;
            }
            v = w / n;
        }
        (v.transpose() * self.mul_left(&v))[(0, 0)]
    }

    /// Smallest-eigenvalue estimate via power iteration on `c I - A` with
    /// `c` the largest-eigenvalue estimate plus margin.
    pub fn min_eigenvalue_estimate(&self, iterations: usize) -> f64 {
        let c = self.max_eigenvalue_estimate(iterations) + 1.0;
        let shifted = self.shifted_negate(c);
        c - shifted.max_eigenvalue_estimate(iterations)
    }

    /// `c I - self`.
    fn shifted_negate(&self, c: f64) -> SparseSymMatrix {
        let mut diag_seen = vec![false; self.dim];
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz() + self.dim);
        for &(i, j, v) in &self.entries {
            if i == j {
                diag_seen[i] = true;
                entries.push((i, j, c - v));
            } else {
                entries.push((i, j, -v));
            }
        }
        for (i, seen) in diag_seen.iter().enumerate() {
            if !seen {
                entries.push((i, i, c));
            }
        }
        SparseSymMatrix::from_triplets(self.dim, entries).expect("valid shift")
    }

    /// Writes the text dump: header `SPSYM <dim> <nnz>`, then one
    /// 1-based `i j value` triple per stored upper-triangle entry with 17
    /// significant digits.
    pub fn write_spsym(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        let mut emit = |s: String| out.write_all(s.as_bytes()).map_err(|e| Error::io(path, e));
        emit(format!("SPSYM {} {}\n", self.dim, self.nnz()))?;
        for &(i, j, v) in &self.entries {
            emit(format!("{} {} {:.16e}\n", i + 1, j + 1, v))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_spsym(path: &Path) -> Result<SparseSymMatrix> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::bad_dump(path, "empty file"))?
            .map_err(|e| Error::io(path, e))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "SPSYM" {
            return Err(Error::bad_dump(path, "bad SPSYM header"));
        }
        let dim: usize = parts[1]
            .parse()
            .map_err(|_| Error::bad_dump(path, "bad dimension"))?;
        let nnz: usize = parts[2]
            .parse()
            .map_err(|_| Error::bad_dump(path, "bad nnz"))?;
        let mut triplets = Vec::with_capacity(nnz);
        for line in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::bad_dump(path, format!("bad entry line: {line}")));
            }
            let i: usize = f[0]
                .parse()
                .map_err(|_| Error::bad_dump(path, "bad row index"))?;
            let j: usize = f[1]
                .parse()
                .map_err(|_| Error::bad_dump(path, "bad col index"))?;
            let v: f64 = f[2]
                .parse()
                .map_err(|_| Error::bad_dump(path, "bad value"))?;
            if i == 0 || j == 0 {
                return Err(Error::bad_dump(path, "indices are 1-based"));
            }
            triplets.push((i - 1, j - 1, v));
        }
        if triplets.len() != nnz {
            return Err(Error::bad_dump(
                path,
                format!("expected {nnz} entries, found {}", triplets.len()),
            ));
        }
        SparseSymMatrix::from_triplets(dim, triplets)
    }
}

/// Graph construction parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GraphConfig {
    /// Spatial filtering parameter (Gaussian kernel width on patch distance).
    pub h_s: f64,
    /// Temporal filtering parameter (Gaussian kernel width on frame distance).
    pub h_t: f64,
    /// Patch side length; odd.
    pub p: usize,
    /// Location-nearest spatial neighbor count (4 = grid stencil, 8 adds diagonals).
    pub k: usize,
    /// Standard deviation of the optional per-frame Gaussian pre-smoothing
    /// applied before patch comparison; 0 disables it.
    pub gaussian_presmooth_sigma: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            h_s: 1.0,
            h_t: 1.0,
            p: 3,
            k: 4,
            gaussian_presmooth_sigma: 0.0,
        }
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        if !positive(self.h_s) || !positive(self.h_t) {
            return Err(Error::InvalidConfig("h_s and h_t must be positive".into()));
        }
        if self.p.is_multiple_of(2) || self.p == 0 {
            return Err(Error::InvalidConfig("patch side p must be odd".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.gaussian_presmooth_sigma < 0.0 {
            return Err(Error::InvalidConfig(
                "gaussian_presmooth_sigma must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// The `p^2 x m` matrix whose column `j` is the `p x p` window of frame `j`
/// centered at `pixel_index` (0-based, column-major over the pixel grid),
/// flattened column-major. Out-of-image positions replicate the nearest
/// edge pixel.
pub fn extract_patch(d: &VideoMatrix, pixel_index: usize, p: usize) -> Result<DMatrix<f64>> {
    let (n1, n2) = (d.n1(), d.n2());
    if p.is_multiple_of(2) || p == 0 {
        return Err(Error::InvalidConfig("patch side p must be odd".into()));
    }
    if p >= 2 * n1.min(n2) {
        return Err(Error::PatchExceedsImage { p, n1, n2 });
    }
    if pixel_index >= d.n() {
        return Err(Error::InvalidConfig(format!(
            "pixel index {pixel_index} outside 0..{}",
            d.n()
        )));
    }
    let rad = (p / 2) as i64;
    let (r0, c0) = ((pixel_index % n1) as i64, (pixel_index / n1) as i64);
    let mut patch = DMatrix::zeros(p * p, d.m());
    for j in 0..d.m() {
        let col = d.data().column(j);
        for pc in 0..p {
            let c = (c0 + pc as i64 - rad).clamp(0, n2 as i64 - 1) as usize;
            for pr in 0..p {
                let r = (r0 + pr as i64 - rad).clamp(0, n1 as i64 - 1) as usize;
                patch[(pc * p + pr, j)] = col[c * n1 + r];
            }
        }
    }
    Ok(patch)
}

/// Temporal adjacency on `m` frames: `A(i, j) = exp(-||d_i - d_j||^2 / h_t^2)`
/// for `|i - j|` in `{1, 2}` (two neighbors on each side, truncated at the
/// ends), zero elsewhere and on the diagonal.
pub fn temporal_adjacency(d: &VideoMatrix, cfg: &GraphConfig) -> Result<SparseSymMatrix> {
    cfg.validate()?;
    let m = d.m();
    if m < 2 {
        return Err(Error::TooFewFrames { found: m });
    }
    let ht2 = cfg.h_t * cfg.h_t;
    let mut triplets = Vec::with_capacity(2 * m);
    for i in 0..m {
        for j in (i + 1)..m.min(i + 3) {
            let dist2 = (d.data().column(i) - d.data().column(j)).norm_squared();
            triplets.push((i, j, (-dist2 / ht2).exp()));
        }
    }
    SparseSymMatrix::from_triplets(m, triplets)
}

/// The `k` grid offsets nearest to the origin, ordered by squared distance
/// with a fixed tiebreak; `k = 4` is the 4-connected stencil, `k = 8` adds
/// the diagonals.
fn grid_stencil(k: usize) -> Vec<(i64, i64)> {
    let mut radius = 1i64;
    loop {
        let mut offsets: Vec<(i64, i64)> = Vec::new();
        for dr in -radius..=radius {
            for dc in -radius..=radius {
                if (dr, dc) != (0, 0) {
                    offsets.push((dr, dc));
                }
            }
        }
        offsets.sort_by_key(|&(dr, dc)| (dr * dr + dc * dc, dr, dc));
        // enough candidates only if the k-th is strictly inside the box,
        // otherwise a larger radius could supply closer offsets
        if offsets.len() >= k {
            let (dr, dc) = offsets[k - 1];
            if dr * dr + dc * dc <= radius * radius {
                offsets.truncate(k);
                return offsets;
            }
        }
        radius += 1;
    }
}

/// Spatial adjacency on the pixel grid. Each pixel is linked to its `k`
/// location-nearest grid neighbors (truncated at image borders); the edge
/// weight is `exp(-||patch_i - patch_j||_F^2 / h_s^2)` on spatio-temporal
/// patches of side `cfg.p`. Neighbor selections are symmetrized by union.
/// With `cfg.gaussian_presmooth_sigma > 0` frames are Gaussian-smoothed
/// before patch comparison.
pub fn spatial_adjacency(d: &VideoMatrix, cfg: &GraphConfig) -> Result<SparseSymMatrix> {
    cfg.validate()?;
    let (n1, n2) = (d.n1(), d.n2());
    if cfg.p > n1.min(n2) {
        return Err(Error::PatchExceedsImage {
            p: cfg.p,
            n1,
            n2,
        });
    }
    let smoothed;
    let source = if cfg.gaussian_presmooth_sigma > 0.0 {
        smoothed = presmooth(d, cfg.gaussian_presmooth_sigma);
        &smoothed
    } else {
        d
    };

    let n = d.n();
    let stencil = grid_stencil(cfg.k);
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n * cfg.k / 2);
    for c in 0..n2 as i64 {
        for r in 0..n1 as i64 {
            let i = (c * n1 as i64 + r) as usize;
            for &(dr, dc) in &stencil {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nr >= n1 as i64 || nc < 0 || nc >= n2 as i64 {
                    continue;
                }
                let j = (nc * n1 as i64 + nr) as usize;
                edges.push((i.min(j), i.max(j)));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();

    let hs2 = cfg.h_s * cfg.h_s;
    let triplets = edges.into_iter().map(|(i, j)| {
        let dist2 = patch_distance_squared(source, i, j, cfg.p);
        (i, j, (-dist2 / hs2).exp())
    });
    SparseSymMatrix::from_triplets(n, triplets.collect::<Vec<_>>())
}

/// Squared Frobenius distance between the patches centered at two pixels,
/// computed without materializing the patch matrices.
fn patch_distance_squared(d: &VideoMatrix, i: usize, j: usize, p: usize) -> f64 {
    let (n1, n2) = (d.n1() as i64, d.n2() as i64);
    let rad = (p / 2) as i64;
    let (ri, ci) = ((i % d.n1()) as i64, (i / d.n1()) as i64);
    let (rj, cj) = ((j % d.n1()) as i64, (j / d.n1()) as i64);
    let mut acc = 0.0;
    for f in 0..d.m() {
        let col = d.data().column(f);
        for pc in -rad..=rad {
            let ca = (ci + pc).clamp(0, n2 - 1) as usize * d.n1();
            let cb = (cj + pc).clamp(0, n2 - 1) as usize * d.n1();
            for pr in -rad..=rad {
                let a = col[ca + (ri + pr).clamp(0, n1 - 1) as usize];
                let b = col[cb + (rj + pr).clamp(0, n1 - 1) as usize];
                acc += (a - b) * (a - b);
            }
        }
    }
    acc
}

/// Per-frame separable Gaussian smoothing with edge replication.
fn presmooth(d: &VideoMatrix, sigma: f64) -> VideoMatrix {
    let radius = (3.0 * sigma).ceil().max(1.0) as i64;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|t| (-((t * t) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= total;
    }
    let (n1, n2) = (d.n1(), d.n2());
    let convolve = |img: &DMatrix<f64>, vertical: bool| -> DMatrix<f64> {
        DMatrix::from_fn(n1, n2, |r, c| {
            let mut acc = 0.0;
            for (t, w) in (-radius..=radius).zip(&kernel) {
                let (rr, cc) = if vertical {
                    ((r as i64 + t).clamp(0, n1 as i64 - 1) as usize, c)
                } else {
                    (r, (c as i64 + t).clamp(0, n2 as i64 - 1) as usize)
                };
                acc += w * img[(rr, cc)];
            }
            acc
        })
    };
    let mut data = DMatrix::zeros(d.n(), d.m());
    for j in 0..d.m() {
        let frame = DMatrix::from_fn(n1, n2, |r, c| d.data()[(c * n1 + r, j)]);
        let sm = convolve(&convolve(&frame, true), false);
        // smoothing is a convex combination, so values stay in [0, 1]
        data.column_mut(j).copy_from_slice(sm.as_slice());
    }
    VideoMatrix::new(data, n1, n2).expect("smoothing preserves range")
}

/// Symmetrically normalized Laplacian `Phi = I - W^{-1/2} A W^{-1/2}` with
/// `W` the diagonal degree matrix of `A`.
pub fn normalized_laplacian(a: &SparseSymMatrix) -> Result<SparseSymMatrix> {
    for (i, j, v) in a.iter_upper() {
        if v < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "adjacency entry ({i}, {j}) is negative"
            )));
        }
    }
    let degrees = a.degrees();
    if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::ZeroDegree(i));
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut diag: Vec<f64> = vec![1.0; a.dim()];
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(a.nnz() + a.dim());
    for (i, j, v) in a.iter_upper() {
        if i == j {
            diag[i] -= v * inv_sqrt[i] * inv_sqrt[i];
        } else {
            triplets.push((i, j, -v * inv_sqrt[i] * inv_sqrt[j]));
        }
    }
    for (i, &v) in diag.iter().enumerate() {
        triplets.push((i, i, v));
    }
    SparseSymMatrix::from_triplets(a.dim(), triplets)
}

/// `tr(L^T Phi L)` (side = Left, `Phi` is `n x n`) or `tr(L Phi L^T)`
/// (side = Right, `Phi` is `m x m`), via sparse products.
pub fn laplacian_quadratic(phi: &SparseSymMatrix, l: &DMatrix<f64>, side: Side) -> Result<f64> {
    let ok = match side {
        Side::Left => phi.dim() == l.nrows(),
        Side::Right => phi.dim() == l.ncols(),
    };
    if !ok {
        return Err(Error::DimensionMismatch {
            context: "laplacian_quadratic",
            expected_rows: phi.dim(),
            expected_cols: phi.dim(),
            found_rows: l.nrows(),
            found_cols: l.ncols(),
        });
    }
    let product = match side {
        Side::Left => phi.mul_left(l),
        Side::Right => phi.mul_right(l),
    };
    Ok(l.dot(&product))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed.wrapping_add(0x9e3779b97f4a7c15);
        move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64)
        }
    }

    fn random_video(n1: usize, n2: usize, m: usize, seed: u64) -> VideoMatrix {
        let mut next = lcg(seed);
        let data = DMatrix::from_fn(n1 * n2, m, |_, _| next());
        VideoMatrix::new(data, n1, n2).unwrap()
    }

    // Dense oracle for the temporal adjacency over all |i-j| <= 2.
    fn dense_temporal(d: &VideoMatrix, ht: f64) -> DMatrix<f64> {
        let m = d.m();
        DMatrix::from_fn(m, m, |i, j| {
            let gap = i.abs_diff(j);
            if gap == 1 || gap == 2 {
                let dist2 = (d.data().column(i) - d.data().column(j)).norm_squared();
                (-dist2 / (ht * ht)).exp()
            } else {
                0.0
            }
        })
    }

    #[test]
    fn patch_p1_is_pixel_row() {
        let d = random_video(3, 4, 5, 9);
        let patch = extract_patch(&d, 7, 1).unwrap();
        assert_eq!(patch.shape(), (1, 5));
        for j in 0..5 {
            assert_eq!(patch[(0, j)], d.data()[(7, j)]);
        }
    }

    #[test]
    fn patch_constant_video() {
        let d = VideoMatrix::new(DMatrix::from_element(16, 3, 0.42), 4, 4).unwrap();
        let patch = extract_patch(&d, 0, 3).unwrap();
        assert_eq!(patch.shape(), (9, 3));
        assert!(patch.iter().all(|&v| v == 0.42));
    }

    #[test]
    fn patch_corner_replication_matches_index_oracle() {
        let d = random_video(4, 4, 2, 3);
        let p = 3;
        let patch = extract_patch(&d, 0, p).unwrap(); // corner pixel (0, 0)
        // oracle: explicit index-by-index construction with clamping
        for j in 0..d.m() {
            for pc in 0..p {
                for pr in 0..p {
                    let r = (pr as i64 - 1).clamp(0, 3) as usize;
                    let c = (pc as i64 - 1).clamp(0, 3) as usize;
                    let expected = d.data()[(c * 4 + r, j)];
                    assert_eq!(patch[(pc * p + pr, j)], expected);
                }
            }
        }
    }

    #[test]
    fn patch_too_large_rejected() {
        let d = random_video(3, 5, 2, 1);
        let err = extract_patch(&d, 0, 7).unwrap_err();
        assert!(matches!(err, Error::PatchExceedsImage { .. }));
    }

    #[test]
    fn temporal_identical_neighbors() {
        let d = VideoMatrix::new(DMatrix::from_element(4, 2, 0.3), 2, 2).unwrap();
        let a = temporal_adjacency(&d, &GraphConfig::default()).unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 1), 1.0);
    }

    #[test]
    fn temporal_matches_dense_oracle() {
        let d = random_video(2, 3, 5, 11);
        let cfg = GraphConfig::default();
        let a = temporal_adjacency(&d, &cfg).unwrap();
        let dense = dense_temporal(&d, cfg.h_t);
        assert_relative_eq!(a.to_dense(), dense, max_relative = 1e-14);
        assert!(a.nnz() <= 5 * d.m() / 2 + 1);
    }

    #[test]
    fn spatial_constant_video_gives_unit_weights() {
        let d = VideoMatrix::new(DMatrix::from_element(16, 3, 0.7), 4, 4).unwrap();
        let a = spatial_adjacency(&d, &GraphConfig::default()).unwrap();
        assert!(a.iter_upper().all(|(_, _, v)| v == 1.0));
    }

    #[test]
    fn spatial_neighbor_counts() {
        let d = random_video(4, 5, 2, 17);
        let a = spatial_adjacency(&d, &GraphConfig::default()).unwrap();
        let dense = a.to_dense();
        // interior pixel (1, 1) -> index 1*4+1 = 5 has 4 neighbors
        let interior: usize = dense.row(5).iter().filter(|&&v| v > 0.0).count();
        assert_eq!(interior, 4);
        // corner pixel (0, 0) has 2
        let corner: usize = dense.row(0).iter().filter(|&&v| v > 0.0).count();
        assert_eq!(corner, 2);
    }

    #[test]
    fn spatial_matches_dense_oracle() {
        let d = random_video(6, 6, 3, 23);
        let cfg = GraphConfig::default();
        let a = spatial_adjacency(&d, &cfg).unwrap();
        // oracle: loop over all 4-connected pairs, explicit patch build
        let mut dense = DMatrix::zeros(36, 36);
        for r in 0..6i64 {
            for c in 0..6i64 {
                for (dr, dc) in [(0i64, 1i64), (1, 0)] {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr >= 6 || nc >= 6 {
                        continue;
                    }
                    let i = (c * 6 + r) as usize;
                    let j = (nc * 6 + nr) as usize;
                    let pi = extract_patch(&d, i, cfg.p).unwrap();
                    let pj = extract_patch(&d, j, cfg.p).unwrap();
                    let w = (-(&pi - &pj).norm_squared() / (cfg.h_s * cfg.h_s)).exp();
                    dense[(i, j)] = w;
                    dense[(j, i)] = w;
                }
            }
        }
        assert_relative_eq!(a.to_dense(), dense, max_relative = 1e-12);
    }

    #[test]
    fn spatial_k8_includes_diagonals() {
        let d = random_video(4, 4, 2, 5);
        let cfg = GraphConfig {
            k: 8,
            ..GraphConfig::default()
        };
        let a = spatial_adjacency(&d, &cfg).unwrap();
        // interior pixel (1,1) = index 5 now has 8 neighbors
        let count = (0..16).filter(|&j| a.get(5, j) > 0.0).count();
        assert_eq!(count, 8);
    }

    #[test]
    fn stencil_shapes() {
        assert_eq!(grid_stencil(4), vec![(-1, 0), (0, -1), (0, 1), (1, 0)]);
        let s8 = grid_stencil(8);
        assert_eq!(s8.len(), 8);
        assert!(s8.contains(&(-1, -1)) && s8.contains(&(1, 1)));
    }

    #[test]
    fn presmooth_constant_is_identity() {
        let d = VideoMatrix::new(DMatrix::from_element(20, 2, 0.4), 4, 5).unwrap();
        let cfg = GraphConfig {
            gaussian_presmooth_sigma: 1.0,
            ..GraphConfig::default()
        };
        let a = spatial_adjacency(&d, &cfg).unwrap();
        for (_, _, v) in a.iter_upper() {
            assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn laplacian_two_nodes() {
        for w in [0.2, 1.0, 7.5] {
            let a = SparseSymMatrix::from_triplets(2, vec![(0, 1, w)]).unwrap();
            let phi = normalized_laplacian(&a).unwrap();
            let dense = phi.to_dense();
            assert_relative_eq!(
                dense,
                DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn laplacian_rejects_zero_degree() {
        let a = SparseSymMatrix::from_triplets(3, vec![(0, 1, 0.5)]).unwrap();
        let err = normalized_laplacian(&a).unwrap_err();
        assert!(matches!(err, Error::ZeroDegree(2)));
    }

    #[test]
    fn laplacian_spectrum_and_nullvector() {
        let mut next = lcg(77);
        let mut triplets = Vec::new();
        let dim = 5;
        for i in 0..dim {
            for j in (i + 1)..dim {
                triplets.push((i, j, 0.05 + next()));
            }
        }
        let a = SparseSymMatrix::from_triplets(dim, triplets).unwrap();
        let phi = normalized_laplacian(&a).unwrap();
        let eig = nalgebra::SymmetricEigen::new(phi.to_dense());
        for &lam in eig.eigenvalues.iter() {
            assert!((-1e-10..=2.0 + 1e-10).contains(&lam), "eigenvalue {lam}");
        }
        let min = eig.eigenvalues.min();
        assert!(min.abs() <= 1e-10);
        // null vector W^{1/2} 1
        let sqrt_deg = DVector::from_vec(a.degrees().iter().map(|d| d.sqrt()).collect::<Vec<_>>());
        let residual = phi.mul_left(&DMatrix::from_column_slice(dim, 1, sqrt_deg.as_slice()));
        assert!(residual.norm() <= 1e-10);
    }

    #[test]
    fn quadratic_zero_matrix() {
        let a = SparseSymMatrix::from_triplets(3, vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let phi = normalized_laplacian(&a).unwrap();
        let l = DMatrix::zeros(3, 4);
        assert_eq!(laplacian_quadratic(&phi, &l, Side::Left).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_matches_dense() {
        let mut next = lcg(31);
        let mut triplets = Vec::new();
        for i in 0..8usize {
            for j in (i + 1)..8 {
                if next() < 0.6 {
                    triplets.push((i, j, next() + 0.01));
                }
            }
        }
        let phi = normalized_laplacian(&SparseSymMatrix::from_triplets(8, triplets).unwrap())
            .unwrap();
        let l = DMatrix::from_fn(8, 4, |_, _| next() - 0.5);
        let dense = phi.to_dense();

        let left = laplacian_quadratic(&phi, &l, Side::Left).unwrap();
        let expected = (l.transpose() * &dense * &l).trace();
        assert_relative_eq!(left, expected, max_relative = 1e-12);

        let lr = DMatrix::from_fn(4, 8, |_, _| next() - 0.5);
        let right = laplacian_quadratic(&phi, &lr, Side::Right).unwrap();
        let expected_r = (&lr * &dense * lr.transpose()).trace();
        assert_relative_eq!(right, expected_r, max_relative = 1e-12);
    }

    #[test]
    fn quadratic_dimension_mismatch() {
        let a = SparseSymMatrix::from_triplets(3, vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let phi = normalized_laplacian(&a).unwrap();
        let l = DMatrix::zeros(4, 2);
        assert!(laplacian_quadratic(&phi, &l, Side::Left).is_err());
    }

    #[test]
    fn sparsity_bounds() {
        let d = random_video(8, 8, 5, 41);
        let cfg = GraphConfig::default();
        let phi_s =
            normalized_laplacian(&spatial_adjacency(&d, &cfg).unwrap()).unwrap();
        assert!(phi_s.nnz() <= d.n() * (cfg.k + 1));
        let phi_t =
            normalized_laplacian(&temporal_adjacency(&d, &cfg).unwrap()).unwrap();
        assert!(phi_t.nnz() <= 5 * d.m());
    }

    #[test]
    fn power_iteration_vs_dense_eigensolver() {
        let mut next = lcg(13);
        let mut triplets = Vec::new();
        for i in 0..7usize {
            for j in (i + 1)..7 {
                if next() < 0.7 {
                    triplets.push((i, j, next() + 0.05));
                }
            }
        }
        let phi = normalized_laplacian(&SparseSymMatrix::from_triplets(7, triplets).unwrap())
            .unwrap();
        let estimate = phi.max_eigenvalue_estimate(300);
        let exact = nalgebra::SymmetricEigen::new(phi.to_dense()).eigenvalues.max();
        assert!(estimate <= exact + 1e-10);
        assert_relative_eq!(estimate, exact, epsilon = 1e-6);
        let min_est = phi.min_eigenvalue_estimate(300);
        assert!(min_est >= -1e-9 && min_est <= exact);
    }

    #[test]
    fn spsym_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phi.spsym");
        let a = SparseSymMatrix::from_triplets(
            4,
            vec![(0, 1, 0.1234567890123456), (2, 3, 1.0 / 3.0), (1, 1, 2.0)],
        )
        .unwrap();
        a.write_spsym(&path).unwrap();
        let back = SparseSymMatrix::read_spsym(&path).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn duplicate_entries_rejected() {
        let err = SparseSymMatrix::from_triplets(3, vec![(0, 1, 1.0), (1, 0, 2.0)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateEntry(0, 1)));
    }
}
