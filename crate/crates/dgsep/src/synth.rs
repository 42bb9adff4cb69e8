//! Seeded synthetic videos with exact ground truth.
//!
//! A fixture is a smooth low-rank background (sum of `bg_rank` separable
//! raised-cosine spatial patterns times near-constant temporal profiles),
//! a constant-intensity rectangle moving along a given trajectory, and
//! optional signed outlier spikes on a random subset of entries. The
//! generator is deterministic given the seed: outlier placement uses a
//! ChaCha8 stream keyed by `rng_seed`, positions drawn first, then one
//! sign per position in ascending entry order.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MaskSequence;
use crate::video::VideoMatrix;

/// Fixture parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n1: usize,
    pub n2: usize,
    /// Frame count.
    pub m: usize,
    /// Background rank (number of separable components).
    pub bg_rank: usize,
    /// Object height and width in pixels; (0, 0) disables the object.
    pub object_size: (usize, usize),
    /// Top-left (row, col) of the object per frame.
    pub trajectory: Vec<(i64, i64)>,
    /// Intensity added on the object rectangle; nonzero when the object
    /// has positive area.
    pub object_intensity_delta: f64,
    /// Fraction of video entries receiving an outlier spike, in [0, 1).
    pub outlier_fraction: f64,
    /// Magnitude of each outlier spike (sign is drawn per spike).
    pub outlier_magnitude: f64,
    pub rng_seed: u64,
}

impl Default for SynthSpec {
    /// The 40x40x12 benchmark fixture: rank-2 background, 6x6 object
    /// moving 2 px/frame, delta 0.5, 1% outliers of magnitude 0.8.
    fn default() -> Self {
        SynthSpec {
            n1: 40,
            n2: 40,
            m: 12,
            bg_rank: 2,
            object_size: (6, 6),
            trajectory: linear_trajectory((17, 2), (0, 2), 12),
            object_intensity_delta: 0.5,
            outlier_fraction: 0.01,
            outlier_magnitude: 0.8,
            rng_seed: 15,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::TooFewFrames { found: self.m });
        }
        if self.trajectory.len() != self.m {
            return Err(Error::InvalidConfig(format!(
                "trajectory has {} positions for {} frames",
                self.trajectory.len(),
                self.m
            )));
        }
        let n = self.n1 * self.n2;
        if self.bg_rank == 0 || self.bg_rank > n.min(self.m) {
            return Err(Error::InvalidConfig(format!(
                "bg_rank {} outside 1..={}",
                self.bg_rank,
                n.min(self.m)
            )));
        }
        let (h, w) = self.object_size;
        if h * w > 0 {
            if self.object_intensity_delta == 0.0 {
                return Err(Error::InvalidConfig(
                    "object_intensity_delta must be nonzero for a nonempty object".into(),
                ));
            }
            for (frame, &(r, c)) in self.trajectory.iter().enumerate() {
                if r < 0 || c < 0 || r + h as i64 > self.n1 as i64 || c + w as i64 > self.n2 as i64
                {
                    return Err(Error::TrajectoryOutOfBounds { frame, row: r, col: c });
                }
            }
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return Err(Error::InvalidConfig("outlier_fraction must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// `position_j = start + j * velocity` for `j = 0..m`.
pub fn linear_trajectory(start: (i64, i64), velocity: (i64, i64), m: usize) -> Vec<(i64, i64)> {
    (0..m as i64)
        .map(|j| (start.0 + j * velocity.0, start.1 + j * velocity.1))
        .collect()
}

/// Everything the generator knows about a fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    /// Observed video `clip(L + S + outliers, 0, 1)`.
    pub d: VideoMatrix,
    /// Ground-truth background.
    pub l_true: VideoMatrix,
    /// Ground-truth foreground (`delta` on the object, 0 elsewhere).
    pub s_true: DMatrix<f64>,
    /// The additive outlier matrix (mostly zeros).
    pub outliers: DMatrix<f64>,
    /// Object-support masks.
    pub masks: MaskSequence,
}

fn raised_cosine(len: usize, freq: f64, phase: f64) -> Vec<f64> {
    (0..len)
        .map(|i| {
            let t = if len > 1 { i as f64 / (len - 1) as f64 } else { 0.0 };
            0.5 * (1.0 + (2.0 * std::f64::consts::PI * freq * t + phase).cos())
        })
        .collect()
}

/// Generates the fixture. The first background component carries the base
/// brightness (range [0.14, 0.24]); further components are oscillations
/// around it whose amplitudes split a +-0.04 budget, keeping the total
/// inside [0.10, 0.29] so neither the object nor clipping can erase it.
/// Temporal profiles are `1 + 0.01 sin(...)`.
pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let (n1, n2, m) = (spec.n1, spec.n2, spec.m);
    let n = n1 * n2;

    // low-rank background: sum of outer(spatial_r, temporal_r)
    let mut l = DMatrix::zeros(n, m);
    for r in 0..spec.bg_rank {
        let rows = raised_cosine(n1, 0.5 + 0.5 * r as f64, 0.4 + 0.9 * r as f64);
        let cols = raised_cosine(n2, 0.75 + 0.5 * r as f64, 1.1 + 0.7 * r as f64);
        let oscillation = 0.08 / (spec.bg_rank - 1).max(1) as f64;
        let spatial: Vec<f64> = (0..n)
            .map(|idx| {
                let pattern = rows[idx % n1] * cols[idx / n1];
                if r == 0 {
                    0.14 + 0.10 * pattern
                } else {
                    oscillation * (pattern - 0.5)
                }
            })
            .collect();
        for j in 0..m {
            let temporal =
                1.0 + 0.01 * (2.0 * std::f64::consts::PI * j as f64 / m as f64 + 0.8 * r as f64).sin();
            for (i, &s) in spatial.iter().enumerate() {
                l[(i, j)] += s * temporal;
            }
        }
    }
    l.apply(|v: &mut f64| *v = v.clamp(0.0, 1.0));

    // moving object and its masks
    let (h, w) = spec.object_size;
    let mut s = DMatrix::zeros(n, m);
    let mut masks = Vec::with_capacity(m);
    for (j, &(top, left)) in spec.trajectory.iter().enumerate() {
        let mut mask = DMatrix::from_element(n1, n2, false);
        if h * w > 0 {
            for c in left..left + w as i64 {
                for r in top..top + h as i64 {
                    let (r, c) = (r as usize, c as usize);
                    s[(c * n1 + r, j)] = spec.object_intensity_delta;
                    mask[(r, c)] = true;
                }
            }
        }
        masks.push(mask);
    }

    // seeded outliers: positions sampled without replacement, then signs
    // drawn in ascending position order
    let mut outliers = DMatrix::zeros(n, m);
    let count = (spec.outlier_fraction * (n * m) as f64).round() as usize;
    if count > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
        let mut positions = rand::seq::index::sample(&mut rng, n * m, count).into_vec();
        positions.sort_unstable();
        for idx in positions {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            outliers[idx] = sign * spec.outlier_magnitude;
        }
    }

    let mut d = &l + &s + &outliers;
    d.apply(|v: &mut f64| *v = v.clamp(0.0, 1.0));

    Ok(SynthOutput {
        d: VideoMatrix::new(d, n1, n2)?,
        l_true: VideoMatrix::new(l, n1, n2)?,
        s_true: s,
        outliers,
        masks: MaskSequence::new(masks)?,
    })
}
