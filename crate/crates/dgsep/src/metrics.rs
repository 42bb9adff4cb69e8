//! Recovery-quality metrics.
//!
//! Backgrounds are scored with the relative Frobenius error and PSNR
//! (peak intensity 1 on [0, 1]-scaled data). Foregrounds are hard-
//! thresholded into binary masks and scored with precision, recall, and
//! F-measure against ground-truth masks, pooling TP/FP/FN over all frames
//! by default (a per-frame averaging mode is available).

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::video;

/// Binary foreground masks, one `n1 x n2` image per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSequence {
    masks: Vec<DMatrix<bool>>,
    n1: usize,
    n2: usize,
}

impl MaskSequence {
    pub fn new(masks: Vec<DMatrix<bool>>) -> Result<Self> {
        if masks.is_empty() {
            return Err(Error::InvalidConfig("mask sequence is empty".into()));
        }
        let (n1, n2) = masks[0].shape();
        for m in &masks {
            if m.shape() != (n1, n2) {
                return Err(Error::DimensionMismatch {
                    context: "mask sequence",
                    expected_rows: n1,
                    expected_cols: n2,
                    found_rows: m.nrows(),
                    found_cols: m.ncols(),
                });
            }
        }
        Ok(MaskSequence { masks, n1, n2 })
    }

    pub fn masks(&self) -> &[DMatrix<bool>] {
        &self.masks
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Frame count.
    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Reads masks from PGM files matching `pattern` in a directory,
    /// sorted by name; a pixel is foreground when its 8-bit intensity
    /// exceeds 127.
    pub fn from_pgm_dir(dir: &Path, pattern: &str) -> Result<MaskSequence> {
        let seq = video::load_frames(dir, pattern)?;
        let masks = seq
            .frames()
            .iter()
            .map(|f| f.map(|v| v > 127.0 / 255.0))
            .collect();
        MaskSequence::new(masks)
    }

    /// Writes one 8-bit PGM per frame (255 = foreground) named
    /// `mask_<index>.pgm`.
    pub fn write_pgm_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (j, mask) in self.masks.iter().enumerate() {
            let img = mask.map(|b| if b { 1.0 } else { 0.0 });
            video::write_pgm(&dir.join(format!("mask_{j:04}.pgm")), &img)?;
        }
        Ok(())
    }
}

/// `||truth - estimate||_F / ||truth||_F`.
pub fn relative_error(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    check_same_shape("relative_error", estimate, truth)?;
    let denom = truth.norm();
    if denom == 0.0 {
        return Err(Error::ZeroNormTruth);
    }
    Ok((truth - estimate).norm() / denom)
}

/// `20 log10(1 / rmse)` in dB with `rmse = ||estimate - truth||_F / sqrt(#pixels)`
/// and peak intensity fixed at 1. Identical inputs give `+inf`.
pub fn psnr(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    check_same_shape("psnr", estimate, truth)?;
    let count = (estimate.nrows() * estimate.ncols()) as f64;
    let rmse = (estimate - truth).norm() / count.sqrt();
    if rmse == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(20.0 * (1.0 / rmse).log10())
    }
}

fn check_same_shape(context: &'static str, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            context,
            expected_rows: b.nrows(),
            expected_cols: b.ncols(),
            found_rows: a.nrows(),
            found_cols: a.ncols(),
        });
    }
    Ok(())
}

/// Hard-threshold mask extraction: pixel `(i, j)` is foreground iff
/// `|S_ij| > theta`. `s` is the `n x m` foreground matrix with frames of
/// shape `n1 x n2` in the columns.
pub fn threshold_mask(s: &DMatrix<f64>, n1: usize, n2: usize, theta: f64) -> Result<MaskSequence> {
    if s.nrows() != n1 * n2 || s.ncols() == 0 {
        return Err(Error::DimensionMismatch {
            context: "threshold_mask",
            expected_rows: n1 * n2,
            expected_cols: 1,
            found_rows: s.nrows(),
            found_cols: s.ncols(),
        });
    }
    let masks = (0..s.ncols())
        .map(|j| {
            let col = s.column(j);
            DMatrix::from_fn(n1, n2, |r, c| col[c * n1 + r].abs() > theta)
        })
        .collect();
    MaskSequence::new(masks)
}

/// How TP/FP/FN are aggregated across frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AverageMode {
    /// One confusion matrix pooled over all frames (micro-averaging).
    Pooled,
    /// Metrics computed per frame, then averaged.
    PerFrame,
}

/// Precision/recall/F-measure with a flag marking any 0/0 ratio that was
/// reported as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    /// True when some ratio was degenerate (0/0) and reported as 0.
    pub degenerate: bool,
}

fn ratio(num: f64, den: f64, degenerate: &mut bool) -> f64 {
    if den == 0.0 {
        *degenerate = true;
        0.0
    } else {
        num / den
    }
}

fn confusion_metrics(tp: f64, fp: f64, fn_: f64) -> DetectionMetrics {
    let mut degenerate = false;
    let precision = ratio(tp, tp + fp, &mut degenerate);
    let recall = ratio(tp, tp + fn_, &mut degenerate);
    let f_measure = ratio(2.0 * precision * recall, precision + recall, &mut degenerate);
    DetectionMetrics {
        precision,
        recall,
        f_measure,
        degenerate,
    }
}

/// Counts TP/FP/FN of `predicted` against `truth` and returns
/// `Pr = TP/(TP+FP)`, `Re = TP/(TP+FN)`, `Fm = 2 Pr Re / (Pr + Re)`.
pub fn detection_metrics(
    predicted: &MaskSequence,
    truth: &MaskSequence,
    mode: AverageMode,
) -> Result<DetectionMetrics> {
    if predicted.len() != truth.len()
        || predicted.n1 != truth.n1
        || predicted.n2 != truth.n2
    {
        return Err(Error::DimensionMismatch {
            context: "detection_metrics",
            expected_rows: truth.n1 * truth.len(),
            expected_cols: truth.n2,
            found_rows: predicted.n1 * predicted.len(),
            found_cols: predicted.n2,
        });
    }
    let frame_counts = predicted.masks.iter().zip(&truth.masks).map(|(p, t)| {
        let mut counts = (0.0, 0.0, 0.0);
        for (&pred, &tru) in p.iter().zip(t.iter()) {
            match (pred, tru) {
                (true, true) => counts.0 += 1.0,
                (true, false) => counts.1 += 1.0,
                (false, true) => counts.2 += 1.0,
                (false, false) => {}
            }
        }
        counts
    });
    match mode {
        AverageMode::Pooled => {
            let (tp, fp, fn_) = frame_counts
                .fold((0.0, 0.0, 0.0), |acc, c| (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2));
            Ok(confusion_metrics(tp, fp, fn_))
        }
        AverageMode::PerFrame => {
            let mut sum = (0.0, 0.0, 0.0);
            let mut degenerate = false;
            let m = predicted.len() as f64;
            for (tp, fp, fn_) in frame_counts {
                let metrics = confusion_metrics(tp, fp, fn_);
                sum.0 += metrics.precision;
                sum.1 += metrics.recall;
                sum.2 += metrics.f_measure;
                degenerate |= metrics.degenerate;
            }
            Ok(DetectionMetrics {
                precision: sum.0 / m,
                recall: sum.1 / m,
                f_measure: sum.2 / m,
                degenerate,
            })
        }
    }
}

/// Combined report row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub re: f64,
    pub psnr: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl MetricsReport {
    /// CSV export: header plus one row, values with 6 significant digits,
    /// infinity printed as `inf`.
    pub fn to_csv(&self) -> String {
        format!(
            "re,psnr,precision,recall,f_measure\n{},{},{},{},{}\n",
            fmt_sig6(self.re),
            fmt_sig6(self.psnr),
            fmt_sig6(self.precision),
            fmt_sig6(self.recall),
            fmt_sig6(self.f_measure),
        )
    }
}

/// Formats with 6 significant digits; infinities print as `inf`.
pub fn fmt_sig6(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0.00000".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}
