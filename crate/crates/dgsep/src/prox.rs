//! Proximal operators and the singular-value weight scheme.
//!
//! `shrink` is the elementwise soft threshold (the prox of the scaled L1
//! norm). `weighted_svt` soft-thresholds each singular value by its own
//! weight times a base threshold; with weights nondecreasing in the
//! singular-value index it is the prox of the weighted nuclear norm.
//! Weights follow `w_i = exp(-s_i^2 / sigma^2)`, so large singular values
//! are shrunk less.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Elementwise soft threshold `sign(a) * max(|a| - mu, 0)`.
pub fn shrink(a: &DMatrix<f64>, mu: f64) -> DMatrix<f64> {
    debug_assert!(mu >= 0.0);
    a.map(|v| shrink_scalar(v, mu))
}

/// Scalar soft threshold.
pub fn shrink_scalar(a: f64, mu: f64) -> f64 {
    if a > mu {
        a - mu
    } else if a < -mu {
        a + mu
    } else {
        0.0
    }
}

/// Thin SVD factors of a matrix, singular values sorted nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// `n x r` orthonormal-column factor.
    pub left: DMatrix<f64>,
    /// Length-`r` nonincreasing nonnegative singular values.
    pub singulars: DVector<f64>,
    /// `m x r` orthonormal-column factor (the input is `left * diag * right^T`).
    pub right: DMatrix<f64>,
}

impl SvdFactors {
    /// Computes the thin SVD, `r = min(n, m)`.
    pub fn thin(m: &DMatrix<f64>) -> Result<SvdFactors> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::SvdFailed);
        }
        let svd = nalgebra::SVD::try_new(m.clone(), true, true, f64::EPSILON, 0)
            .ok_or(Error::SvdFailed)?;
        let left = svd.u.ok_or(Error::SvdFailed)?;
        let right = svd.v_t.ok_or(Error::SvdFailed)?.transpose();
        Ok(SvdFactors {
            left,
            singulars: svd.singular_values,
            right,
        })
    }

    /// `left * diag(values) * right^T` for any values of matching length.
    pub fn reconstruct_with(&self, values: &[f64]) -> DMatrix<f64> {
        assert_eq!(values.len(), self.singulars.len());
        let mut scaled = self.left.clone();
        for (mut col, &v) in scaled.column_iter_mut().zip(values) {
            col *= v;
        }
        scaled * self.right.transpose()
    }
}

/// Singular values of a matrix, nonincreasing.
pub fn singular_values(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::SvdFailed);
    }
    let svd =
        nalgebra::SVD::try_new(m.clone(), false, false, f64::EPSILON, 0).ok_or(Error::SvdFailed)?;
    Ok(svd.singular_values)
}

/// Per-singular-value weights `w_i = exp(-s_i^2 / sigma^2)`, each in (0, 1],
/// nondecreasing when the generating values are nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
    sigma_scale: f64,
}

impl WeightVector {
    /// All-ones weights (plain SVT), used before any singular values exist.
    pub fn uniform(len: usize, sigma_scale: f64) -> WeightVector {
        WeightVector {
            w: vec![1.0; len],
            sigma_scale,
        }
    }

    /// Wraps explicit weights, checking each lies in (0, 1].
    pub fn from_parts(w: Vec<f64>, sigma_scale: f64) -> Result<WeightVector> {
        if !(sigma_scale.is_finite() && sigma_scale > 0.0) {
            return Err(Error::InvalidConfig("sigma_scale must be positive".into()));
        }
        if let Some(bad) = w.iter().find(|&&wi| !(0.0 < wi && wi <= 1.0)) {
            return Err(Error::InvalidConfig(format!("weight {bad} outside (0, 1]")));
        }
        Ok(WeightVector { w, sigma_scale })
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn sigma_scale(&self) -> f64 {
        self.sigma_scale
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Builds the weight vector `w_i = exp(-s_i^2 / sigma_scale^2)` from
/// singular values `s`.
pub fn compute_weights(singulars: &[f64], sigma_scale: f64) -> Result<WeightVector> {
    if !(sigma_scale.is_finite() && sigma_scale > 0.0) {
        return Err(Error::InvalidConfig("sigma_scale must be positive".into()));
    }
    let s2 = sigma_scale * sigma_scale;
    Ok(WeightVector {
        w: singulars.iter().map(|s| (-(s * s) / s2).exp()).collect(),
        sigma_scale,
    })
}

/// Weighted singular value thresholding: with `M = A diag(s) B^T`, returns
/// `A diag(shrink(s_i, w_i * tau)) B^T` together with the factors of `M`.
/// Weights pair with singular values by index in nonincreasing order.
pub fn weighted_svt(
    m: &DMatrix<f64>,
    weights: &WeightVector,
    tau: f64,
) -> Result<(DMatrix<f64>, SvdFactors)> {
    if tau < 0.0 {
        return Err(Error::InvalidConfig("svt threshold must be >= 0".into()));
    }
    let factors = SvdFactors::thin(m)?;
    if weights.len() < factors.singulars.len() {
        return Err(Error::InvalidConfig(format!(
            "{} weights for {} singular values",
            weights.len(),
            factors.singulars.len()
        )));
    }
    let thresholded: Vec<f64> = factors
        .singulars
        .iter()
        .zip(weights.weights())
        .map(|(&s, &w)| shrink_scalar(s, w * tau))
        .collect();
    Ok((factors.reconstruct_with(&thresholded), factors))
}

/// Weighted nuclear norm `sum_i w_i * s_i(M)` with `s` nonincreasing.
pub fn weighted_nuclear_norm(m: &DMatrix<f64>, weights: &WeightVector) -> Result<f64> {
    let s = singular_values(m)?;
    if weights.len() < s.len() {
        return Err(Error::InvalidConfig(format!(
            "{} weights for {} singular values",
            weights.len(),
            s.len()
        )));
    }
    Ok(s.iter().zip(weights.weights()).map(|(s, w)| s * w).sum())
}
