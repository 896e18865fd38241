use alloc::vec::Vec;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::{Cholesky, Matrix};

const JITTER: f64 = 1e-10;

/// Draws from `N(mean, scale² · cov)` through a Cholesky factor of `cov`.
///
/// A covariance that fails to factor is retried once with `1e-10·I` added to
/// the diagonal before the error is reported.
pub fn mvn_sample(mean: &[f64], scale: f64, cov: &Matrix, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
    if cov.rows() != mean.len() || cov.cols() != mean.len() {
        return Err(Error::DimensionMismatch {
            expected: mean.len(),
            got: cov.rows(),
        });
    }
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(invalid("sampling scale must be finite and nonnegative"));
    }
    if scale == 0.0 {
        return Ok(mean.to_vec());
    }
    let chol = match cov.cholesky() {
        Ok(c) => c,
        Err(_) => {
            let mut jittered = cov.clone();
            for i in 0..mean.len() {
                jittered[(i, i)] += JITTER;
            }
            jittered.cholesky()?
        }
    };
    let z: Vec<f64> = (0..mean.len()).map(|_| StandardNormal.sample(rng)).collect();
    let lz = chol.lower_mul(&z);
    Ok(mean.iter().zip(lz).map(|(m, v)| m + scale * v).collect())
}

/// Draws from `N(mean, scale² · P⁻¹)` given the Cholesky factor of the
/// precision `P = L Lᵀ`, as `mean + scale · L⁻ᵀ z`.
pub fn mvn_sample_precision(
    mean: &[f64],
    scale: f64,
    precision: &Cholesky,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>> {
    if precision.lower().rows() != mean.len() {
        return Err(Error::DimensionMismatch {
            expected: mean.len(),
            got: precision.lower().rows(),
        });
    }
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(invalid("sampling scale must be finite and nonnegative"));
    }
    if scale == 0.0 {
        return Ok(mean.to_vec());
    }
    let z: Vec<f64> = (0..mean.len()).map(|_| StandardNormal.sample(rng)).collect();
    let u = precision.solve_upper(&z);
    Ok(mean.iter().zip(u).map(|(m, v)| m + scale * v).collect())
}
