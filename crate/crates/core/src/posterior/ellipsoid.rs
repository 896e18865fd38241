use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};

/// Updates between exact re-inversions of the Gram matrix.
const DEFAULT_REFRESH_EVERY: usize = 512;

/// Regularized design matrix `V = λI + Σ w x xᵀ`, its inverse, the response
/// vector `b = Σ x y` and the least-squares estimate `θ̂ = V⁻¹ b`.
///
/// The inverse is maintained with Sherman–Morrison rank-one updates and the
/// Cholesky factor of `V` with rank-one refactorizations; both are
/// periodically recomputed from `V` to stop round-off from accumulating.
#[derive(Debug, Clone)]
pub struct EllipsoidState {
    lambda: f64,
    gram: Matrix,
    gram_inv: Matrix,
    gram_chol: Cholesky,
    b: Vec<f64>,
    theta_hat: Vec<f64>,
    updates: usize,
    refresh_every: usize,
}

impl EllipsoidState {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(crate::error::invalid("ridge parameter lambda must be positive"));
        }
        Ok(Self {
            lambda,
            gram: Matrix::scaled_identity(dim, lambda),
            gram_inv: Matrix::scaled_identity(dim, 1.0 / lambda),
            gram_chol: Matrix::scaled_identity(dim, lambda).cholesky()?,
            b: vec![0.0; dim],
            theta_hat: vec![0.0; dim],
            updates: 0,
            refresh_every: DEFAULT_REFRESH_EVERY,
        })
    }

    /// `0` disables periodic re-inversion.
    pub fn with_refresh_every(mut self, every: usize) -> Self {
        self.refresh_every = every;
        self
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn gram_inv(&self) -> &Matrix {
        &self.gram_inv
    }

    /// Cholesky factor of `V`, for sampling from `N(·, V⁻¹)`.
    pub fn gram_cholesky(&self) -> &Cholesky {
        &self.gram_chol
    }

    pub fn response(&self) -> &[f64] {
        &self.b
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    /// `‖x‖²_{V⁻¹}`
    pub fn inv_norm_sq(&self, x: &[f64]) -> f64 {
        self.gram_inv.quad_form(x)
    }

    /// `V += w x xᵀ`, `b += x y`, and the estimate is recomputed.
    pub fn rank_one_update(&mut self, x: &[f64], weight: f64, y: f64) -> Result<()> {
        self.check(x, weight)?;
        if weight == 0.0 {
            return Ok(());
        }
        self.add_to_gram(x, weight);
        for (bi, xi) in self.b.iter_mut().zip(x) {
            *bi += xi * y;
        }
        self.theta_hat = self.gram_inv.mul_vec(&self.b);
        Ok(())
    }

    /// `V += w x xᵀ` only; the response vector is left alone (GLM use).
    pub fn gram_update(&mut self, x: &[f64], weight: f64) -> Result<()> {
        self.check(x, weight)?;
        if weight > 0.0 {
            self.add_to_gram(x, weight);
        }
        Ok(())
    }

    fn check(&self, x: &[f64], weight: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if weight < 0.0 || weight.is_nan() {
            return Err(Error::NegativeWeight(weight));
        }
        Ok(())
    }

    fn add_to_gram(&mut self, x: &[f64], weight: f64) {
        self.gram.add_outer(weight, x);
        self.updates += 1;
        if self.refresh_every > 0 && self.updates % self.refresh_every == 0 && self.refresh().is_ok() {
            return;
        }
        self.gram_chol
            .rank_one_update(weight, x)
            .expect("weight and dimension were checked");
        let vx = self.gram_inv.mul_vec(x);
        let denom = 1.0 + weight * dot(x, &vx);
        self.gram_inv.add_outer(-weight / denom, &vx);
    }

    /// Recomputes `V⁻¹` (and `θ̂`) from `V` directly.
    pub fn refresh(&mut self) -> Result<()> {
        self.gram_chol = self.gram.cholesky()?;
        self.gram_inv = self.gram_chol.inverse();
        self.theta_hat = self.gram_inv.mul_vec(&self.b);
        Ok(())
    }

    pub fn log_det(&self) -> Result<f64> {
        Ok(self.gram_chol.log_det())
    }

    pub fn reset(&mut self) {
        let dim = self.dim();
        *self = Self::new(dim, self.lambda)
            .expect("lambda was validated")
            .with_refresh_every(self.refresh_every);
    }
}
