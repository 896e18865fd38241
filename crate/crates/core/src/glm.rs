//! Link functions and the ridge-regularized GLM maximum-likelihood solver.
//!
//! The estimator solves the score equation
//!
//! ```text
//! λθ + Σ χ (μ(xᵀθ) − y) x = 0
//! ```
//!
//! by Newton / iteratively reweighted least squares, where the Hessian is the
//! weighted Gram matrix `λI + Σ χ μ̇(xᵀθ) x xᵀ`. The ridge term keeps the root
//! finite when the clicks are linearly separable.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm, Matrix};

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

pub fn sigmoid_derivative(z: f64) -> f64 {
    let s = sigmoid(z);
    s * (1.0 - s)
}

/// `log(1 + eᶻ)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + libm::log1p(libm::exp(-z.abs()))
}

/// Smallest sigmoid slope over scores `|xᵀθ| ≤ S`.
///
/// `μ̇` is even and decreasing in `|z|`, so the infimum sits at `|z| = S`.
pub fn kappa_min(norm_bound: f64) -> f64 {
    sigmoid_derivative(norm_bound.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LinkFunction {
    #[default]
    Sigmoid,
    Identity,
}

impl LinkFunction {
    pub fn eval(self, z: f64) -> f64 {
        match self {
            Self::Sigmoid => sigmoid(z),
            Self::Identity => z,
        }
    }

    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Self::Sigmoid => sigmoid_derivative(z),
            Self::Identity => 1.0,
        }
    }

    /// Antiderivative of the link; the per-row loss is `F(z) − y z`.
    fn integral(self, z: f64) -> f64 {
        match self {
            Self::Sigmoid => softplus(z),
            Self::Identity => 0.5 * z * z,
        }
    }

    /// `κ`: minimum slope over `|z| ≤ S`.
    pub fn kappa(self, norm_bound: f64) -> f64 {
        match self {
            Self::Sigmoid => kappa_min(norm_bound),
            Self::Identity => 1.0,
        }
    }

    /// Lipschitz constant `L_μ`.
    pub fn lipschitz(self) -> f64 {
        match self {
            Self::Sigmoid => 0.25,
            Self::Identity => 1.0,
        }
    }
}

/// One (possibly aggregated) examined observation: `count` copies of
/// `features` whose labels sum to `label_sum`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmRow {
    pub features: Vec<f64>,
    pub count: f64,
    pub label_sum: f64,
}

/// Examined observations for the GLM estimator.
///
/// Rows pushed under the same key with bit-identical features are merged;
/// the score equation only depends on per-row counts and label sums, so this
/// is exact and keeps the per-iteration cost bounded by the number of
/// distinct feature vectors.
#[derive(Debug, Clone, Default)]
pub struct GlmDataset {
    dim: usize,
    rows: Vec<GlmRow>,
    last_row_for_key: BTreeMap<usize, usize>,
    observations: u64,
}

impl GlmDataset {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[GlmRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of examined observations (not rows).
    pub fn observations(&self) -> u64 {
        self.observations
    }

    fn check(&self, x: &[f64], label: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !(0.0..=1.0).contains(&label) {
            return Err(invalid(alloc::format!("GLM label {label} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn push(&mut self, x: &[f64], label: f64) -> Result<()> {
        self.check(x, label)?;
        self.rows.push(GlmRow {
            features: x.to_vec(),
            count: 1.0,
            label_sum: label,
        });
        self.observations += 1;
        Ok(())
    }

    /// Like [`push`](Self::push), merging into the previous row for `key` when
    /// its features are bit-identical.
    pub fn push_keyed(&mut self, key: usize, x: &[f64], label: f64) -> Result<()> {
        self.check(x, label)?;
        if let Some(&idx) = self.last_row_for_key.get(&key) {
            let row = &mut self.rows[idx];
            if row.features.iter().zip(x).all(|(a, b)| a.to_bits() == b.to_bits()) {
                row.count += 1.0;
                row.label_sum += label;
                self.observations += 1;
                return Ok(());
            }
        }
        self.last_row_for_key.insert(key, self.rows.len());
        self.push(x, label)
    }

    pub fn clear(&mut self) {
        self.rows.clear();
        self.last_row_for_key.clear();
        self.observations = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsOptions {
    pub lambda: f64,
    /// Convergence threshold on the Euclidean norm of the ridge score.
    pub tol: f64,
    pub max_iter: usize,
    pub link: LinkFunction,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            tol: 1e-8,
            max_iter: 100,
            link: LinkFunction::Sigmoid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrlsSolution {
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Objective value after every accepted iterate, starting point first.
    pub objective_trace: Vec<f64>,
}

/// Ridge-penalized negative log-likelihood `λ/2‖θ‖² + Σ (c F(xᵀθ) − s xᵀθ)`.
pub fn glm_objective(data: &GlmDataset, theta: &[f64], lambda: f64, link: LinkFunction) -> f64 {
    let mut f = 0.5 * lambda * dot(theta, theta);
    for row in &data.rows {
        let z = dot(&row.features, theta);
        f += row.count * link.integral(z) - row.label_sum * z;
    }
    f
}

/// Ridge score `λθ + Σ (c μ(xᵀθ) − s) x`; zero at the estimate.
pub fn glm_score(data: &GlmDataset, theta: &[f64], lambda: f64, link: LinkFunction) -> Vec<f64> {
    let mut g: Vec<f64> = theta.iter().map(|t| lambda * t).collect();
    for row in &data.rows {
        let z = dot(&row.features, theta);
        let r = row.count * link.eval(z) - row.label_sum;
        crate::linalg::axpy(r, &row.features, &mut g);
    }
    g
}

fn glm_hessian(data: &GlmDataset, theta: &[f64], lambda: f64, link: LinkFunction) -> Matrix {
    let mut h = Matrix::scaled_identity(data.dim, lambda);
    for row in &data.rows {
        let z = dot(&row.features, theta);
        h.add_outer(row.count * link.derivative(z), &row.features);
    }
    h
}

/// Solves the ridge score equation by damped Newton (IRLS) iterations.
///
/// Each iteration takes the Newton step and halves it until the objective
/// does not increase. Fails with [`Error::IrlsNotConverged`] when the score
/// norm is still above `tol` after `max_iter` iterations.
///
/// With fewer distinct rows than dimensions and `λ > 0`, the minimizer has no
/// component outside the span of the rows, so the iterations run in an
/// orthonormal basis of that span and the result is mapped back.
pub fn irls_solve(data: &GlmDataset, opts: &IrlsOptions, warm_start: Option<&[f64]>) -> Result<IrlsSolution> {
    if let Some(w) = warm_start {
        if w.len() != data.dim {
            return Err(Error::DimensionMismatch {
                expected: data.dim,
                got: w.len(),
            });
        }
    }
    if !(opts.lambda > 0.0) || data.rows.is_empty() || data.rows.len() >= data.dim {
        return irls_dense(data, opts, warm_start);
    }
    let basis = row_space_basis(&data.rows);
    let project = |x: &[f64]| -> Vec<f64> { basis.iter().map(|q| dot(q, x)).collect() };
    let reduced = GlmDataset {
        dim: basis.len(),
        rows: data
            .rows
            .iter()
            .map(|r| GlmRow {
                features: project(&r.features),
                count: r.count,
                label_sum: r.label_sum,
            })
            .collect(),
        last_row_for_key: BTreeMap::new(),
        observations: data.observations,
    };
    let warm = warm_start.filter(|w| w.iter().all(|v| v.is_finite())).map(|w| project(w));
    let sol = match irls_dense(&reduced, opts, warm.as_deref()) {
        Ok(sol) => sol,
        Err(_) => return irls_dense(data, opts, warm_start),
    };
    let mut theta = vec![0.0; data.dim];
    for (q, b) in basis.iter().zip(&sol.theta) {
        crate::linalg::axpy(*b, q, &mut theta);
    }
    let grad_norm = norm(&glm_score(data, &theta, opts.lambda, opts.link));
    if !(grad_norm <= opts.tol) {
        // round-off from the change of basis; polish in the full space
        return irls_dense(data, opts, Some(&theta));
    }
    Ok(IrlsSolution {
        theta,
        iterations: sol.iterations,
        grad_norm,
        objective_trace: sol.objective_trace,
    })
}

/// Orthonormal basis of the span of the row features (Gram–Schmidt with one
/// re-orthogonalization pass).
fn row_space_basis(rows: &[GlmRow]) -> Vec<Vec<f64>> {
    let scale = rows.iter().map(|r| norm(&r.features)).fold(0.0, f64::max);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        let mut v = row.features.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                crate::linalg::axpy(-c, q, &mut v);
            }
        }
        let n = norm(&v);
        if n > 1e-12 * scale {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis
}

fn irls_dense(data: &GlmDataset, opts: &IrlsOptions, warm_start: Option<&[f64]>) -> Result<IrlsSolution> {
    if !(opts.lambda > 0.0) && data.is_empty() {
        return Err(invalid("IRLS needs data or a positive ridge parameter"));
    }
    if opts.lambda < 0.0 {
        return Err(invalid("IRLS ridge parameter must be nonnegative"));
    }
    let dim = data.dim;
    let mut theta = match warm_start {
        Some(w) if w.len() == dim && w.iter().all(|v| v.is_finite()) => w.to_vec(),
        Some(w) if w.len() != dim => {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: w.len(),
            })
        }
        _ => vec![0.0; dim],
    };
    let link = opts.link;
    let mut f = glm_objective(data, &theta, opts.lambda, link);
    let mut trace = vec![f];
    let mut grad = glm_score(data, &theta, opts.lambda, link);
    let mut grad_norm = norm(&grad);

    for iter in 0..opts.max_iter {
        if grad_norm <= opts.tol {
            return Ok(IrlsSolution {
                theta,
                iterations: iter,
                grad_norm,
                objective_trace: trace,
            });
        }
        let step = glm_hessian(data, &theta, opts.lambda, link).cholesky()?.solve(&grad);

        // Near the optimum the objective decrease drops below its round-off,
        // so a step that leaves f unchanged to that level is judged by the score.
        let f_tol = 1e-12 * f.abs().max(1.0);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            let fc = glm_objective(data, &cand, opts.lambda, link);
            if fc < f - f_tol {
                accepted = Some((cand, fc));
                break;
            }
            if fc <= f + f_tol {
                let g = glm_score(data, &cand, opts.lambda, link);
                if norm(&g) < grad_norm {
                    accepted = Some((cand, fc));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            break;
        };
        theta = cand;
        f = fc;
        trace.push(f);
        grad = glm_score(data, &theta, opts.lambda, link);
        grad_norm = norm(&grad);
    }

    if grad_norm <= opts.tol {
        Ok(IrlsSolution {
            theta,
            iterations: opts.max_iter,
            grad_norm,
            objective_trace: trace,
        })
    } else {
        Err(Error::IrlsNotConverged {
            iterations: opts.max_iter,
            grad_norm,
        })
    }
}

/// Euclidean projection onto `‖θ‖ ≤ radius`.
pub fn project_to_ball(theta: &[f64], radius: f64) -> Vec<f64> {
    let n = norm(theta);
    if n > radius && n > 0.0 {
        theta.iter().map(|v| v * radius / n).collect()
    } else {
        theta.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sigmoid_basics() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid_derivative(0.0), 0.25);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert_abs_diff_eq!(sigmoid(3.0) + sigmoid(-3.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa_min(0.0), 0.25);
        let s1 = sigmoid(1.0);
        assert_abs_diff_eq!(kappa_min(1.0), s1 * (1.0 - s1), epsilon = 1e-15);
        assert_abs_diff_eq!(kappa_min(1.0), 0.19661, epsilon = 1e-5);
        assert_eq!(LinkFunction::Identity.kappa(3.0), 1.0);
    }

    #[test]
    fn empty_data_gives_zero() {
        let data = GlmDataset::new(3);
        let sol = irls_solve(&data, &IrlsOptions { lambda: 1.0, ..Default::default() }, None).unwrap();
        assert_eq!(sol.theta, vec![0.0; 3]);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn empty_data_without_ridge_is_rejected() {
        let data = GlmDataset::new(2);
        assert!(irls_solve(&data, &IrlsOptions { lambda: 0.0, ..Default::default() }, None).is_err());
    }

    #[test]
    fn identity_link_is_ridge_regression() {
        let mut data = GlmDataset::new(2);
        data.push(&[1.0, 0.0], 0.8).unwrap();
        data.push(&[0.0, 1.0], 0.2).unwrap();
        let opts = IrlsOptions {
            lambda: 1.0,
            link: LinkFunction::Identity,
            ..Default::default()
        };
        let sol = irls_solve(&data, &opts, None).unwrap();
        assert_abs_diff_eq!(sol.theta[0], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.theta[1], 0.1, epsilon = 1e-12);
    }

    #[test]
    fn keyed_rows_merge_only_on_identical_features() {
        let mut data = GlmDataset::new(2);
        data.push_keyed(3, &[0.5, 0.5], 1.0).unwrap();
        data.push_keyed(3, &[0.5, 0.5], 0.0).unwrap();
        data.push_keyed(4, &[0.5, 0.5], 0.0).unwrap();
        data.push_keyed(3, &[0.5, 0.6], 0.0).unwrap();
        assert_eq!(data.rows().len(), 3);
        assert_eq!(data.rows()[0].count, 2.0);
        assert_eq!(data.rows()[0].label_sum, 1.0);
        assert_eq!(data.observations(), 4);

        // merged and unmerged datasets have the same solution
        let mut flat = GlmDataset::new(2);
        for (x, y) in [([0.5, 0.5], 1.0), ([0.5, 0.5], 0.0), ([0.5, 0.5], 0.0), ([0.5, 0.6], 0.0)] {
            flat.push(&x, y).unwrap();
        }
        let opts = IrlsOptions {
            lambda: 0.1,
            ..Default::default()
        };
        let a = irls_solve(&data, &opts, None).unwrap().theta;
        let b = irls_solve(&flat, &opts, None).unwrap().theta;
        assert_abs_diff_eq!(a[0], b[0], epsilon = 1e-10);
        assert_abs_diff_eq!(a[1], b[1], epsilon = 1e-10);
    }

    #[test]
    fn rejects_bad_rows() {
        let mut data = GlmDataset::new(2);
        assert!(data.push(&[1.0], 0.0).is_err());
        assert!(data.push(&[1.0, 0.0], 1.5).is_err());
    }

    #[test]
    fn non_convergence_is_reported() {
        let mut data = GlmDataset::new(1);
        data.push(&[1.0], 1.0).unwrap();
        let opts = IrlsOptions {
            lambda: 1e-3,
            max_iter: 1,
            tol: 1e-14,
            ..Default::default()
        };
        assert!(matches!(
            irls_solve(&data, &opts, None),
            Err(Error::IrlsNotConverged { iterations: 1, .. })
        ));
    }

    #[test]
    fn projection() {
        assert_eq!(project_to_ball(&[3.0, 4.0], 1.0), vec![0.6, 0.8]);
        assert_eq!(project_to_ball(&[0.3, 0.4], 1.0), vec![0.3, 0.4]);
    }
}
