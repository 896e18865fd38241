use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::{check_feedback, rank_top, require_context, Policy};
use crate::cascade::{Feedback, RankedAction};
use crate::error::{invalid, Error, Result};
use crate::features::FeatureMatrix;
use crate::glm::sigmoid;
use crate::linalg::{axpy, dot};
use crate::posterior::{mvn_sample_precision, EllipsoidState};

/// Logistic Thompson sampling with an online Newton-step estimate.
///
/// `V` starts at `K·I` and grows by `x xᵀ` per examined item; the estimate
/// takes one step `θ̂ ← θ̂ + α σ(-ȳ θ̂ᵀx) ȳ V⁻¹x` with `ȳ ∈ {-1, +1}`.
/// Sampling uses `N(θ̂, s² V⁻¹)` with `s = 1` unless overridden.
#[derive(Debug, Clone)]
pub struct NewtonGlmTs {
    dim: usize,
    list_len: usize,
    step_size: f64,
    scale: f64,
    gram: EllipsoidState,
    theta_hat: Vec<f64>,
    /// Index of the next observation; starts at 1 and advances per examined item.
    counter: u64,
    last_context: Option<FeatureMatrix>,
}

impl NewtonGlmTs {
    pub fn new(dim: usize, list_len: usize, step_size: f64) -> Result<Self> {
        if list_len == 0 {
            return Err(invalid("list length must be positive"));
        }
        if !(step_size > 0.0 && step_size.is_finite()) {
            return Err(invalid("step size must be positive"));
        }
        Ok(Self {
            dim,
            list_len,
            step_size,
            scale: 1.0,
            gram: EllipsoidState::new(dim, list_len as f64)?,
            theta_hat: vec![0.0; dim],
            counter: 1,
            last_context: None,
        })
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(invalid("scale must be nonnegative"));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn gram(&self) -> &EllipsoidState {
        &self.gram
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }
}

impl Policy for NewtonGlmTs {
    fn name(&self) -> &'static str {
        "newton-glmts"
    }

    fn select(&mut self, context: Option<&FeatureMatrix>, rng: &mut dyn RngCore) -> Result<RankedAction> {
        let ctx = require_context(context, self.dim)?;
        let theta = mvn_sample_precision(&self.theta_hat, self.scale, self.gram.gram_cholesky(), rng)?;
        let action = rank_top(&ctx.scores(&theta), self.list_len)?;
        self.last_context = Some(ctx.clone());
        Ok(action)
    }

    fn update(&mut self, action: &RankedAction, feedback: &Feedback) -> Result<()> {
        let ctx = self.last_context.as_ref().ok_or(Error::MissingContext)?;
        check_feedback(action, feedback, Some(ctx.num_items()))?;
        for (pos, value) in feedback.observations() {
            let x = ctx.row(action.item_at(pos));
            self.gram.gram_update(x, 1.0)?;
            let y = if value >= 0.5 { 1.0 } else { -1.0 };
            let g = self.gram.gram_inv().mul_vec(x);
            let coef = self.step_size * sigmoid(-y * dot(&self.theta_hat, x)) * y;
            axpy(coef, &g, &mut self.theta_hat);
            self.counter += 1;
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.gram.reset();
        self.theta_hat = vec![0.0; self.dim];
        self.counter = 1;
        self.last_context = None;
    }
}
