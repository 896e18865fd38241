use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::{check_feedback, rank_top, require_context, ContextualConfig, Policy};
use crate::cascade::{Feedback, RankedAction};
use crate::error::{invalid, Error, Result};
use crate::features::FeatureMatrix;
use crate::glm::{irls_solve, project_to_ball, GlmDataset, IrlsOptions, LinkFunction};
use crate::linalg::dot;
use crate::posterior::{delta_schedule, mvn_sample_precision, radius_beta_t, EllipsoidState, RadiusParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmTsConfig {
    pub contextual: ContextualConfig,
    pub link: LinkFunction,
    /// Re-solve the MLE every this many rounds (1 = every round).
    pub refit_every: u64,
    pub irls_tol: f64,
    pub irls_max_iter: usize,
}

impl GlmTsConfig {
    pub fn new(contextual: ContextualConfig, link: LinkFunction) -> Self {
        Self {
            contextual,
            link,
            refit_every: 1,
            irls_tol: 1e-8,
            irls_max_iter: 100,
        }
    }
}

/// GLM Thompson sampling with a Laplace posterior.
///
/// The estimate `θ̂_t` is the ridge-regularized MLE over all examined rows,
/// warm-started from the previous solution and projected onto `‖θ‖ ≤ S`.
/// Samples are drawn from `N(θ̂_t, β_t(δ_t)² V_t⁻¹ / κ²)`, where `V` grows by
/// `μ̇(θ̂ᵀx) x xᵀ` for every examined item.
#[derive(Debug, Clone)]
pub struct GlmTs {
    cfg: GlmTsConfig,
    radius: RadiusParams,
    kappa: f64,
    gram: EllipsoidState,
    data: GlmDataset,
    /// Unprojected MLE; used as the warm start.
    theta_mle: Vec<f64>,
    theta_hat: Vec<f64>,
    round: u64,
    rounds_since_refit: u64,
    last_context: Option<FeatureMatrix>,
}

impl GlmTs {
    pub fn new(cfg: GlmTsConfig) -> Result<Self> {
        cfg.contextual.validate()?;
        if cfg.refit_every == 0 {
            return Err(invalid("refit_every must be at least 1"));
        }
        let dim = cfg.contextual.dim;
        Ok(Self {
            radius: cfg.contextual.radius_params()?,
            kappa: cfg.link.kappa(cfg.contextual.norm_bound),
            gram: EllipsoidState::new(dim, cfg.contextual.lambda)?,
            data: GlmDataset::new(dim),
            theta_mle: vec![0.0; dim],
            theta_hat: vec![0.0; dim],
            round: 0,
            rounds_since_refit: 0,
            last_context: None,
            cfg,
        })
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn gram(&self) -> &EllipsoidState {
        &self.gram
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dataset(&self) -> &GlmDataset {
        &self.data
    }

    /// Laplace sampling scale `β_t(δ_t)/κ` for round `t`.
    pub fn scale_at(&self, t: u64) -> f64 {
        let beta = self.cfg.contextual.scale_override.unwrap_or_else(|| {
            radius_beta_t(
                &self.radius.with_delta(delta_schedule(self.cfg.contextual.delta, t)),
                t,
            )
        });
        beta / self.kappa
    }

    /// One Laplace draw for round `t` at the current state.
    pub fn sample_parameter(&self, t: u64, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        mvn_sample_precision(&self.theta_hat, self.scale_at(t), self.gram.gram_cholesky(), rng)
    }

    fn refit(&mut self) -> Result<()> {
        let opts = IrlsOptions {
            lambda: self.cfg.contextual.lambda,
            tol: self.cfg.irls_tol,
            max_iter: self.cfg.irls_max_iter,
            link: self.cfg.link,
        };
        let sol = irls_solve(&self.data, &opts, Some(&self.theta_mle))?;
        self.theta_hat = project_to_ball(&sol.theta, self.cfg.contextual.norm_bound);
        self.theta_mle = sol.theta;
        Ok(())
    }
}

impl Policy for GlmTs {
    fn name(&self) -> &'static str {
        "glmts"
    }

    fn select(&mut self, context: Option<&FeatureMatrix>, rng: &mut dyn RngCore) -> Result<RankedAction> {
        let ctx = require_context(context, self.cfg.contextual.dim)?;
        self.round += 1;
        let theta = self.sample_parameter(self.round, rng)?;
        // a strictly increasing link preserves the top-K of xᵀθ̃
        let action = rank_top(&ctx.scores(&theta), self.cfg.contextual.list_len)?;
        self.last_context = Some(ctx.clone());
        Ok(action)
    }

    fn update(&mut self, action: &RankedAction, feedback: &Feedback) -> Result<()> {
        let ctx = self.last_context.as_ref().ok_or(Error::MissingContext)?;
        check_feedback(action, feedback, Some(ctx.num_items()))?;
        for (pos, value) in feedback.observations() {
            let item = action.item_at(pos);
            let x = ctx.row(item);
            let weight = self.cfg.link.derivative(dot(&self.theta_hat, x));
            self.gram.gram_update(x, weight)?;
            self.data.push_keyed(item, x, value.clamp(0.0, 1.0))?;
        }
        self.rounds_since_refit += 1;
        if self.rounds_since_refit >= self.cfg.refit_every {
            self.rounds_since_refit = 0;
            self.refit()?;
        }
        Ok(())
    }

    fn reset(&mut self) {
        let dim = self.cfg.contextual.dim;
        self.gram.reset();
        self.data.clear();
        self.theta_mle = vec![0.0; dim];
        self.theta_hat = vec![0.0; dim];
        self.round = 0;
        self.rounds_since_refit = 0;
        self.last_context = None;
    }
}
