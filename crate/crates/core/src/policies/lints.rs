use rand::RngCore;

use super::{check_feedback, rank_top, require_context, ContextualConfig, Policy};
use crate::cascade::{Feedback, RankedAction};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::posterior::{delta_schedule, mvn_sample_precision, radius_beta_t, EllipsoidState, RadiusParams};

/// Linear Thompson sampling for cascading bandits.
///
/// Samples `θ̃ ~ N(θ̂_t, β_t(δ_t)² V_t⁻¹)` around the ridge estimate and ranks
/// items by `xᵀθ̃`. Every examined position contributes `x xᵀ` to the Gram
/// matrix and `x y` to the response vector.
#[derive(Debug, Clone)]
pub struct LinTs {
    cfg: ContextualConfig,
    radius: RadiusParams,
    ellipsoid: EllipsoidState,
    round: u64,
    last_context: Option<FeatureMatrix>,
}

impl LinTs {
    pub fn new(cfg: ContextualConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            radius: cfg.radius_params()?,
            ellipsoid: EllipsoidState::new(cfg.dim, cfg.lambda)?,
            cfg,
            round: 0,
            last_context: None,
        })
    }

    pub fn ellipsoid(&self) -> &EllipsoidState {
        &self.ellipsoid
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Sampling scale for round `t`: `β_t(δ_t)` unless overridden.
    pub fn scale_at(&self, t: u64) -> f64 {
        self.cfg.scale_override.unwrap_or_else(|| {
            radius_beta_t(&self.radius.with_delta(delta_schedule(self.cfg.delta, t)), t)
        })
    }
}

impl Policy for LinTs {
    fn name(&self) -> &'static str {
        "lints"
    }

    fn select(&mut self, context: Option<&FeatureMatrix>, rng: &mut dyn RngCore) -> Result<RankedAction> {
        let ctx = require_context(context, self.cfg.dim)?;
        self.round += 1;
        let scale = self.scale_at(self.round);
        let theta = mvn_sample_precision(self.ellipsoid.theta_hat(), scale, self.ellipsoid.gram_cholesky(), rng)?;
        let action = rank_top(&ctx.scores(&theta), self.cfg.list_len)?;
        self.last_context = Some(ctx.clone());
        Ok(action)
    }

    fn update(&mut self, action: &RankedAction, feedback: &Feedback) -> Result<()> {
        let ctx = self.last_context.as_ref().ok_or(Error::MissingContext)?;
        check_feedback(action, feedback, Some(ctx.num_items()))?;
        for (pos, value) in feedback.observations() {
            self.ellipsoid
                .rank_one_update(ctx.row(action.item_at(pos)), 1.0, value)?;
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.ellipsoid.reset();
        self.round = 0;
        self.last_context = None;
    }
}
