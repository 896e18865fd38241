use alloc::vec::Vec;

use rand::RngCore;

use super::{check_feedback, rank_top, require_context, ContextualConfig, Policy};
use crate::cascade::{Feedback, RankedAction};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::dot;
use crate::posterior::{delta_schedule, radius_beta_t, EllipsoidState, RadiusParams};

/// Ranks items by `xᵀθ̂ + c ‖x‖_{V⁻¹}`.
///
/// `c` is the scheduled radius `β_t(δ_t)` unless a constant is configured.
#[derive(Debug, Clone)]
pub struct CascadeLinUcb {
    cfg: ContextualConfig,
    radius: RadiusParams,
    ellipsoid: EllipsoidState,
    round: u64,
    last_context: Option<FeatureMatrix>,
}

impl CascadeLinUcb {
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

    pub fn confidence_at(&self, t: u64) -> f64 {
        self.cfg.scale_override.unwrap_or_else(|| {
            radius_beta_t(&self.radius.with_delta(delta_schedule(self.cfg.delta, t)), t)
        })
    }
}

impl Policy for CascadeLinUcb {
    fn name(&self) -> &'static str {
        "cascade-linucb"
    }

    fn select(&mut self, context: Option<&FeatureMatrix>, _rng: &mut dyn RngCore) -> Result<RankedAction> {
        let ctx = require_context(context, self.cfg.dim)?;
        self.round += 1;
        let c = self.confidence_at(self.round);
        let theta = self.ellipsoid.theta_hat();
        let index: Vec<f64> = ctx
            .rows()
            .map(|x| dot(x, theta) + c * libm::sqrt(self.ellipsoid.inv_norm_sq(x).max(0.0)))
            .collect();
        let action = rank_top(&index, self.cfg.list_len)?;
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
