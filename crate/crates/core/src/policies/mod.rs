//! Ranking policies behind one select/update interface.
//!
//! Every policy returns `K` distinct items per round and learns only from
//! examined positions (those up to and including the click position).

mod bayes_ucb;
mod fixed;
mod glmts;
mod gts;
mod klucb;
mod lints;
mod linucb;
mod newton;
mod ts_beta;
mod ucb1;

use alloc::vec::Vec;

use rand::RngCore;

pub use bayes_ucb::BayesUcb;
pub use fixed::FixedList;
pub use glmts::{GlmTs, GlmTsConfig};
pub use gts::GaussianTs;
pub use klucb::{kl_bernoulli, kl_ucb_index, CascadeKlUcb};
pub use lints::LinTs;
pub use linucb::CascadeLinUcb;
pub use newton::NewtonGlmTs;
pub use ts_beta::TsBeta;
pub use ucb1::{ucb1_index, CascadeUcb1};

use crate::cascade::{top_k, Feedback, RankedAction};
use crate::error::{invalid, Error, Result};
use crate::features::FeatureMatrix;
use crate::glm::LinkFunction;
use crate::posterior::{RadiusParams, RadiusPrefactor};

/// A ranking policy.
pub trait Policy: Send {
    fn name(&self) -> &'static str;

    /// Chooses the ranked list for this round.
    fn select(&mut self, context: Option<&FeatureMatrix>, rng: &mut dyn RngCore) -> Result<RankedAction>;

    /// Consumes the feedback for `action`; only examined positions are read.
    fn update(&mut self, action: &RankedAction, feedback: &Feedback) -> Result<()>;

    /// Returns to the initial (prior) state.
    fn reset(&mut self);
}

/// Shared settings of the contextual Thompson-sampling and UCB policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextualConfig {
    pub dim: usize,
    pub list_len: usize,
    /// Ridge parameter `λ` (initial Gram matrix `λI`).
    pub lambda: f64,
    /// Parameter-norm bound `S`.
    pub norm_bound: f64,
    pub sigma_sq: f64,
    /// Base confidence `δ`, scheduled per round by the doubling trick.
    pub delta: f64,
    pub prefactor: RadiusPrefactor,
    /// Replaces the scheduled radius `β_t(δ_t)` with a constant when set.
    pub scale_override: Option<f64>,
}

impl ContextualConfig {
    pub fn new(dim: usize, list_len: usize, lambda: f64, norm_bound: f64, sigma_sq: f64, delta: f64) -> Self {
        Self {
            dim,
            list_len,
            lambda,
            norm_bound,
            sigma_sq,
            delta,
            prefactor: RadiusPrefactor::SigmaSq,
            scale_override: None,
        }
    }

    fn radius_params(&self) -> Result<RadiusParams> {
        Ok(RadiusParams::new(self.sigma_sq, self.lambda, self.norm_bound, self.dim, self.delta)?
            .with_prefactor(self.prefactor))
    }

    fn validate(&self) -> Result<()> {
        if self.list_len == 0 {
            return Err(invalid("list length must be positive"));
        }
        if let Some(s) = self.scale_override {
            if !(s >= 0.0) {
                return Err(invalid("scale override must be nonnegative"));
            }
        }
        self.radius_params().map(|_| ())
    }
}

/// `δ = 1/(T (log T + 2))`, the horizon-tuned base confidence.
pub fn default_delta(horizon: u64) -> f64 {
    let t = horizon.max(2) as f64;
    1.0 / (t * (libm::log(t) + 2.0))
}

pub fn gts_policy(num_items: usize, list_len: usize, prior_mean: f64, prior_var: f64, noise_var: f64) -> Result<GaussianTs> {
    GaussianTs::new(num_items, list_len, prior_mean, prior_var, noise_var)
}

pub fn lints_policy(dim: usize, list_len: usize, lambda: f64, norm_bound: f64, sigma_sq: f64, delta: f64) -> Result<LinTs> {
    LinTs::new(ContextualConfig::new(dim, list_len, lambda, norm_bound, sigma_sq, delta))
}

#[allow(clippy::too_many_arguments)]
pub fn glmts_policy(
    dim: usize,
    list_len: usize,
    lambda: f64,
    norm_bound: f64,
    sigma_sq: f64,
    delta: f64,
    link: LinkFunction,
) -> Result<GlmTs> {
    GlmTs::new(GlmTsConfig::new(
        ContextualConfig::new(dim, list_len, lambda, norm_bound, sigma_sq, delta),
        link,
    ))
}

pub fn newton_glmts_policy(dim: usize, list_len: usize, step_size: f64) -> Result<NewtonGlmTs> {
    NewtonGlmTs::new(dim, list_len, step_size)
}

pub fn ts_beta_policy(list_len: usize, prior_alphas: Vec<f64>, prior_betas: Vec<f64>) -> Result<TsBeta> {
    TsBeta::new(list_len, prior_alphas, prior_betas)
}

pub fn bayes_ucb_policy(list_len: usize, prior_alphas: Vec<f64>, prior_betas: Vec<f64>) -> Result<BayesUcb> {
    BayesUcb::new(list_len, prior_alphas, prior_betas)
}

pub fn cascade_ucb1_policy(num_items: usize, list_len: usize) -> Result<CascadeUcb1> {
    CascadeUcb1::new(num_items, list_len)
}

pub fn cascade_klucb_policy(num_items: usize, list_len: usize) -> Result<CascadeKlUcb> {
    CascadeKlUcb::new(num_items, list_len)
}

pub fn cascade_linucb_policy(
    dim: usize,
    list_len: usize,
    lambda: f64,
    norm_bound: f64,
    sigma_sq: f64,
    delta: f64,
    confidence_scale: Option<f64>,
) -> Result<CascadeLinUcb> {
    let mut cfg = ContextualConfig::new(dim, list_len, lambda, norm_bound, sigma_sq, delta);
    cfg.scale_override = confidence_scale;
    CascadeLinUcb::new(cfg)
}

fn check_list_len(list_len: usize, num_items: usize) -> Result<()> {
    if list_len == 0 {
        return Err(invalid("list length must be positive"));
    }
    if list_len > num_items {
        return Err(Error::ListTooLong { list_len, num_items });
    }
    Ok(())
}

fn check_feedback(action: &RankedAction, feedback: &Feedback, num_items: Option<usize>) -> Result<()> {
    if feedback.list_len() != action.len() {
        return Err(Error::DimensionMismatch {
            expected: action.len(),
            got: feedback.list_len(),
        });
    }
    if let Some(n) = num_items {
        if let Some(&item) = action.items().iter().find(|&&i| i >= n) {
            return Err(Error::ItemOutOfRange { item, num_items: n });
        }
    }
    Ok(())
}

fn rank_top(scores: &[f64], list_len: usize) -> Result<RankedAction> {
    check_list_len(list_len, scores.len())?;
    RankedAction::new(top_k(scores, list_len), scores.len())
}

fn require_context<'a>(context: Option<&'a FeatureMatrix>, dim: usize) -> Result<&'a FeatureMatrix> {
    let ctx = context.ok_or(Error::MissingContext)?;
    if ctx.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: ctx.dim(),
        });
    }
    Ok(ctx)
}
