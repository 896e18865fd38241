use alloc::vec::Vec;

use rand::RngCore;

use super::{check_feedback, check_list_len, rank_top, Policy};
use crate::cascade::{Feedback, RankedAction};
use crate::error::Result;
use crate::features::FeatureMatrix;
use crate::posterior::BetaItemPosterior;

/// Beta-Bernoulli Thompson sampling over independent items.
#[derive(Debug, Clone)]
pub struct TsBeta {
    list_len: usize,
    posterior: BetaItemPosterior,
}

impl TsBeta {
    pub fn new(list_len: usize, prior_alphas: Vec<f64>, prior_betas: Vec<f64>) -> Result<Self> {
        let posterior = BetaItemPosterior::new(prior_alphas, prior_betas)?;
        check_list_len(list_len, posterior.num_items())?;
        Ok(Self { list_len, posterior })
    }

    pub fn posterior(&self) -> &BetaItemPosterior {
        &self.posterior
    }
}

impl Policy for TsBeta {
    fn name(&self) -> &'static str {
        "ts-beta"
    }

    fn select(&mut self, _context: Option<&FeatureMatrix>, rng: &mut dyn RngCore) -> Result<RankedAction> {
        let samples: Vec<f64> = (0..self.posterior.num_items())
            .map(|i| self.posterior.sample(i, rng))
            .collect();
        rank_top(&samples, self.list_len)
    }

    fn update(&mut self, action: &RankedAction, feedback: &Feedback) -> Result<()> {
        check_feedback(action, feedback, Some(self.posterior.num_items()))?;
        for (pos, value) in feedback.observations() {
            self.posterior.observe(action.item_at(pos), value >= 0.5);
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.posterior.reset();
    }
}
