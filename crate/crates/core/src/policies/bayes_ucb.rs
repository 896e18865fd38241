use alloc::vec::Vec;

use rand::RngCore;

use super::{check_feedback, check_list_len, rank_top, Policy};
use crate::cascade::{Feedback, RankedAction};
use crate::error::Result;
use crate::features::FeatureMatrix;
use crate::posterior::BetaItemPosterior;

/// Ranks items by the `max(1 - 1/t, 1/2)` quantile of their Beta posterior.
#[derive(Debug, Clone)]
pub struct BayesUcb {
    list_len: usize,
    posterior: BetaItemPosterior,
    round: u64,
    /// Last index per item; warm-starts the quantile solver.
    last_index: Vec<f64>,
}

impl BayesUcb {
    pub fn new(list_len: usize, prior_alphas: Vec<f64>, prior_betas: Vec<f64>) -> Result<Self> {
        let posterior = BetaItemPosterior::new(prior_alphas, prior_betas)?;
        check_list_len(list_len, posterior.num_items())?;
        Ok(Self {
            list_len,
            last_index: alloc::vec![f64::NAN; posterior.num_items()],
            posterior,
            round: 0,
        })
    }

    pub fn quantile_level(t: u64) -> f64 {
        (1.0 - 1.0 / t.max(1) as f64).max(0.5)
    }

    pub fn posterior(&self) -> &BetaItemPosterior {
        &self.posterior
    }
}

impl Policy for BayesUcb {
    fn name(&self) -> &'static str {
        "bayes-ucb"
    }

    fn select(&mut self, _context: Option<&FeatureMatrix>, _rng: &mut dyn RngCore) -> Result<RankedAction> {
        self.round += 1;
        let q = Self::quantile_level(self.round);
        for i in 0..self.posterior.num_items() {
            self.last_index[i] = self.posterior.quantile_near(i, q, self.last_index[i])?;
        }
        rank_top(&self.last_index, self.list_len)
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
        self.round = 0;
        self.last_index.iter_mut().for_each(|v| *v = f64::NAN);
    }
}
