use alloc::vec::Vec;

use rand::RngCore;

use super::{check_feedback, check_list_len, rank_top, Policy};
use crate::cascade::{Feedback, RankedAction};
use crate::error::Result;
use crate::features::FeatureMatrix;
use crate::posterior::GaussianItemPosterior;

/// Gaussian Thompson sampling over independent items.
///
/// Each round draws one sample per item from its Gaussian posterior and shows
/// the `K` largest. The prior is flat-ish `N(μ₀, σ₀²)` regardless of the true
/// click-probability distribution.
#[derive(Debug, Clone)]
pub struct GaussianTs {
    list_len: usize,
    posterior: GaussianItemPosterior,
}

impl GaussianTs {
    pub fn new(num_items: usize, list_len: usize, prior_mean: f64, prior_var: f64, noise_var: f64) -> Result<Self> {
        check_list_len(list_len, num_items)?;
        Ok(Self {
            list_len,
            posterior: GaussianItemPosterior::new(num_items, prior_mean, prior_var, noise_var)?,
        })
    }

    pub fn posterior(&self) -> &GaussianItemPosterior {
        &self.posterior
    }

    pub fn posterior_mut(&mut self) -> &mut GaussianItemPosterior {
        &mut self.posterior
    }
}

impl Policy for GaussianTs {
    fn name(&self) -> &'static str {
        "gts"
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
            self.posterior.observe(action.item_at(pos), value);
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.posterior.reset();
    }
}
