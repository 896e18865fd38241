use rand::RngCore;

use super::Policy;
use crate::cascade::{Feedback, RankedAction};
use crate::error::Result;
use crate::features::FeatureMatrix;

/// Always shows the same list. With the optimal list this is the zero-regret
/// reference used to sanity-check the harness.
#[derive(Debug, Clone)]
pub struct FixedList {
    action: RankedAction,
}

impl FixedList {
    pub fn new(action: RankedAction) -> Self {
        Self { action }
    }
}

impl Policy for FixedList {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn select(&mut self, _context: Option<&FeatureMatrix>, _rng: &mut dyn RngCore) -> Result<RankedAction> {
        Ok(self.action.clone())
    }

    fn update(&mut self, _action: &RankedAction, _feedback: &Feedback) -> Result<()> {
        Ok(())
    }

    fn reset(&mut self) {}
}
