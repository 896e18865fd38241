use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::{check_feedback, check_list_len, rank_top, Policy};
use crate::cascade::{Feedback, RankedAction};
use crate::error::Result;
use crate::features::FeatureMatrix;

/// `μ̂ + sqrt(1.5 ln t / n)`, infinite for unobserved items.
pub fn ucb1_index(mean: f64, count: u64, t: u64) -> f64 {
    if count == 0 {
        return f64::INFINITY;
    }
    mean + libm::sqrt(1.5 * libm::log(t.max(1) as f64) / count as f64)
}

#[derive(Debug, Clone)]
pub struct CascadeUcb1 {
    list_len: usize,
    counts: Vec<u64>,
    sums: Vec<f64>,
    round: u64,
}

impl CascadeUcb1 {
    pub fn new(num_items: usize, list_len: usize) -> Result<Self> {
        check_list_len(list_len, num_items)?;
        Ok(Self {
            list_len,
            counts: vec![0; num_items],
            sums: vec![0.0; num_items],
            round: 0,
        })
    }

    pub fn count(&self, item: usize) -> u64 {
        self.counts[item]
    }

    pub fn mean(&self, item: usize) -> f64 {
        if self.counts[item] == 0 {
            0.0
        } else {
            self.sums[item] / self.counts[item] as f64
        }
    }
}

impl Policy for CascadeUcb1 {
    fn name(&self) -> &'static str {
        "cascade-ucb1"
    }

    fn select(&mut self, _context: Option<&FeatureMatrix>, _rng: &mut dyn RngCore) -> Result<RankedAction> {
        self.round += 1;
        let index: Vec<f64> = (0..self.counts.len())
            .map(|i| ucb1_index(self.mean(i), self.counts[i], self.round))
            .collect();
        rank_top(&index, self.list_len)
    }

    fn update(&mut self, action: &RankedAction, feedback: &Feedback) -> Result<()> {
        check_feedback(action, feedback, Some(self.counts.len()))?;
        for (pos, value) in feedback.observations() {
            let item = action.item_at(pos);
            self.counts[item] += 1;
            self.sums[item] += value;
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.sums.iter_mut().for_each(|s| *s = 0.0);
        self.round = 0;
    }
}
