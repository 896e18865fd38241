use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::{check_feedback, check_list_len, rank_top, Policy};
use crate::cascade::{Feedback, RankedAction};
use crate::error::Result;
use crate::features::FeatureMatrix;

/// Bernoulli KL divergence `kl(p, q)` with the `0 ln 0 = 0` convention.
pub fn kl_bernoulli(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| {
        if a <= 0.0 {
            0.0
        } else if b <= 0.0 {
            f64::INFINITY
        } else {
            a * libm::log(a / b)
        }
    };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// Largest `q ∈ [μ̂, 1]` with `n kl(μ̂, q) ≤ ln t + 3 ln ln t`.
///
/// The right side is clamped at zero for `t < 3`, where `ln ln t` is negative
/// or undefined. Unobserved items get an infinite index.
pub fn kl_ucb_index(mean: f64, count: u64, t: u64) -> f64 {
    if count == 0 {
        return f64::INFINITY;
    }
    let mean = mean.clamp(0.0, 1.0);
    let log_t = libm::log(t.max(1) as f64);
    let rhs = if log_t > 1.0 {
        log_t + 3.0 * libm::log(log_t)
    } else {
        log_t
    };
    let budget = rhs.max(0.0) / count as f64;
    let (mut lo, mut hi) = (mean, 1.0);
    if kl_bernoulli(mean, hi) <= budget {
        return hi;
    }
    for _ in 0..100 {
        if hi - lo < 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if kl_bernoulli(mean, mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone)]
pub struct CascadeKlUcb {
    list_len: usize,
    counts: Vec<u64>,
    sums: Vec<f64>,
    round: u64,
}

impl CascadeKlUcb {
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

impl Policy for CascadeKlUcb {
    fn name(&self) -> &'static str {
        "cascade-klucb"
    }

    fn select(&mut self, _context: Option<&FeatureMatrix>, _rng: &mut dyn RngCore) -> Result<RankedAction> {
        self.round += 1;
        let index: Vec<f64> = (0..self.counts.len())
            .map(|i| kl_ucb_index(self.mean(i), self.counts[i], self.round))
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
