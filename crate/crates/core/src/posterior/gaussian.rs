use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};

/// Independent Gaussian–Gaussian conjugate posteriors, one per item.
///
/// Each item starts from `N(prior_mean, prior_var)` and observations are
/// modelled as `N(μᵢ, noise_var)`. Only the sufficient statistics (count and
/// sum of examined feedback) are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianItemPosterior {
    prior_mean: f64,
    prior_var: f64,
    noise_var: f64,
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl GaussianItemPosterior {
    pub fn new(num_items: usize, prior_mean: f64, prior_var: f64, noise_var: f64) -> Result<Self> {
        if !(prior_var > 0.0) || !(noise_var > 0.0) {
            return Err(invalid("Gaussian prior and noise variances must be positive"));
        }
        if !prior_mean.is_finite() {
            return Err(invalid("Gaussian prior mean must be finite"));
        }
        Ok(Self {
            prior_mean,
            prior_var,
            noise_var,
            counts: vec![0; num_items],
            sums: vec![0.0; num_items],
        })
    }

    pub fn num_items(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, item: usize) -> u64 {
        self.counts[item]
    }

    pub fn sum(&self, item: usize) -> f64 {
        self.sums[item]
    }

    /// Records one examined observation of `item`.
    pub fn observe(&mut self, item: usize, value: f64) {
        self.counts[item] += 1;
        self.sums[item] += value;
    }

    /// Sets the sufficient statistics directly (bulk updates, tests).
    pub fn set_stats(&mut self, item: usize, count: u64, sum: f64) {
        self.counts[item] = count;
        self.sums[item] = sum;
    }

    /// `σ̂² = (1/σ₀² + n/σ²)⁻¹`
    pub fn variance(&self, item: usize) -> f64 {
        1.0 / (1.0 / self.prior_var + self.counts[item] as f64 / self.noise_var)
    }

    /// `μ̂ = (s/σ² + μ₀/σ₀²) σ̂²`
    pub fn mean(&self, item: usize) -> f64 {
        (self.sums[item] / self.noise_var + self.prior_mean / self.prior_var) * self.variance(item)
    }

    pub fn sample(&self, item: usize, rng: &mut dyn RngCore) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.mean(item) + libm::sqrt(self.variance(item)) * z
    }

    pub fn reset(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.sums.iter_mut().for_each(|s| *s = 0.0);
    }
}
