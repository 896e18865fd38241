use alloc::vec::Vec;

use rand::RngCore;
use rand_distr::{Beta, Distribution};

use crate::error::{invalid, Error, Result};

const QUANTILE_TOL: f64 = 1e-10;

/// Beta–Bernoulli posteriors, one per item.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaItemPosterior {
    prior_alpha: Vec<f64>,
    prior_beta: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl BetaItemPosterior {
    pub fn new(prior_alpha: Vec<f64>, prior_beta: Vec<f64>) -> Result<Self> {
        if prior_alpha.len() != prior_beta.len() {
            return Err(Error::DimensionMismatch {
                expected: prior_alpha.len(),
                got: prior_beta.len(),
            });
        }
        if prior_alpha
            .iter()
            .chain(&prior_beta)
            .any(|&v| !(v > 0.0) || !v.is_finite())
        {
            return Err(invalid("Beta prior parameters must be positive and finite"));
        }
        Ok(Self {
            alpha: prior_alpha.clone(),
            beta: prior_beta.clone(),
            prior_alpha,
            prior_beta,
        })
    }

    pub fn uniform(num_items: usize, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alloc::vec![alpha; num_items], alloc::vec![beta; num_items])
    }

    pub fn num_items(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self, item: usize) -> f64 {
        self.alpha[item]
    }

    pub fn beta(&self, item: usize) -> f64 {
        self.beta[item]
    }

    pub fn mean(&self, item: usize) -> f64 {
        self.alpha[item] / (self.alpha[item] + self.beta[item])
    }

    /// Click → `alpha += 1`, skip → `beta += 1`.
    pub fn observe(&mut self, item: usize, clicked: bool) {
        if clicked {
            self.alpha[item] += 1.0;
        } else {
            self.beta[item] += 1.0;
        }
    }

    pub fn sample(&self, item: usize, rng: &mut dyn RngCore) -> f64 {
        // parameters are validated positive, so construction cannot fail
        Beta::new(self.alpha[item], self.beta[item])
            .map(|d| d.sample(rng))
            .unwrap_or(0.5)
    }

    /// The `q`-quantile of `Beta(alpha, beta)`.
    pub fn quantile(&self, item: usize, q: f64) -> Result<f64> {
        beta_quantile(self.alpha[item], self.beta[item], q)
    }

    /// [`quantile`](Self::quantile) with a starting point for the solver.
    pub fn quantile_near(&self, item: usize, q: f64, guess: f64) -> Result<f64> {
        beta_quantile_near(self.alpha[item], self.beta[item], q, Some(guess))
    }

    pub fn reset(&mut self) {
        self.alpha.clone_from(&self.prior_alpha);
        self.beta.clone_from(&self.prior_beta);
    }
}

/// Inverts the regularized incomplete beta CDF.
///
/// Newton steps on `I_x(a, b) - q`, kept inside a shrinking bisection bracket
/// and falling back to bisection whenever a step leaves it. Stops once a step
/// is below 1e-13 or the bracket is narrower than 1e-10.
pub(crate) fn beta_quantile(a: f64, b: f64, q: f64) -> Result<f64> {
    beta_quantile_near(a, b, q, None)
}

/// As [`beta_quantile`], starting from `guess` (for example the previous
/// round's value).
pub(crate) fn beta_quantile_near(a: f64, b: f64, q: f64, guess: Option<f64>) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidQuantile(q));
    }
    let ln_beta = libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x = guess
        .filter(|g| *g > 0.0 && *g < 1.0)
        .unwrap_or(a / (a + b));
    for _ in 0..500 {
        let f = regularized_incomplete_beta(a, b, x) - q;
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= QUANTILE_TOL {
            return Ok(0.5 * (lo + hi));
        }
        let pdf = libm::exp((a - 1.0) * libm::log(x) + (b - 1.0) * libm::log1p(-x) - ln_beta);
        let mut next = x - f / pdf;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() < 1e-13 {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// `I_x(a, b)`, evaluated with the continued-fraction expansion.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * libm::log(x)
        + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 10_000;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let clamp = |v: f64| if v.abs() < TINY { TINY } else { v };
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}
