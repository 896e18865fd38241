//! Synthetic instances for the Bernoulli, linear and logistic experiments.
//!
//! Instances are immutable once built. Per-round randomness lives in
//! [`Environment`], which consumes the same number of draws every round no
//! matter which list is shown, so policies run against the same seed see the
//! same attraction realizations (common random numbers).

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::cascade::{
    draw_attractions, linear_step_regret, step_regret, Feedback, RankedAction,
};
use crate::error::{invalid, Error, Result};
use crate::features::FeatureMatrix;
use crate::glm::sigmoid;
use crate::linalg::norm;

/// Largest admissible misspecification shift (keeps `10 − c > 0` with margin).
pub const MAX_SHIFT: u32 = 8;

/// Attraction probabilities are clamped to this range before deriving a
/// matched Beta prior, which would otherwise degenerate at 0 or 1.
pub const PRIOR_MEAN_CLAMP: (f64, f64) = (0.01, 0.99);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum InstanceKind {
    Bernoulli,
    Linear,
    Logistic,
}

/// How examined positions produce feedback.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", rename_all = "lowercase"))]
pub enum FeedbackMode {
    /// Bernoulli attraction draws; the first attracted item is clicked.
    #[default]
    Bernoulli,
    /// Scalar `y = xᵀθ* + N(0, noise_var)`; the user stops at the first
    /// value above `threshold`. Only meaningful for the linear kind.
    Gaussian { noise_var: f64, threshold: f64 },
}

/// Per-item Beta prior `Beta(α + c, β − c)` with misspecification shift `c`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PriorSpec {
    alphas: Vec<f64>,
    betas: Vec<f64>,
    shift: u32,
}

impl PriorSpec {
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>, shift: u32) -> Result<Self> {
        let spec = Self { alphas, betas, shift };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.len() != self.betas.len() {
            return Err(Error::DimensionMismatch {
                expected: self.alphas.len(),
                got: self.betas.len(),
            });
        }
        let c = self.shift as f64;
        for (&a, &b) in self.alphas.iter().zip(&self.betas) {
            if !(a + c > 0.0 && b - c > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(invalid("shifted Beta parameters must be positive"));
            }
        }
        Ok(())
    }

    pub fn num_items(&self) -> usize {
        self.alphas.len()
    }

    pub fn shift(&self) -> u32 {
        self.shift
    }

    /// Unshifted parameters.
    pub fn base_alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn base_betas(&self) -> &[f64] {
        &self.betas
    }

    /// `α + c` per item.
    pub fn alphas(&self) -> Vec<f64> {
        self.alphas.iter().map(|a| a + self.shift as f64).collect()
    }

    /// `β − c` per item.
    pub fn betas(&self) -> Vec<f64> {
        self.betas.iter().map(|b| b - self.shift as f64).collect()
    }

    pub fn mean(&self, item: usize) -> f64 {
        let c = self.shift as f64;
        (self.alphas[item] + c) / (self.alphas[item] + self.betas[item])
    }

    pub fn with_shift(&self, shift: u32) -> Result<Self> {
        Self::new(self.alphas.clone(), self.betas.clone(), shift)
    }

    /// `Beta(10p/(1−p), 10)` per item, so the prior mean equals `p` after
    /// clamping `p` to [`PRIOR_MEAN_CLAMP`].
    pub fn matched_to_means(means: &[f64]) -> Result<Self> {
        let (lo, hi) = PRIOR_MEAN_CLAMP;
        let mut alphas = Vec::with_capacity(means.len());
        for &m in means {
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::InvalidProbability(m));
            }
            let p = m.clamp(lo, hi);
            alphas.push(10.0 * p / (1.0 - p));
        }
        Self::new(alphas, vec![10.0; means.len()], 0)
    }
}

/// The prior fed to prior-informed algorithms in the misspecification sweep:
/// `Beta(1 + c, 10 − c)` for every item (`c = 0` is the true prior).
pub fn misspecified_prior(shift: u32, num_items: usize) -> Result<PriorSpec> {
    if shift > MAX_SHIFT {
        return Err(Error::ShiftOutOfRange(shift));
    }
    PriorSpec::new(vec![1.0; num_items], vec![10.0; num_items], shift)
}

/// One bandit problem: item attraction means and, for contextual kinds, the
/// features and the true parameter.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BanditInstance {
    kind: InstanceKind,
    #[cfg_attr(feature = "serde", serde(rename = "L"))]
    num_items: usize,
    #[cfg_attr(feature = "serde", serde(rename = "K"))]
    list_len: usize,
    d: usize,
    #[cfg_attr(feature = "serde", serde(rename = "means"))]
    attraction_means: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(rename = "theta", default))]
    theta_star: Option<Vec<f64>>,
    #[cfg_attr(feature = "serde", serde(default))]
    features: Option<FeatureMatrix>,
    #[cfg_attr(feature = "serde", serde(default))]
    redraw_features: bool,
    #[cfg_attr(feature = "serde", serde(default))]
    feedback: FeedbackMode,
    #[cfg_attr(feature = "serde", serde(default))]
    prior: Option<PriorSpec>,
}

impl BanditInstance {
    /// Non-contextual instance with the given attraction means.
    pub fn bernoulli(means: Vec<f64>, list_len: usize, prior: Option<PriorSpec>) -> Result<Self> {
        let inst = Self {
            kind: InstanceKind::Bernoulli,
            num_items: means.len(),
            list_len,
            d: 0,
            attraction_means: means,
            theta_star: None,
            features: None,
            redraw_features: false,
            feedback: FeedbackMode::Bernoulli,
            prior,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Contextual instance with explicit means, for example derived from
    /// relevance labels rather than a known parameter.
    pub fn contextual(
        kind: InstanceKind,
        features: FeatureMatrix,
        means: Vec<f64>,
        theta_star: Option<Vec<f64>>,
        list_len: usize,
        prior: Option<PriorSpec>,
    ) -> Result<Self> {
        let inst = Self {
            kind,
            num_items: features.num_items(),
            list_len,
            d: features.dim(),
            attraction_means: means,
            theta_star,
            features: Some(features),
            redraw_features: false,
            feedback: FeedbackMode::Bernoulli,
            prior,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Contextual instance whose means follow from `θ*` through the kind's
    /// model: `clip(xᵀθ*, 0, 1)` (linear) or `sigmoid(xᵀθ*)` (logistic).
    pub fn from_parameter(
        kind: InstanceKind,
        features: FeatureMatrix,
        theta_star: Vec<f64>,
        list_len: usize,
        prior: Option<PriorSpec>,
    ) -> Result<Self> {
        if theta_star.len() != features.dim() {
            return Err(Error::DimensionMismatch {
                expected: features.dim(),
                got: theta_star.len(),
            });
        }
        let means = model_means(kind, &features, &theta_star)?;
        Self::contextual(kind, features, means, Some(theta_star), list_len, prior)
    }

    pub fn validate(&self) -> Result<()> {
        if self.list_len == 0 {
            return Err(invalid("list length must be positive"));
        }
        if self.list_len > self.num_items {
            return Err(Error::ListTooLong {
                list_len: self.list_len,
                num_items: self.num_items,
            });
        }
        if self.attraction_means.len() != self.num_items {
            return Err(Error::DimensionMismatch {
                expected: self.num_items,
                got: self.attraction_means.len(),
            });
        }
        if let Some(&m) = self.attraction_means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(Error::InvalidProbability(m));
        }
        match (&self.kind, &self.features) {
            (InstanceKind::Bernoulli, Some(_)) => {
                return Err(invalid("bernoulli instances carry no features"))
            }
            (InstanceKind::Bernoulli, None) => {
                if self.d != 0 || self.theta_star.is_some() || self.redraw_features {
                    return Err(invalid("bernoulli instances have d = 0 and no parameter"));
                }
            }
            (_, None) => return Err(Error::MissingContext),
            (_, Some(f)) => {
                if f.num_items() != self.num_items || f.dim() != self.d {
                    return Err(Error::DimensionMismatch {
                        expected: self.d,
                        got: f.dim(),
                    });
                }
                f.check_unit_ball()?;
            }
        }
        if let Some(theta) = &self.theta_star {
            if theta.len() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    got: theta.len(),
                });
            }
            if theta.iter().any(|v| !v.is_finite()) {
                return Err(invalid("theta_star must be finite"));
            }
        }
        if self.redraw_features && self.theta_star.is_none() {
            return Err(invalid("per-round redraw needs theta_star"));
        }
        if let FeedbackMode::Gaussian { noise_var, threshold } = self.feedback {
            if self.kind != InstanceKind::Linear || self.theta_star.is_none() {
                return Err(invalid("gaussian feedback needs a linear instance with theta_star"));
            }
            if !(noise_var >= 0.0 && noise_var.is_finite() && threshold.is_finite()) {
                return Err(invalid("gaussian feedback needs finite noise_var >= 0 and threshold"));
            }
        }
        if let Some(prior) = &self.prior {
            prior.validate()?;
            if prior.num_items() != self.num_items {
                return Err(Error::DimensionMismatch {
                    expected: self.num_items,
                    got: prior.num_items(),
                });
            }
        }
        Ok(())
    }

    /// Turns on per-round feature redraws (uniform on `[0,1]^d`, normalized).
    pub fn with_redraw(mut self, redraw: bool) -> Result<Self> {
        self.redraw_features = redraw;
        self.validate()?;
        Ok(self)
    }

    pub fn with_feedback(mut self, mode: FeedbackMode) -> Result<Self> {
        self.feedback = mode;
        self.validate()?;
        Ok(self)
    }

    pub fn with_prior(mut self, prior: Option<PriorSpec>) -> Result<Self> {
        self.prior = prior;
        self.validate()?;
        Ok(self)
    }

    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn list_len(&self) -> usize {
        self.list_len
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn attraction_means(&self) -> &[f64] {
        &self.attraction_means
    }

    pub fn theta_star(&self) -> Option<&[f64]> {
        self.theta_star.as_deref()
    }

    pub fn features(&self) -> Option<&FeatureMatrix> {
        self.features.as_ref()
    }

    pub fn redraw_features(&self) -> bool {
        self.redraw_features
    }

    pub fn feedback_mode(&self) -> FeedbackMode {
        self.feedback
    }

    pub fn prior(&self) -> Option<&PriorSpec> {
        self.prior.as_ref()
    }

    pub fn is_contextual(&self) -> bool {
        self.kind != InstanceKind::Bernoulli
    }
}

fn model_means(kind: InstanceKind, features: &FeatureMatrix, theta: &[f64]) -> Result<Vec<f64>> {
    let scores = features.scores(theta);
    Ok(match kind {
        InstanceKind::Linear => scores.iter().map(|s| s.clamp(0.0, 1.0)).collect(),
        InstanceKind::Logistic => scores.iter().map(|&s| sigmoid(s)).collect(),
        InstanceKind::Bernoulli => return Err(invalid("bernoulli instances have no parameter")),
    })
}

/// Uniform draw on `[0,1]^d`, scaled to unit `ℓ₂` norm.
fn unit_nonnegative_vector(dim: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let n = norm(&v);
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
            return v;
        }
    }
}

fn unit_features(num_items: usize, dim: usize, rng: &mut dyn RngCore) -> Result<FeatureMatrix> {
    let mut data = Vec::with_capacity(num_items * dim);
    for _ in 0..num_items {
        data.extend(unit_nonnegative_vector(dim, rng));
    }
    FeatureMatrix::new(num_items, dim, data)
}

/// Per-item prior with `β₁` uniform on `{1, …, 10}` and `β₂ = 10`.
pub fn sample_beta_prior(num_items: usize, rng: &mut dyn RngCore) -> Result<PriorSpec> {
    let alphas = (0..num_items).map(|_| rng.random_range(1..=10u32) as f64).collect();
    PriorSpec::new(alphas, vec![10.0; num_items], 0)
}

/// Draws `μ_i ~ Beta(α_i + c, β_i − c)` and records the prior on the instance.
pub fn sample_instance_from_prior(prior: &PriorSpec, list_len: usize, rng: &mut dyn RngCore) -> Result<BanditInstance> {
    let mut means = Vec::with_capacity(prior.num_items());
    for (a, b) in prior.alphas().into_iter().zip(prior.betas()) {
        let dist = Beta::new(a, b).map_err(|_| invalid("invalid Beta parameters"))?;
        means.push(dist.sample(rng));
    }
    BanditInstance::bernoulli(means, list_len, Some(prior.clone()))
}

/// `n_outer` random priors, each with `n_inner` instances drawn from it.
pub fn sample_beta_instances(
    num_items: usize,
    list_len: usize,
    n_outer: usize,
    n_inner: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<BanditInstance>> {
    let mut out = Vec::with_capacity(n_outer * n_inner);
    for _ in 0..n_outer {
        let prior = sample_beta_prior(num_items, rng)?;
        for _ in 0..n_inner {
            out.push(sample_instance_from_prior(&prior, list_len, rng)?);
        }
    }
    Ok(out)
}

/// `θ*` and fixed features uniform on `[0,1]^d` then normalized; means
/// `clip(xᵀθ*, 0, 1)`.
pub fn sample_linear_instance(num_items: usize, list_len: usize, dim: usize, rng: &mut dyn RngCore) -> Result<BanditInstance> {
    if dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    let theta = unit_nonnegative_vector(dim, rng);
    let features = unit_features(num_items, dim, rng)?;
    BanditInstance::from_parameter(InstanceKind::Linear, features, theta, list_len, None)
}

/// As [`sample_linear_instance`] with means `sigmoid(xᵀθ*)` and a matched
/// Beta prior for prior-informed baselines.
pub fn sample_logistic_instance(num_items: usize, list_len: usize, dim: usize, rng: &mut dyn RngCore) -> Result<BanditInstance> {
    if dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    let theta = unit_nonnegative_vector(dim, rng);
    let features = unit_features(num_items, dim, rng)?;
    let inst = BanditInstance::from_parameter(InstanceKind::Logistic, features, theta, list_len, None)?;
    let prior = PriorSpec::matched_to_means(inst.attraction_means())?;
    inst.with_prior(Some(prior))
}

/// The per-replication view of an instance: current features and means.
#[derive(Debug, Clone)]
pub struct Environment<'a> {
    instance: &'a BanditInstance,
    features: Option<FeatureMatrix>,
    means: Vec<f64>,
    /// `xᵀθ*` per item, used by the scalar-feedback mode.
    linear_scores: Vec<f64>,
}

impl<'a> Environment<'a> {
    pub fn new(instance: &'a BanditInstance) -> Self {
        let linear_scores = match (instance.features(), instance.theta_star()) {
            (Some(f), Some(theta)) => f.scores(theta),
            _ => Vec::new(),
        };
        Self {
            instance,
            features: instance.features().cloned(),
            means: instance.attraction_means().to_vec(),
            linear_scores,
        }
    }

    pub fn instance(&self) -> &BanditInstance {
        self.instance
    }

    /// Starts a round; redraws features first when the instance asks for it.
    pub fn begin_round(&mut self, rng: &mut dyn RngCore) -> Result<Option<&FeatureMatrix>> {
        if self.instance.redraw_features() {
            let inst = self.instance;
            let theta = inst.theta_star().ok_or(Error::MissingContext)?;
            let features = unit_features(inst.num_items(), inst.dim(), rng)?;
            self.means = model_means(inst.kind(), &features, theta)?;
            self.linear_scores = features.scores(theta);
            self.features = Some(features);
        }
        Ok(self.features.as_ref())
    }

    pub fn context(&self) -> Option<&FeatureMatrix> {
        self.features.as_ref()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Feedback for `action`; draws the same amount of randomness every round.
    pub fn step(&self, action: &RankedAction, rng: &mut dyn RngCore) -> Result<Feedback> {
        if action.len() != self.instance.list_len() {
            return Err(Error::DimensionMismatch {
                expected: self.instance.list_len(),
                got: action.len(),
            });
        }
        if let Some(&item) = action.items().iter().find(|&&i| i >= self.means.len()) {
            return Err(Error::ItemOutOfRange {
                item,
                num_items: self.means.len(),
            });
        }
        match self.instance.feedback_mode() {
            FeedbackMode::Bernoulli => {
                let attracted = draw_attractions(&self.means, rng);
                let shown: Vec<bool> = action.items().iter().map(|&i| attracted[i]).collect();
                Ok(Feedback::from_attractions(&shown))
            }
            FeedbackMode::Gaussian { noise_var, threshold } => {
                let sd = libm::sqrt(noise_var);
                let ys: Vec<f64> = self
                    .linear_scores
                    .iter()
                    .map(|&s| {
                        let z: f64 = StandardNormal.sample(rng);
                        s + sd * z
                    })
                    .collect();
                let shown: Vec<f64> = action.items().iter().map(|&i| ys[i]).collect();
                let click = shown
                    .iter()
                    .position(|&y| y > threshold)
                    .map_or(shown.len(), |p| p + 1);
                let mut values = shown;
                values[click..].iter_mut().for_each(|v| *v = 0.0);
                Feedback::new(values, click)
            }
        }
    }

    /// Regret of `action` under the current means: cascade regret for click
    /// feedback, additive regret over `xᵀθ*` for scalar feedback.
    pub fn step_regret(&self, action: &RankedAction) -> Result<f64> {
        match self.instance.feedback_mode() {
            FeedbackMode::Bernoulli => step_regret(&self.means, action),
            FeedbackMode::Gaussian { .. } => linear_step_regret(&self.linear_scores, action),
        }
    }
}

/// One interaction with a fixed-context instance.
pub fn env_step(instance: &BanditInstance, action: &RankedAction, rng: &mut dyn RngCore) -> Result<Feedback> {
    Environment::new(instance).step(action, rng)
}
