use crate::error::{invalid, Result};

/// Which leading factor multiplies the square-root term of the radius.
///
/// `SigmaSq` evaluates the radius exactly as the linear-TS algorithm displays
/// it; `Sigma` is the sub-Gaussian-scale form common in the ellipsoid
/// confidence-set literature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RadiusPrefactor {
    #[default]
    SigmaSq,
    Sigma,
}

/// Parameters of the confidence-ellipsoid radius `β_t(δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadiusParams {
    pub sigma_sq: f64,
    pub lambda: f64,
    /// Bound `S` on the parameter norm.
    pub norm_bound: f64,
    pub dim: usize,
    pub delta: f64,
    pub prefactor: RadiusPrefactor,
}

impl RadiusParams {
    pub fn new(sigma_sq: f64, lambda: f64, norm_bound: f64, dim: usize, delta: f64) -> Result<Self> {
        let p = Self {
            sigma_sq,
            lambda,
            norm_bound,
            dim,
            delta,
            prefactor: RadiusPrefactor::SigmaSq,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_prefactor(mut self, prefactor: RadiusPrefactor) -> Self {
        self.prefactor = prefactor;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_sq > 0.0 && self.lambda > 0.0 && self.norm_bound > 0.0) {
            return Err(invalid("radius parameters sigma_sq, lambda and S must be positive"));
        }
        if self.dim == 0 {
            return Err(invalid("radius dimension must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("radius confidence delta must lie in (0, 1)"));
        }
        Ok(())
    }

    fn leading_factor(&self) -> f64 {
        match self.prefactor {
            RadiusPrefactor::SigmaSq => self.sigma_sq,
            RadiusPrefactor::Sigma => libm::sqrt(self.sigma_sq),
        }
    }
}

/// `β_t(δ) = σ² √(2 log((λ + t)^{d/2} λ^{−d/2} / δ)) + √λ S`
pub fn radius_beta_t(params: &RadiusParams, t: u64) -> f64 {
    let d = params.dim as f64;
    let log_det_ratio = 0.5 * d * libm::log1p(t as f64 / params.lambda);
    let inner = 2.0 * (log_det_ratio - libm::log(params.delta));
    params.leading_factor() * libm::sqrt(inner.max(0.0))
        + libm::sqrt(params.lambda) * params.norm_bound
}

/// Doubling-trick confidence schedule `δ_t = δ / 2^{max(1, ⌈log₂ t⌉)}`.
pub fn delta_schedule(delta: f64, t: u64) -> f64 {
    let ceil_log2 = if t <= 1 {
        0
    } else {
        64 - (t - 1).leading_zeros() as i32
    };
    libm::ldexp(delta, -ceil_log2.max(1))
}
