//! Unit-information prior construction.
//!
//! The prior mean is a weighted combination of historical point estimates and
//! the prior precision is `M` units of weighted per-observation information:
//! mean `sum_k w_k estimate_k`, variance `1 / (M sum_k w_k info_k)`. The
//! amount parameter `M` counts how many observations' worth of information the
//! prior carries in total; `M w_k` is the share borrowed from study `k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::float::Real;
use crate::summaries::{BinarySummary, CoefficientSummary, ContinuousSummary, NormalEvidence};

/// Weights on the open simplex: every entry in (0, 1), summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector<R>(Vec<R>);

impl<R: Real> WeightVector<R> {
    pub fn new(weights: Vec<R>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if weights.iter().any(|w| !(*w > R::zero() && *w < R::one())) && weights.len() > 1 {
            return Err(Error::InvalidWeights(format!(
                "every weight must lie in (0, 1): {:?}",
                weights.iter().map(|w| w.as_f64()).collect::<Vec<_>>()
            )));
        }
        if weights.len() == 1 && weights[0] <= R::zero() {
            return Err(Error::InvalidWeights("single weight must be positive".into()));
        }
        let sum: R = weights.iter().copied().sum();
        let k = R::lit(weights.len() as f64);
        let tol = R::lit(1e-12).max(R::epsilon() * R::lit(8.0) * k);
        if (sum - R::one()).abs() > tol {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {} instead of 1",
                sum.as_f64()
            )));
        }
        Ok(Self(weights))
    }

    /// Normalizes positive raw weights onto the simplex.
    pub fn from_unnormalized(raw: &[R]) -> Result<Self> {
        if raw.is_empty() || raw.iter().any(|w| !(*w > R::zero())) {
            return Err(Error::InvalidWeights(
                "raw weights must be positive and nonempty".into(),
            ));
        }
        let sum: R = raw.iter().copied().sum();
        Self::new(raw.iter().map(|&w| w / sum).collect())
    }

    /// Equal weights over `k` studies.
    pub fn uniform(k: usize) -> Self {
        let w = R::one() / R::lit(k as f64);
        Self(vec![w; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[R] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, R> {
        self.0.iter()
    }
}

/// Hyper-prior on the amount parameter `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AmountPrior<R> {
    /// `M` held at a known value.
    Fixed(R),
    /// `M ~ Uniform(0, upper)`; `upper` defaults to the combined historical
    /// sample size, or the current sample size when history dwarfs it.
    Uniform { upper: R },
}

impl<R: Real> AmountPrior<R> {
    pub fn fixed(m: R) -> Result<Self> {
        if !(m.is_finite() && m >= R::zero()) {
            return Err(Error::Config(format!("fixed amount must be >= 0, got {m}")));
        }
        Ok(Self::Fixed(m))
    }

    pub fn uniform(upper: R) -> Result<Self> {
        if !(upper.is_finite() && upper > R::zero()) {
            return Err(Error::Config(format!(
                "uniform amount needs upper > 0, got {upper}"
            )));
        }
        Ok(Self::Uniform { upper })
    }
}

/// Conditional prior for the parameter of interest given the hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConditionalPrior<R> {
    Normal { mean: R, var: R },
    Beta { alpha: R, beta: R },
}

impl<R: Real> ConditionalPrior<R> {
    /// Beta distribution with the requested mean and variance. Fails when no
    /// Beta distribution has that variance (`var >= mean (1 - mean)`).
    pub fn beta_from_moments(mean: R, var: R) -> Result<Self> {
        let bound = mean * (R::one() - mean);
        if !(mean > R::zero() && mean < R::one()) || !(var > R::zero()) || var >= bound {
            return Err(Error::InvalidPriorMoments {
                var: var.as_f64(),
                bound: bound.as_f64(),
            });
        }
        let scale = bound / var - R::one();
        Ok(Self::Beta {
            alpha: mean * scale,
            beta: (R::one() - mean) * scale,
        })
    }

    pub fn mean(&self) -> R {
        match *self {
            Self::Normal { mean, .. } => mean,
            Self::Beta { alpha, beta } => alpha / (alpha + beta),
        }
    }

    pub fn variance(&self) -> R {
        match *self {
            Self::Normal { var, .. } => var,
            Self::Beta { alpha, beta } => {
                let total = alpha + beta;
                alpha * beta / (total * total * (total + R::one()))
            }
        }
    }
}

/// Per-observation information of a continuous summary: `1 / mle_variance`.
pub fn unit_info_continuous<R: Real>(s: &ContinuousSummary<R>) -> R {
    R::one() / s.mle_variance()
}

/// Per-observation information of a binary summary: `1 / (p (1 - p))` at the
/// boundary-corrected rate.
pub fn unit_info_binary<R: Real>(b: &BinarySummary) -> R {
    let p: R = b.corrected_rate();
    R::one() / (p * (R::one() - p))
}

/// Per-observation information about a regression coefficient: `1 / (n se^2)`.
pub fn unit_info_coefficient<R: Real>(c: &CoefficientSummary<R>) -> R {
    NormalEvidence::from_coefficient(c).unit_info()
}

/// Normal conditional prior over continuous or coefficient history.
pub fn uip_normal<R: Real>(
    amount: R,
    weights: &WeightVector<R>,
    evidence: &[NormalEvidence<R>],
) -> Result<ConditionalPrior<R>> {
    if weights.len() != evidence.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} historical studies",
            weights.len(),
            evidence.len()
        )));
    }
    if !(amount > R::zero()) {
        return Err(Error::DegeneratePrior);
    }
    let mut mean = R::zero();
    let mut info = R::zero();
    for (&w, e) in weights.iter().zip(evidence) {
        mean += w * e.estimate;
        info += w * e.unit_info();
    }
    Ok(ConditionalPrior::Normal {
        mean,
        var: R::one() / (amount * info),
    })
}

/// Beta conditional prior over binary history, by moment matching the
/// unit-information mean and variance.
pub fn uip_beta<R: Real>(
    amount: R,
    weights: &WeightVector<R>,
    historical: &[BinarySummary],
) -> Result<ConditionalPrior<R>> {
    let rates: Vec<R> = historical.iter().map(|b| b.corrected_rate()).collect();
    uip_beta_from_rates(amount, weights, &rates)
}

/// Same as [`uip_beta`] with the boundary-corrected rates precomputed.
pub fn uip_beta_from_rates<R: Real>(
    amount: R,
    weights: &WeightVector<R>,
    rates: &[R],
) -> Result<ConditionalPrior<R>> {
    if weights.len() != rates.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} historical studies",
            weights.len(),
            rates.len()
        )));
    }
    if !(amount > R::zero()) {
        return Err(Error::DegeneratePrior);
    }
    let mut mean = R::zero();
    let mut info = R::zero();
    for (&w, &p) in weights.iter().zip(rates) {
        mean += w * p;
        info += w / (p * (R::one() - p));
    }
    ConditionalPrior::beta_from_moments(mean, R::one() / (amount * info))
}

/// Dirichlet hyper-prior shapes: `gamma_k = min(1, n_k / n_current)`. Larger
/// historical studies get more prior weight, capped so no single large study
/// dominates.
pub fn dirichlet_gammas<R: Real>(n_current: u64, n_historical: &[u64]) -> Vec<R> {
    n_historical
        .iter()
        .map(|&nk| R::one().min(R::lit(nk as f64) / R::lit(n_current as f64)))
        .collect()
}
