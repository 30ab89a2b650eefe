//! Noninformative two-arm fits: the per-study building block of the
//! regression borrowing pipeline.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mcmc::{sample_two_arm, ChainConfig, PosteriorSummary, VAGUE_COEF_VAR};
use crate::summaries::TwoArmGroupStats;

/// Posterior summaries of one noninformative two-arm fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparateFit {
    pub intercept: PosteriorSummary,
    pub effect: PosteriorSummary,
}

/// Fits `Y ~ N(intercept + effect * treated, sigma^2)` with vague
/// `N(0, 10^2)` coefficient priors and `InvGamma(0.01, 0.01)` on the
/// residual variance.
pub fn fit_separate(
    stats: &TwoArmGroupStats<f64>,
    cfg: &ChainConfig,
    level: f64,
) -> Result<SeparateFit> {
    let chain = sample_two_arm(stats, 0.0, VAGUE_COEF_VAR, cfg)?;
    Ok(SeparateFit {
        intercept: chain.summary("beta0", level)?,
        effect: chain.summary("beta1", level)?,
    })
}
