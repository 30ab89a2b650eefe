//! Two-arm linear-model sampler over group sufficient statistics.
//!
//! Model: `Y ~ N(intercept + effect * treated, sigma^2)` with a binary
//! treatment indicator. Arm counts, means and standard deviations are
//! sufficient, so the Gibbs cycle never reconstructs patient-level data.
//! The intercept keeps a fixed `N(0, 10^2)` prior; the effect prior is
//! pluggable (fixed normal for separate fits, unit-information or comparison
//! blocks for borrowing).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::prior::AmountPrior;
use crate::summaries::{RegressionStudies, TwoArmGroupStats};

use super::continuous::ContinuousUipBlock;
use super::{
    draw_inv_gamma, draw_normal, Chain, ChainConfig, LocationPrior, ThetaPrior, WeightMode,
};

/// Variance of the fixed intercept/effect prior in noninformative fits.
pub const VAGUE_COEF_VAR: f64 = 100.0;

/// Shape/rate of the residual-variance prior.
pub const SIGMA2_ZETA: f64 = 0.01;

/// Sufficient statistics of the two-arm model, precomputed once per chain.
#[derive(Debug, Clone, Copy)]
pub struct TwoArmData {
    n_treat: f64,
    mean_treat: f64,
    ss_treat: f64,
    n_control: f64,
    mean_control: f64,
    ss_control: f64,
}

impl TwoArmData {
    pub fn new(stats: &TwoArmGroupStats<f64>) -> Self {
        Self {
            n_treat: stats.treatment.n() as f64,
            mean_treat: stats.treatment.mean(),
            ss_treat: (stats.treatment.n() as f64 - 1.0) * stats.treatment.sample_variance(),
            n_control: stats.control.n() as f64,
            mean_control: stats.control.mean(),
            ss_control: (stats.control.n() as f64 - 1.0) * stats.control.sample_variance(),
        }
    }

    fn n(&self) -> f64 {
        self.n_treat + self.n_control
    }

    fn sse(&self, intercept: f64, effect: f64) -> f64 {
        let dc = self.mean_control - intercept;
        let dt = self.mean_treat - intercept - effect;
        self.ss_control + self.n_control * dc * dc + self.ss_treat + self.n_treat * dt * dt
    }
}

/// Gibbs engine for the two-arm model with a pluggable effect prior.
/// Records `beta0`, `beta1`, `sigma2`, then the block's hyper draws.
pub(crate) fn run_two_arm(
    data: &TwoArmData,
    effect_prior: &mut dyn LocationPrior,
    cfg: &ChainConfig,
) -> Result<Chain> {
    cfg.validate()?;
    let n = data.n();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut effect = data.mean_treat - data.mean_control;
    let mut sigma2 = (data.ss_treat + data.ss_control) / n;

    let mut names = vec!["beta0".to_string(), "beta1".to_string(), "sigma2".to_string()];
    names.extend(effect_prior.names());
    let keep = cfg.iterations - cfg.burn_in;
    let mut columns: Vec<Vec<f64>> = names.iter().map(|_| Vec::with_capacity(keep)).collect();
    let mut row = Vec::with_capacity(names.len());

    for iter in 0..cfg.iterations {
        if iter == cfg.burn_in {
            effect_prior.freeze();
        }

        // Intercept: all observations inform it once the effect is subtracted
        // from the treated arm.
        let data_mean =
            (data.n_control * data.mean_control + data.n_treat * (data.mean_treat - effect)) / n;
        let prior = ThetaPrior::Normal { mean: 0.0, var: VAGUE_COEF_VAR };
        let (m, v) = prior.posterior(data_mean, sigma2 / n);
        let intercept = draw_normal(&mut rng, m, v);

        // Effect: only the treated arm carries information.
        let (m, v) = effect_prior
            .current()
            .posterior(data.mean_treat - intercept, sigma2 / data.n_treat);
        effect = draw_normal(&mut rng, m, v);

        sigma2 = draw_inv_gamma(
            &mut rng,
            SIGMA2_ZETA + 0.5 * n,
            SIGMA2_ZETA + 0.5 * data.sse(intercept, effect),
        );

        effect_prior.update(effect, &mut rng);

        if iter >= cfg.burn_in {
            row.clear();
            row.push(intercept);
            row.push(effect);
            row.push(sigma2);
            effect_prior.record(&mut row);
            for (col, value) in columns.iter_mut().zip(&row) {
                col.push(*value);
            }
        }
    }

    Ok(Chain::new(names, columns, effect_prior.accepts(), *cfg))
}

/// Two-arm fit with a fixed normal prior on the effect (noninformative by
/// default).
pub fn sample_two_arm(
    stats: &TwoArmGroupStats<f64>,
    effect_prior_mean: f64,
    effect_prior_var: f64,
    cfg: &ChainConfig,
) -> Result<Chain> {
    let data = TwoArmData::new(stats);
    let mut block = super::FixedLocationPrior(ThetaPrior::Normal {
        mean: effect_prior_mean,
        var: effect_prior_var,
    });
    run_two_arm(&data, &mut block, cfg)
}

/// Unit-information-prior posterior for the treatment effect of a two-arm
/// study, borrowing from historical coefficient summaries.
pub fn sample_uip_regression(
    studies: &RegressionStudies<f64>,
    amount: &AmountPrior<f64>,
    wmode: &WeightMode,
    cfg: &ChainConfig,
) -> Result<Chain> {
    let evidence = studies.evidence();
    let mut block = ContinuousUipBlock::new(&evidence, amount, wmode, cfg)?;
    run_two_arm(&TwoArmData::new(&studies.current), &mut block, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summaries::ContinuousSummary;
    use approx::assert_abs_diff_eq;

    fn arm(n: u64, mean: f64, sd: f64) -> ContinuousSummary<f64> {
        ContinuousSummary::new(n, mean, sd).unwrap()
    }

    #[test]
    fn flat_fit_recovers_arm_difference() {
        // Binary covariate least squares: effect = treated mean - control
        // mean, intercept = control mean (vague priors barely shrink).
        let stats = TwoArmGroupStats::new(arm(136, 0.97, 11.26), arm(125, 0.86, 11.08));
        let cfg = ChainConfig { seed: 12, ..Default::default() };
        let chain = sample_two_arm(&stats, 0.0, VAGUE_COEF_VAR, &cfg).unwrap();
        let b1 = chain.summary("beta1", 0.95).unwrap();
        assert_abs_diff_eq!(b1.mean, 0.11, epsilon = 0.08);
        let b0 = chain.summary("beta0", 0.95).unwrap();
        assert_abs_diff_eq!(b0.mean, 0.86, epsilon = 0.1);
    }

    #[test]
    fn symmetric_arms_give_zero_effect() {
        let stats = TwoArmGroupStats::new(arm(100, 1.5, 2.0), arm(100, 1.5, 2.0));
        let cfg = ChainConfig { seed: 1, ..Default::default() };
        let chain = sample_two_arm(&stats, 0.0, VAGUE_COEF_VAR, &cfg).unwrap();
        let b1 = chain.summary("beta1", 0.95).unwrap();
        assert_abs_diff_eq!(b1.mean, 0.0, epsilon = 0.03);
    }

    #[test]
    fn zero_variance_prior_pins_the_effect() {
        let stats = TwoArmGroupStats::new(arm(50, 2.0, 1.0), arm(50, 0.0, 1.0));
        let cfg = ChainConfig {
            iterations: 4000,
            burn_in: 2000,
            seed: 2,
            ..Default::default()
        };
        let chain = sample_two_arm(&stats, -1.0, 1e-10, &cfg).unwrap();
        let b1 = chain.summary("beta1", 0.95).unwrap();
        assert_abs_diff_eq!(b1.mean, -1.0, epsilon = 1e-3);
        assert!(b1.sd < 1e-3);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let stats = TwoArmGroupStats::new(arm(60, 1.0, 3.0), arm(50, 0.5, 2.5));
        let cfg = ChainConfig {
            iterations: 4000,
            burn_in: 2000,
            seed: 21,
            ..Default::default()
        };
        let a = sample_two_arm(&stats, 0.0, VAGUE_COEF_VAR, &cfg).unwrap();
        let b = sample_two_arm(&stats, 0.0, VAGUE_COEF_VAR, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
