//! Benchmark priors: modified power prior, local commensurate prior, the
//! exchangeable-hierarchy prior and its robust mixture, plus the
//! noninformative and full-borrowing baselines.
//!
//! Conditioning on their hyper-parameters, all of them are normal on the
//! location scale, with means that are convex combinations of the historical
//! estimates. The samplers reuse the Metropolis-within-Gibbs engines.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::float::Real;
use crate::mcmc::{self, BlockAccept, Chain, ChainConfig, VarianceModel};
use crate::prior::ConditionalPrior;
use crate::special::normal_ln_pdf;
use crate::summaries::{
    pool_binary, pool_continuous, BinaryStudies, BinarySummary, ContinuousStudies, NormalEvidence,
    RegressionStudies, StudySet,
};

/// Hyper-prior settings for the comparison methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareHyper {
    /// Beta(a, b) prior on each power parameter.
    pub mpp_beta: (f64, f64),
    /// Uniform range for each log commensurate parameter.
    pub lcp_log_tau_range: (f64, f64),
    /// Half-normal scale of the between-trial dispersion.
    pub map_tau_scale: f64,
    /// Mixture weight of the vague component in the robust variant.
    pub rmap_robust_weight: f64,
    /// Standard deviation of the vague component.
    pub rmap_vague_sd: f64,
    /// Shape/rate of the InvGamma residual-variance prior.
    pub invga_zeta: f64,
}

impl Default for CompareHyper {
    fn default() -> Self {
        Self {
            mpp_beta: (1.0, 1.0),
            lcp_log_tau_range: (-30.0, 30.0),
            map_tau_scale: 1.0,
            rmap_robust_weight: 0.1,
            rmap_vague_sd: 100.0,
            invga_zeta: 0.01,
        }
    }
}

impl CompareHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.mpp_beta.0 > 0.0 && self.mpp_beta.1 > 0.0) {
            return Err(Error::Config("power-prior Beta shapes must be positive".into()));
        }
        if self.lcp_log_tau_range.0 >= self.lcp_log_tau_range.1 {
            return Err(Error::Config("log-commensurate range must be increasing".into()));
        }
        if !(self.map_tau_scale > 0.0) {
            return Err(Error::Config("dispersion scale must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.rmap_robust_weight) {
            return Err(Error::Config("robust weight must be in [0, 1]".into()));
        }
        if !(self.rmap_vague_sd > 0.0) || !(self.invga_zeta > 0.0) {
            return Err(Error::Config("scale parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Comparison method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareMethod {
    Jeffreys,
    FullBorrow,
    Mpp,
    Lcp,
    Map,
    Rmap,
}

impl CompareMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Jeffreys => "jeffreys",
            Self::FullBorrow => "full-borrow",
            Self::Mpp => "mpp",
            Self::Lcp => "lcp",
            Self::Map => "map",
            Self::Rmap => "rmap",
        }
    }
}

/// Power-prior conditional: information `alpha_k n_k / sigma_hat_k^2` per
/// study, normal with the precision-weighted mean.
pub fn mpp_conditional<R: Real>(
    alphas: &[R],
    evidence: &[NormalEvidence<R>],
) -> Result<ConditionalPrior<R>> {
    assert_eq!(alphas.len(), evidence.len());
    let mut total = R::zero();
    let mut mean_acc = R::zero();
    for (&a, e) in alphas.iter().zip(evidence) {
        let c = a * R::lit(e.n as f64) / e.variance;
        total += c;
        mean_acc += c * e.estimate;
    }
    if !(total > R::zero()) {
        return Err(Error::AllZeroPower);
    }
    Ok(ConditionalPrior::Normal {
        mean: mean_acc / total,
        var: R::one() / total,
    })
}

/// Commensurate conditional: each study contributes
/// `n_k tau_k / (tau_k sigma_hat_k^2 + n_k)` precision.
pub fn lcp_conditional<R: Real>(
    taus: &[R],
    evidence: &[NormalEvidence<R>],
) -> ConditionalPrior<R> {
    assert_eq!(taus.len(), evidence.len());
    let mut total = R::zero();
    let mut mean_acc = R::zero();
    for (&t, e) in taus.iter().zip(evidence) {
        let n = R::lit(e.n as f64);
        let c = n * t / (t * e.variance + n);
        total += c;
        mean_acc += c * e.estimate;
    }
    ConditionalPrior::Normal {
        mean: mean_acc / total,
        var: R::one() / total,
    }
}

/// Exchangeable-hierarchy conditional given the between-trial dispersion:
/// study precision `n_k / (sigma_hat_k^2 + n_k tau)`, plus `tau^2` predictive
/// spread for the new trial.
pub fn map_conditional<R: Real>(tau: R, evidence: &[NormalEvidence<R>]) -> ConditionalPrior<R> {
    let mut total = R::zero();
    let mut mean_acc = R::zero();
    for e in evidence {
        let n = R::lit(e.n as f64);
        let c = n / (e.variance + n * tau);
        total += c;
        mean_acc += c * e.estimate;
    }
    ConditionalPrior::Normal {
        mean: mean_acc / total,
        var: R::one() / total + tau * tau,
    }
}

/// Precision-weighted pooled historical mean (the full-borrowing location).
pub fn pooled_mean<R: Real>(evidence: &[NormalEvidence<R>]) -> R {
    let mut total = R::zero();
    let mut acc = R::zero();
    for e in evidence {
        let c = R::lit(e.n as f64) / e.variance;
        total += c;
        acc += c * e.estimate;
    }
    acc / total
}

/// Draws one component of the robust two-component mixture: the vague
/// component with probability `robust_weight`, otherwise the hierarchy
/// conditional at `tau_draw`. The sampler itself uses the latent-indicator
/// full conditional; this is the prior-predictive view of the same mixture.
pub fn rmap_mixture_draw(
    tau_draw: f64,
    evidence: &[NormalEvidence<f64>],
    robust_weight: f64,
    vague_var: f64,
    rng: &mut ChaCha8Rng,
) -> ConditionalPrior<f64> {
    if rng.random::<f64>() < robust_weight {
        ConditionalPrior::Normal { mean: pooled_mean(evidence), var: vague_var }
    } else {
        map_conditional(tau_draw, evidence)
    }
}

fn theta_prior(p: &ConditionalPrior<f64>) -> mcmc::ThetaPrior {
    match *p {
        ConditionalPrior::Normal { mean, var } => mcmc::ThetaPrior::Normal { mean, var },
        ConditionalPrior::Beta { .. } => unreachable!("normal-scale comparison prior"),
    }
}

/// Power-parameter block: one reflected random walk per study on [0, 1].
struct MppBlock {
    evidence: Vec<NormalEvidence<f64>>,
    alphas: Vec<f64>,
    walks: Vec<mcmc::WalkState>,
    prior: (f64, f64),
}

impl MppBlock {
    fn new(evidence: &[NormalEvidence<f64>], hyper: &CompareHyper, cfg: &ChainConfig) -> Self {
        Self {
            evidence: evidence.to_vec(),
            alphas: vec![0.5; evidence.len()],
            walks: (0..evidence.len())
                .map(|_| {
                    mcmc::WalkState::new("alpha", 0.2, cfg.target_accept, cfg.adapt_window)
                        .with_max_scale(1.0)
                })
                .collect(),
            prior: hyper.mpp_beta,
        }
    }

}

impl mcmc::LocationPrior for MppBlock {
    fn current(&self) -> mcmc::ThetaPrior {
        match mpp_conditional(&self.alphas, &self.evidence) {
            Ok(p) => theta_prior(&p),
            Err(_) => mcmc::ThetaPrior::Flat,
        }
    }

    fn update(&mut self, theta: f64, rng: &mut ChaCha8Rng) {
        for k in 0..self.alphas.len() {
            let mut alphas = self.alphas.clone();
            let evidence = &self.evidence;
            let (pa, pb) = self.prior;
            let walk = &mut self.walks[k];
            let current = alphas[k];
            let new = mcmc::scalar_metropolis(rng, walk, current, 0.0, 1.0, |x| {
                alphas_with(&mut alphas, k, x);
                let density = match mpp_conditional(&alphas, evidence) {
                    Ok(ConditionalPrior::Normal { mean, var }) => normal_ln_pdf(theta, mean, var),
                    _ => f64::NEG_INFINITY,
                };
                let prior = if pa == 1.0 && pb == 1.0 {
                    0.0
                } else {
                    crate::special::beta_ln_pdf(x.clamp(1e-12, 1.0 - 1e-12), pa, pb)
                };
                density + prior
            });
            self.alphas[k] = new;
        }
    }

    fn names(&self) -> Vec<String> {
        (1..=self.alphas.len()).map(|k| format!("alpha{k}")).collect()
    }

    fn record(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.alphas);
    }

    fn freeze(&mut self) {
        for w in &mut self.walks {
            w.freeze();
        }
    }

    fn accepts(&self) -> Vec<BlockAccept> {
        self.walks.iter().map(|w| w.accept_stat()).collect()
    }
}

fn alphas_with(alphas: &mut [f64], k: usize, value: f64) {
    alphas[k] = value;
}

/// Log-commensurate block: one reflected random walk per study on the
/// configured uniform range.
struct LcpBlock {
    evidence: Vec<NormalEvidence<f64>>,
    log_taus: Vec<f64>,
    walks: Vec<mcmc::WalkState>,
    range: (f64, f64),
}

impl LcpBlock {
    fn new(evidence: &[NormalEvidence<f64>], hyper: &CompareHyper, cfg: &ChainConfig) -> Self {
        let mid = 0.5 * (hyper.lcp_log_tau_range.0 + hyper.lcp_log_tau_range.1);
        let span = hyper.lcp_log_tau_range.1 - hyper.lcp_log_tau_range.0;
        Self {
            evidence: evidence.to_vec(),
            log_taus: vec![mid; evidence.len()],
            walks: (0..evidence.len())
                .map(|_| {
                    mcmc::WalkState::new("log_tau", 2.0, cfg.target_accept, cfg.adapt_window)
                        .with_max_scale(span)
                })
                .collect(),
            range: hyper.lcp_log_tau_range,
        }
    }

    fn taus(log_taus: &[f64]) -> Vec<f64> {
        log_taus.iter().map(|lt| lt.exp()).collect()
    }
}

impl mcmc::LocationPrior for LcpBlock {
    fn current(&self) -> mcmc::ThetaPrior {
        theta_prior(&lcp_conditional(&Self::taus(&self.log_taus), &self.evidence))
    }

    fn update(&mut self, theta: f64, rng: &mut ChaCha8Rng) {
        for k in 0..self.log_taus.len() {
            let mut log_taus = self.log_taus.clone();
            let evidence = &self.evidence;
            let walk = &mut self.walks[k];
            let (lo, hi) = self.range;
            let current = log_taus[k];
            let new = mcmc::scalar_metropolis(rng, walk, current, lo, hi, |x| {
                log_taus[k] = x;
                let p = lcp_conditional(&Self::taus(&log_taus), evidence);
                match p {
                    ConditionalPrior::Normal { mean, var } => normal_ln_pdf(theta, mean, var),
                    ConditionalPrior::Beta { .. } => unreachable!(),
                }
            });
            self.log_taus[k] = new;
        }
    }

    fn names(&self) -> Vec<String> {
        (1..=self.log_taus.len())
            .map(|k| format!("log_tau{k}"))
            .collect()
    }

    fn record(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.log_taus);
    }

    fn freeze(&mut self) {
        for w in &mut self.walks {
            w.freeze();
        }
    }

    fn accepts(&self) -> Vec<BlockAccept> {
        self.walks.iter().map(|w| w.accept_stat()).collect()
    }
}

/// Between-trial dispersion block with an optional robust mixture indicator.
struct HierarchyBlock {
    evidence: Vec<NormalEvidence<f64>>,
    tau: f64,
    walk: mcmc::WalkState,
    hn_scale: f64,
    /// `Some` for the robust variant: (mixture weight, vague variance,
    /// currently-vague indicator).
    robust: Option<(f64, f64, bool)>,
}

impl HierarchyBlock {
    fn new(
        evidence: &[NormalEvidence<f64>],
        hyper: &CompareHyper,
        robust: bool,
        cfg: &ChainConfig,
    ) -> Self {
        Self {
            evidence: evidence.to_vec(),
            tau: hyper.map_tau_scale * 0.5,
            walk: mcmc::WalkState::new("tau", 0.3 * hyper.map_tau_scale, cfg.target_accept, cfg.adapt_window)
                .with_max_scale(20.0 * hyper.map_tau_scale),
            hn_scale: hyper.map_tau_scale,
            robust: robust.then_some((
                hyper.rmap_robust_weight,
                hyper.rmap_vague_sd * hyper.rmap_vague_sd,
                false,
            )),
        }
    }

}

impl mcmc::LocationPrior for HierarchyBlock {
    fn current(&self) -> mcmc::ThetaPrior {
        if let Some((_, vague_var, true)) = self.robust {
            return mcmc::ThetaPrior::Normal {
                mean: pooled_mean(&self.evidence),
                var: vague_var,
            };
        }
        theta_prior(&map_conditional(self.tau, &self.evidence))
    }

    fn update(&mut self, theta: f64, rng: &mut ChaCha8Rng) {
        // Mixture indicator by its full conditional.
        if let Some((weight, vague_var, indicator)) = &mut self.robust {
            let vague = normal_ln_pdf(theta, pooled_mean(&self.evidence), *vague_var)
                + weight.max(1e-300).ln();
            let informative = match map_conditional(self.tau, &self.evidence) {
                ConditionalPrior::Normal { mean, var } => {
                    normal_ln_pdf(theta, mean, var) + (1.0 - *weight).max(1e-300).ln()
                }
                ConditionalPrior::Beta { .. } => unreachable!(),
            };
            let p_vague = 1.0 / (1.0 + (informative - vague).exp());
            *indicator = rng.random::<f64>() < p_vague;
        }

        let theta_informs_tau = !matches!(self.robust, Some((_, _, true)));
        if theta_informs_tau {
            let evidence = &self.evidence;
            let hn_scale = self.hn_scale;
            self.tau = mcmc::scalar_metropolis(
                rng,
                &mut self.walk,
                self.tau,
                0.0,
                f64::INFINITY,
                |t| {
                    let p = map_conditional(t, evidence);
                    let density = match p {
                        ConditionalPrior::Normal { mean, var } => normal_ln_pdf(theta, mean, var),
                        ConditionalPrior::Beta { .. } => unreachable!(),
                    };
                    density - 0.5 * t * t / (hn_scale * hn_scale)
                },
            );
        } else {
            // The location sits in the vague component, so the dispersion's
            // full conditional is just its half-normal prior.
            self.tau = (self.hn_scale * mcmc::draw_standard_normal(rng)).abs();
        }
    }

    fn names(&self) -> Vec<String> {
        if self.robust.is_some() {
            vec!["tau".to_string(), "vague".to_string()]
        } else {
            vec!["tau".to_string()]
        }
    }

    fn record(&self, out: &mut Vec<f64>) {
        out.push(self.tau);
        if let Some((_, _, indicator)) = self.robust {
            out.push(f64::from(u8::from(indicator)));
        }
    }

    fn freeze(&mut self) {
        self.walk.freeze();
    }

    fn accepts(&self) -> Vec<BlockAccept> {
        vec![self.walk.accept_stat()]
    }
}

/// Binary power-prior block (conjugate Beta form under a flat initial prior).
struct MppBinaryBlock {
    counts: Vec<(f64, f64)>,
    alphas: Vec<f64>,
    walks: Vec<mcmc::WalkState>,
    prior: (f64, f64),
}

impl MppBinaryBlock {
    fn new(historical: &[BinarySummary], hyper: &CompareHyper, cfg: &ChainConfig) -> Self {
        Self {
            counts: historical
                .iter()
                .map(|b| {
                    (
                        b.successes() as f64,
                        (b.n() - b.successes()) as f64,
                    )
                })
                .collect(),
            alphas: vec![0.5; historical.len()],
            walks: (0..historical.len())
                .map(|_| {
                    mcmc::WalkState::new("alpha", 0.2, cfg.target_accept, cfg.adapt_window)
                        .with_max_scale(1.0)
                })
                .collect(),
            prior: hyper.mpp_beta,
        }
    }

    fn shapes(counts: &[(f64, f64)], alphas: &[f64]) -> (f64, f64) {
        let mut a = 1.0;
        let mut b = 1.0;
        for ((y, f), alpha) in counts.iter().zip(alphas) {
            a += alpha * y;
            b += alpha * f;
        }
        (a, b)
    }
}

impl mcmc::BetaPriorBlock for MppBinaryBlock {
    fn current(&self) -> (f64, f64) {
        Self::shapes(&self.counts, &self.alphas)
    }

    fn update(&mut self, theta: f64, rng: &mut ChaCha8Rng) {
        for k in 0..self.alphas.len() {
            let mut alphas = self.alphas.clone();
            let counts = &self.counts;
            let (pa, pb) = self.prior;
            let walk = &mut self.walks[k];
            let current = alphas[k];
            self.alphas[k] = mcmc::scalar_metropolis(rng, walk, current, 0.0, 1.0, |x| {
                alphas[k] = x;
                let (a, b) = Self::shapes(counts, &alphas);
                let prior = if pa == 1.0 && pb == 1.0 {
                    0.0
                } else {
                    crate::special::beta_ln_pdf(x.clamp(1e-12, 1.0 - 1e-12), pa, pb)
                };
                crate::special::beta_ln_pdf(theta, a, b) + prior
            });
        }
    }

    fn names(&self) -> Vec<String> {
        (1..=self.alphas.len()).map(|k| format!("alpha{k}")).collect()
    }

    fn record(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.alphas);
    }

    fn freeze(&mut self) {
        for w in &mut self.walks {
            w.freeze();
        }
    }

    fn accepts(&self) -> Vec<BlockAccept> {
        self.walks.iter().map(|w| w.accept_stat()).collect()
    }
}

/// Comparison-prior posterior for any endpoint kind.
pub fn sample_compare(
    studies: &StudySet<f64>,
    method: CompareMethod,
    hyper: &CompareHyper,
    cfg: &ChainConfig,
) -> Result<Chain> {
    hyper.validate()?;
    match studies {
        StudySet::Continuous(s) => sample_compare_continuous(s, method, hyper, cfg),
        StudySet::Binary(s) => sample_compare_binary(s, method, hyper, cfg),
        StudySet::Regression(s) => sample_compare_regression(s, method, hyper, cfg),
    }
}

/// Comparison-prior posterior on a continuous endpoint.
pub fn sample_compare_continuous(
    studies: &ContinuousStudies<f64>,
    method: CompareMethod,
    hyper: &CompareHyper,
    cfg: &ChainConfig,
) -> Result<Chain> {
    let variance = VarianceModel::InvGamma { zeta: hyper.invga_zeta };
    let evidence = studies.evidence();
    match method {
        CompareMethod::Jeffreys => {
            let mut block = mcmc::FixedLocationPrior(mcmc::ThetaPrior::Flat);
            mcmc::run_location_normal(&studies.current, variance, &mut block, cfg)
        }
        CompareMethod::FullBorrow => {
            let mut all = vec![studies.current];
            all.extend_from_slice(&studies.historical);
            let pooled = pool_continuous(&all)?;
            let mut block = mcmc::FixedLocationPrior(mcmc::ThetaPrior::Flat);
            mcmc::run_location_normal(&pooled, variance, &mut block, cfg)
        }
        CompareMethod::Mpp => {
            let mut block = MppBlock::new(&evidence, hyper, cfg);
            mcmc::run_location_normal(&studies.current, variance, &mut block, cfg)
        }
        CompareMethod::Lcp => {
            let mut block = LcpBlock::new(&evidence, hyper, cfg);
            mcmc::run_location_normal(&studies.current, variance, &mut block, cfg)
        }
        CompareMethod::Map => {
            let mut block = HierarchyBlock::new(&evidence, hyper, false, cfg);
            mcmc::run_location_normal(&studies.current, variance, &mut block, cfg)
        }
        CompareMethod::Rmap => {
            let mut block = HierarchyBlock::new(&evidence, hyper, true, cfg);
            mcmc::run_location_normal(&studies.current, variance, &mut block, cfg)
        }
    }
}

/// Comparison-prior posterior on a binary endpoint. Only the power prior has
/// a tractable binary form here; the commensurate and hierarchy variants are
/// unsupported.
pub fn sample_compare_binary(
    studies: &BinaryStudies,
    method: CompareMethod,
    hyper: &CompareHyper,
    cfg: &ChainConfig,
) -> Result<Chain> {
    match method {
        CompareMethod::Jeffreys => {
            let mut block = mcmc::FixedBetaPrior(0.5, 0.5);
            mcmc::run_location_binary(&studies.current, &mut block, cfg)
        }
        CompareMethod::FullBorrow => {
            let mut all = vec![studies.current];
            all.extend_from_slice(&studies.historical);
            let pooled = pool_binary(&all)?;
            let mut block = mcmc::FixedBetaPrior(0.5, 0.5);
            mcmc::run_location_binary(&pooled, &mut block, cfg)
        }
        CompareMethod::Mpp => {
            let mut block = MppBinaryBlock::new(&studies.historical, hyper, cfg);
            mcmc::run_location_binary(&studies.current, &mut block, cfg)
        }
        other => Err(Error::UnsupportedEndpoint {
            method: other.name().to_string(),
            endpoint: "binary".to_string(),
        }),
    }
}

/// Comparison-prior posterior for the treatment effect of a two-arm study.
pub fn sample_compare_regression(
    studies: &RegressionStudies<f64>,
    method: CompareMethod,
    hyper: &CompareHyper,
    cfg: &ChainConfig,
) -> Result<Chain> {
    let data = mcmc::TwoArmData::new(&studies.current);
    let evidence = studies.evidence();
    match method {
        CompareMethod::Jeffreys => {
            let mut block = mcmc::FixedLocationPrior(mcmc::ThetaPrior::Normal {
                mean: 0.0,
                var: mcmc::VAGUE_COEF_VAR,
            });
            mcmc::run_two_arm(&data, &mut block, cfg)
        }
        CompareMethod::Mpp => {
            let mut block = MppBlock::new(&evidence, hyper, cfg);
            mcmc::run_two_arm(&data, &mut block, cfg)
        }
        CompareMethod::Lcp => {
            let mut block = LcpBlock::new(&evidence, hyper, cfg);
            mcmc::run_two_arm(&data, &mut block, cfg)
        }
        CompareMethod::Map => {
            let mut block = HierarchyBlock::new(&evidence, hyper, false, cfg);
            mcmc::run_two_arm(&data, &mut block, cfg)
        }
        CompareMethod::Rmap => {
            let mut block = HierarchyBlock::new(&evidence, hyper, true, cfg);
            mcmc::run_two_arm(&data, &mut block, cfg)
        }
        CompareMethod::FullBorrow => Err(Error::UnsupportedEndpoint {
            method: "full-borrow".to_string(),
            endpoint: "regression".to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summaries::ContinuousSummary;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ev(estimate: f64, n: u64, variance: f64) -> NormalEvidence<f64> {
        NormalEvidence::new(estimate, n, variance).unwrap()
    }

    #[test]
    fn mpp_examples() {
        // Full borrowing limit: precision-weighted pooled mean.
        let e = [ev(0.5, 100, 1.0), ev(1.0, 50, 2.0)];
        let p = mpp_conditional(&[1.0, 1.0], &e).unwrap();
        let c1 = 100.0;
        let c2 = 25.0;
        assert_abs_diff_eq!(p.mean(), (c1 * 0.5 + c2 * 1.0) / (c1 + c2), epsilon = 1e-12);
        assert_abs_diff_eq!(p.variance(), 1.0 / (c1 + c2), epsilon = 1e-12);

        assert_eq!(mpp_conditional(&[0.0, 0.0], &e), Err(Error::AllZeroPower));

        let p = mpp_conditional(&[0.5], &[ev(0.5, 100, 1.0)]).unwrap();
        assert_abs_diff_eq!(p.mean(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.variance(), 0.02, epsilon = 1e-12);
    }

    #[test]
    fn lcp_limits() {
        let e = [ev(0.7, 80, 1.5)];
        // Full commensurability recovers the historical sampling distribution.
        let p = lcp_conditional(&[1e12], &e);
        assert_abs_diff_eq!(p.mean(), 0.7, epsilon = 1e-9);
        assert_abs_diff_eq!(p.variance(), 1.5 / 80.0, epsilon = 1e-9);
        // No commensurability: variance blows up.
        let p = lcp_conditional(&[1e-12], &e);
        assert!(p.variance() > 1e9);
        // Symmetric two-study case averages the estimates.
        let e = [ev(-1.0, 50, 1.0), ev(3.0, 50, 1.0)];
        let p = lcp_conditional(&[2.0, 2.0], &e);
        assert_abs_diff_eq!(p.mean(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn map_examples() {
        let e = [ev(0.5, 100, 1.0), ev(1.0, 50, 1.0)];
        // tau -> 0: pooled mean and variance.
        let p = map_conditional(1e-14, &e);
        assert_abs_diff_eq!(p.mean(), (100.0 * 0.5 + 50.0) / 150.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.variance(), 1.0 / 150.0, epsilon = 1e-9);
        // Single study: mean pinned at the estimate for any tau.
        let p = map_conditional(0.7, &[ev(0.3, 60, 2.0)]);
        assert_abs_diff_eq!(p.mean(), 0.3, epsilon = 1e-12);
        // tau = 1 on the two-study setup.
        let p = map_conditional(1.0, &e);
        let c1 = 100.0 / 101.0;
        let c2 = 50.0 / 51.0;
        assert_abs_diff_eq!(p.mean(), (c1 * 0.5 + c2 * 1.0) / (c1 + c2), epsilon = 1e-12);
        assert_abs_diff_eq!(p.variance(), 1.0 / (c1 + c2) + 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mpp_at_full_power_matches_lcp_limit() {
        let e = [ev(0.42, 120, 0.8)];
        let mpp = mpp_conditional(&[1.0], &e).unwrap();
        let lcp = lcp_conditional(&[1e13], &e);
        assert_abs_diff_eq!(mpp.mean(), lcp.mean(), epsilon = 1e-9);
        assert_abs_diff_eq!(mpp.variance(), lcp.variance(), epsilon = 1e-9);
    }

    #[test]
    fn variance_monotonicity_on_grid() {
        let e = [ev(0.5, 100, 1.0), ev(1.0, 50, 1.0)];
        let mut prev = f64::INFINITY;
        for a in [0.05, 0.1, 0.3, 0.6, 1.0] {
            let v = mpp_conditional(&[a, 0.4], &e).unwrap().variance();
            assert!(v < prev);
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for t in [0.01, 0.1, 1.0, 10.0, 1e4] {
            let v = lcp_conditional(&[t, 1.0], &e).variance();
            assert!(v < prev);
            prev = v;
        }
        let mut prev = 0.0;
        for t in [0.05, 0.2, 1.0, 3.0, 10.0] {
            let v = map_conditional(t, &e).variance();
            assert!(v > prev, "hierarchy variance must grow with dispersion");
            prev = v;
        }
    }

    fn studies(current_mean: f64, n: u64) -> ContinuousStudies<f64> {
        ContinuousStudies::new(
            ContinuousSummary::new(n, current_mean, 1.0).unwrap(),
            vec![
                ContinuousSummary::new(100, 0.5, 1.0).unwrap(),
                ContinuousSummary::new(50, 1.0, 1.0).unwrap(),
            ],
            Vec::new(),
        )
        .unwrap()
    }

    fn cfg(seed: u64) -> ChainConfig {
        ChainConfig {
            iterations: 8000,
            burn_in: 4000,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn full_borrow_tightens_identical_populations() {
        let st = studies(0.6, 60);
        let h = CompareHyper::default();
        let jeff = sample_compare_continuous(&st, CompareMethod::Jeffreys, &h, &cfg(1)).unwrap();
        let full = sample_compare_continuous(&st, CompareMethod::FullBorrow, &h, &cfg(1)).unwrap();
        let sj = jeff.summary("theta", 0.95).unwrap();
        let sf = full.summary("theta", 0.95).unwrap();
        assert!(sf.sd < sj.sd, "pooling more data must tighten the posterior");
    }

    #[test]
    fn mpp_with_negligible_power_matches_jeffreys() {
        let st = studies(0.0, 60);
        let h = CompareHyper {
            // Prior mass piled near alpha = 0.
            mpp_beta: (0.02, 60.0),
            ..Default::default()
        };
        let long = ChainConfig { seed: 3, ..Default::default() };
        let mpp = sample_compare_continuous(&st, CompareMethod::Mpp, &h, &long).unwrap();
        let jeff =
            sample_compare_continuous(&st, CompareMethod::Jeffreys, &CompareHyper::default(), &long)
                .unwrap();
        let sm = mpp.summary("theta", 0.95).unwrap();
        let sj = jeff.summary("theta", 0.95).unwrap();
        assert_abs_diff_eq!(sm.mean, sj.mean, epsilon = 0.05);
        assert_abs_diff_eq!(sm.sd, sj.sd, epsilon = 0.05);
    }

    #[test]
    fn rmap_is_more_robust_than_map_under_conflict() {
        // Current data far from both historical studies: the robust mixture
        // should track the current MLE more closely.
        let st = studies(-2.0, 100);
        let h = CompareHyper::default();
        let map = sample_compare_continuous(&st, CompareMethod::Map, &h, &cfg(5)).unwrap();
        let rmap = sample_compare_continuous(&st, CompareMethod::Rmap, &h, &cfg(5)).unwrap();
        let mm = map.summary("theta", 0.95).unwrap().mean;
        let rm = rmap.summary("theta", 0.95).unwrap().mean;
        assert!(
            (rm - -2.0).abs() < (mm - -2.0).abs(),
            "robust mixture {rm} should sit closer to the MLE than {mm}"
        );
        // The indicator shifts toward the vague component as conflict grows.
        let vague_frac = |chain: &Chain| {
            let v = chain.column("vague").unwrap();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let agree = sample_compare_continuous(&studies(0.6, 100), CompareMethod::Rmap, &h, &cfg(5))
            .unwrap();
        assert!(
            vague_frac(&rmap) > vague_frac(&agree),
            "conflict {} vs agreement {}",
            vague_frac(&rmap),
            vague_frac(&agree)
        );
    }

    #[test]
    fn binary_power_prior_and_baselines() {
        let st = BinaryStudies::new(
            BinarySummary::new(40, 12).unwrap(),
            vec![
                BinarySummary::new(40, 10).unwrap(),
                BinarySummary::new(40, 14).unwrap(),
            ],
            Vec::new(),
        )
        .unwrap();
        let h = CompareHyper::default();
        let jeff = sample_compare_binary(&st, CompareMethod::Jeffreys, &h, &cfg(7)).unwrap();
        let sj = jeff.summary("theta", 0.95).unwrap();
        // Jeffreys posterior Beta(12.5, 28.5).
        assert_abs_diff_eq!(sj.mean, 12.5 / 41.0, epsilon = 0.01);

        let mpp = sample_compare_binary(&st, CompareMethod::Mpp, &h, &cfg(7)).unwrap();
        let sm = mpp.summary("theta", 0.95).unwrap();
        assert!(sm.sd < sj.sd, "borrowing should tighten the posterior");

        let err = sample_compare_binary(&st, CompareMethod::Lcp, &h, &cfg(7)).unwrap_err();
        assert!(matches!(err, Error::UnsupportedEndpoint { .. }));
    }

    proptest! {
        #[test]
        fn conditional_means_are_convex_combinations(
            a in prop::array::uniform3(0.01f64..1.0),
            t in prop::array::uniform3(0.01f64..50.0),
            tau in 0.001f64..10.0,
            est in prop::array::uniform3(-3.0f64..3.0),
        ) {
            let e = [
                ev(est[0], 80, 1.1),
                ev(est[1], 100, 0.9),
                ev(est[2], 120, 1.3),
            ];
            let lo = est.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = est.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for p in [
                mpp_conditional(&a, &e).unwrap(),
                lcp_conditional(&t, &e),
                map_conditional(tau, &e),
            ] {
                prop_assert!(p.mean() >= lo - 1e-10 && p.mean() <= hi + 1e-10);
                prop_assert!(p.variance() > 0.0);
            }
        }
    }
}
