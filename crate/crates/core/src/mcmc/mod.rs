//! Metropolis-within-Gibbs samplers over sufficient statistics.
//!
//! Location parameters and residual variances update through exact conjugate
//! draws; hyper-parameters (amount, weights, powers, commensurabilities,
//! dispersions) move by adaptive random-walk Metropolis. No sampler ever
//! touches patient-level data.

mod binary;
mod continuous;
mod regression;

pub use binary::{sample_uip_binary, BinaryUipBlock};
pub use continuous::{
    sample_uip_continuous, sample_uip_continuous_with_variance, ContinuousUipBlock,
};
pub use regression::{sample_two_arm, sample_uip_regression, TwoArmData, VAGUE_COEF_VAR};

pub(crate) use binary::{run_location_binary, BetaPriorBlock, FixedBetaPrior};
pub(crate) use continuous::run_location_normal;
pub(crate) use regression::run_two_arm;

use std::io::Write as IoWrite;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta as BetaDist, Distribution, Gamma, Normal as NormalDist};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prior::WeightVector;

/// Lower clamp on the amount parameter inside samplers; keeps the conditional
/// prior variance finite near the Uniform(0, U) boundary.
pub const AMOUNT_FLOOR: f64 = 1e-6;

/// Sampler configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Total iterations, including burn-in.
    pub iterations: usize,
    /// Iterations discarded before recording; adaptation stops here.
    pub burn_in: usize,
    /// RNG seed; identical configs give bit-identical chains.
    pub seed: u64,
    /// Batch size for proposal-scale adaptation during burn-in.
    pub adapt_window: usize,
    /// Target acceptance rate for scalar random-walk blocks.
    pub target_accept: f64,
    /// Target acceptance rate for the multivariate weight block.
    pub target_accept_simplex: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            burn_in: 10_000,
            seed: 0,
            adapt_window: 50,
            target_accept: 0.30,
            target_accept_simplex: 0.25,
        }
    }
}

impl ChainConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1000 {
            return Err(Error::Config(format!(
                "iterations must be >= 1000, got {}",
                self.iterations
            )));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn_in {} must be below iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.adapt_window == 0 {
            return Err(Error::Config("adapt_window must be >= 1".into()));
        }
        for (name, t) in [
            ("target_accept", self.target_accept),
            ("target_accept_simplex", self.target_accept_simplex),
        ] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!("{name} must be in (0, 1), got {t}")));
            }
        }
        Ok(())
    }
}

/// Acceptance bookkeeping for one Metropolis block, split at burn-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockAccept {
    pub name: String,
    pub pre_burn_in: f64,
    pub post_burn_in: f64,
    /// Proposal scale frozen at the end of burn-in.
    pub scale: f64,
}

/// Post-burn-in draws, one column per parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    pub accept: Vec<BlockAccept>,
    pub config: ChainConfig,
}

impl Chain {
    pub(crate) fn new(
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        accept: Vec<BlockAccept>,
        config: ChainConfig,
    ) -> Self {
        debug_assert_eq!(names.len(), columns.len());
        Self { names, columns, accept, config }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Number of recorded draws.
    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    /// Posterior summary of one parameter at an equal-tailed level.
    pub fn summary(&self, name: &str, level: f64) -> Result<PosteriorSummary> {
        let draws = self
            .column(name)
            .ok_or_else(|| Error::Config(format!("no parameter named `{name}` in chain")))?;
        posterior_summary(draws, level)
    }

    /// One column per parameter, one row per post-burn-in draw.
    pub fn write_csv<W: IoWrite>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.names.join(","))?;
        for row in 0..self.len() {
            let line: Vec<String> = self.columns.iter().map(|c| c[row].to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Posterior mean, spread and equal-tailed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

/// Mean and equal-tailed interval from raw draws; quantiles interpolate
/// linearly between order statistics.
pub fn posterior_summary(draws: &[f64], level: f64) -> Result<PosteriorSummary> {
    if draws.is_empty() {
        return Err(Error::EmptyChain);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::BadLevel(level));
    }
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("draws must not contain NaN"));
    Ok(PosteriorSummary {
        mean,
        sd: var.sqrt(),
        lower: quantile_sorted(&sorted, (1.0 - level) / 2.0),
        upper: quantile_sorted(&sorted, (1.0 + level) / 2.0),
        level,
    })
}

/// Linear-interpolation quantile (the R type-7 convention) of presorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Two-sided tail mass of `value` within presorted draws: the rejection
/// threshold of the equal-tailed interval test. A test at level `l` rejects
/// exactly when this falls below `1 - l`.
pub fn two_sided_tail(sorted: &[f64], value: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0);
    if value <= sorted[0] || value >= sorted[n - 1] {
        return 0.0;
    }
    // Fractional index of `value` via the same interpolation the quantiles use.
    let idx = sorted.partition_point(|d| *d < value);
    let (lo, hi) = (sorted[idx - 1], sorted[idx]);
    let frac = if hi > lo { (value - lo) / (hi - lo) } else { 0.0 };
    let pos = ((idx - 1) as f64 + frac) / (n - 1) as f64;
    2.0 * pos.min(1.0 - pos)
}

/// Deterministic per-task seed derivation (splitmix64 mix of the index).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = index.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    master ^ (z ^ (z >> 31))
}

pub(crate) fn draw_standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    NormalDist::new(0.0, 1.0).unwrap().sample(rng)
}

pub(crate) fn draw_normal(rng: &mut ChaCha8Rng, mean: f64, var: f64) -> f64 {
    mean + var.sqrt() * draw_standard_normal(rng)
}

/// InvGamma(shape, rate) draw via the reciprocal of a Gamma(shape, 1/rate).
pub(crate) fn draw_inv_gamma(rng: &mut ChaCha8Rng, shape: f64, rate: f64) -> f64 {
    let g = Gamma::new(shape, 1.0 / rate).expect("valid gamma").sample(rng);
    1.0 / g.max(1e-300)
}

pub(crate) fn draw_beta(rng: &mut ChaCha8Rng, a: f64, b: f64) -> f64 {
    BetaDist::new(a, b).expect("valid beta").sample(rng)
}

/// Folds a proposal back into `[lo, hi]` by reflection; `hi` may be infinite.
pub(crate) fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    if hi.is_infinite() {
        return lo + (x - lo).abs();
    }
    let span = hi - lo;
    let mut t = (x - lo).rem_euclid(2.0 * span);
    if t > span {
        t = 2.0 * span - t;
    }
    lo + t
}

/// Shared adaptation and acceptance bookkeeping for one Metropolis block.
#[derive(Debug, Clone)]
pub(crate) struct WalkState {
    name: &'static str,
    log_scale: f64,
    max_log_scale: f64,
    target: f64,
    window: usize,
    frozen: bool,
    batch_index: usize,
    batch_proposals: usize,
    batch_accepts: usize,
    pre: (usize, usize),
    post: (usize, usize),
}

impl WalkState {
    pub fn new(name: &'static str, scale: f64, target: f64, window: usize) -> Self {
        Self {
            name,
            log_scale: scale.ln(),
            max_log_scale: 6.0,
            target,
            window,
            frozen: false,
            batch_index: 0,
            batch_proposals: 0,
            batch_accepts: 0,
            pre: (0, 0),
            post: (0, 0),
        }
    }

    /// Caps the proposal scale; steps beyond the support span only churn the
    /// reflection, so acceptance may legitimately sit above target for flat
    /// targets once the cap binds.
    pub fn with_max_scale(mut self, max_scale: f64) -> Self {
        self.max_log_scale = max_scale.ln();
        self.log_scale = self.log_scale.min(self.max_log_scale);
        self
    }

    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    pub fn record(&mut self, accepted: bool) {
        let tally = if self.frozen { &mut self.post } else { &mut self.pre };
        tally.0 += 1;
        tally.1 += usize::from(accepted);
        if self.frozen {
            return;
        }
        self.batch_proposals += 1;
        self.batch_accepts += usize::from(accepted);
        if self.batch_proposals == self.window {
            self.batch_index += 1;
            let rate = self.batch_accepts as f64 / self.batch_proposals as f64;
            let gain = (2.0 / (self.batch_index as f64).sqrt()).min(1.0);
            self.log_scale =
                (self.log_scale + gain * (rate - self.target)).clamp(-15.0, self.max_log_scale);
            self.batch_proposals = 0;
            self.batch_accepts = 0;
        }
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn accept_stat(&self) -> BlockAccept {
        let rate = |(n, a): (usize, usize)| if n == 0 { f64::NAN } else { a as f64 / n as f64 };
        BlockAccept {
            name: self.name.to_string(),
            pre_burn_in: rate(self.pre),
            post_burn_in: rate(self.post),
            scale: self.scale(),
        }
    }
}

/// One Metropolis step of a bounded scalar with a reflected Gaussian proposal.
/// Returns the new value; `log_target` may return `-inf` to veto a proposal.
pub(crate) fn scalar_metropolis(
    rng: &mut ChaCha8Rng,
    walk: &mut WalkState,
    current: f64,
    lo: f64,
    hi: f64,
    mut log_target: impl FnMut(f64) -> f64,
) -> f64 {
    let proposal = reflect(current + walk.scale() * draw_standard_normal(rng), lo, hi);
    let delta = log_target(proposal) - log_target(current);
    let accepted = delta >= 0.0 || rng.random::<f64>().max(1e-300).ln() < delta;
    walk.record(accepted);
    if accepted {
        proposal
    } else {
        current
    }
}

/// Weight state on the simplex, parameterized as softmax of `K - 1` free
/// logits (the first logit is pinned at zero).
#[derive(Debug, Clone)]
pub(crate) struct SimplexState {
    logits: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SimplexState {
    pub fn from_weights(w: &[f64]) -> Self {
        let logits = w[1..].iter().map(|&wk| (wk / w[0]).ln()).collect();
        Self { logits, weights: w.to_vec() }
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    fn weights_of(logits: &[f64]) -> Vec<f64> {
        let max = logits.iter().copied().fold(0.0f64, f64::max);
        let mut w: Vec<f64> = std::iter::once(0.0)
            .chain(logits.iter().copied())
            .map(|z| (z - max).exp())
            .collect();
        let sum: f64 = w.iter().sum();
        for wk in &mut w {
            *wk /= sum;
        }
        w
    }

    /// Spherical random-walk Metropolis step. `log_target` receives candidate
    /// weights; the caller adds the Dirichlet-with-Jacobian term
    /// `sum_k gamma_k ln w_k` itself.
    pub fn metropolis(
        &mut self,
        rng: &mut ChaCha8Rng,
        walk: &mut WalkState,
        mut log_target: impl FnMut(&[f64]) -> f64,
    ) {
        let scale = walk.scale();
        let proposal_logits: Vec<f64> = self
            .logits
            .iter()
            .map(|z| z + scale * draw_standard_normal(rng))
            .collect();
        let proposal_weights = Self::weights_of(&proposal_logits);
        let delta = log_target(&proposal_weights) - log_target(&self.weights);
        let accepted = delta >= 0.0 || rng.random::<f64>().max(1e-300).ln() < delta;
        walk.record(accepted);
        if accepted {
            self.logits = proposal_logits;
            self.weights = proposal_weights;
        }
    }
}

/// Conditional prior of a location parameter inside the Gibbs cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ThetaPrior {
    Flat,
    Normal { mean: f64, var: f64 },
}

impl ThetaPrior {
    /// Conjugate posterior given a normal likelihood summary
    /// `estimate ~ N(theta, est_var)`.
    pub fn posterior(&self, estimate: f64, est_var: f64) -> (f64, f64) {
        match *self {
            ThetaPrior::Flat => (estimate, est_var),
            ThetaPrior::Normal { mean, var } => {
                let precision = 1.0 / var + 1.0 / est_var;
                let post_var = 1.0 / precision;
                (post_var * (mean / var + estimate / est_var), post_var)
            }
        }
    }
}

/// Hyper-parameter block feeding a normal-scale location parameter.
pub(crate) trait LocationPrior {
    /// Conditional prior at the current hyper state.
    fn current(&self) -> ThetaPrior;
    /// Metropolis moves of the hyper-parameters given the location value.
    fn update(&mut self, theta: f64, rng: &mut ChaCha8Rng);
    /// Names of recorded hyper draws.
    fn names(&self) -> Vec<String> {
        Vec::new()
    }
    fn record(&self, _out: &mut Vec<f64>) {}
    fn freeze(&mut self) {}
    fn accepts(&self) -> Vec<BlockAccept> {
        Vec::new()
    }
}

/// Fixed conditional prior; no hyper-parameters.
pub(crate) struct FixedLocationPrior(pub ThetaPrior);

impl LocationPrior for FixedLocationPrior {
    fn current(&self) -> ThetaPrior {
        self.0
    }
    fn update(&mut self, _theta: f64, _rng: &mut ChaCha8Rng) {}
}

/// Residual-variance model of the Gibbs cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VarianceModel {
    /// `sigma^2 ~ InvGamma(zeta, zeta)` with conjugate updates.
    InvGamma { zeta: f64 },
    /// Known residual variance; the sigma^2 column stays constant.
    Fixed(f64),
}

impl Default for VarianceModel {
    fn default() -> Self {
        Self::InvGamma { zeta: 0.01 }
    }
}

/// Dirichlet shape vector or fixed weights for the UIP weight block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightMode {
    /// Weights sampled under a Dirichlet hyper-prior with these shapes.
    Dirichlet(Vec<f64>),
    /// Weights held fixed (e.g. elicited by divergence).
    Fixed(WeightVector<f64>),
}

impl WeightMode {
    pub(crate) fn initial_weights(&self, k: usize) -> Result<Vec<f64>> {
        match self {
            WeightMode::Dirichlet(gammas) => {
                if gammas.len() != k {
                    return Err(Error::Config(format!(
                        "{} Dirichlet shapes for {k} historical studies",
                        gammas.len()
                    )));
                }
                if gammas.iter().any(|g| !(*g > 0.0)) {
                    return Err(Error::Config("Dirichlet shapes must be positive".into()));
                }
                let sum: f64 = gammas.iter().sum();
                Ok(gammas.iter().map(|g| g / sum).collect())
            }
            WeightMode::Fixed(w) => {
                if w.len() != k {
                    return Err(Error::Config(format!(
                        "{} fixed weights for {k} historical studies",
                        w.len()
                    )));
                }
                Ok(w.as_slice().to_vec())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantiles_interpolate_linearly() {
        let draws: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = posterior_summary(&draws, 0.90).unwrap();
        assert_abs_diff_eq!(s.mean, 50.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.lower, 5.95, epsilon = 1e-12);
        assert_abs_diff_eq!(s.upper, 95.05, epsilon = 1e-12);
    }

    #[test]
    fn constant_chain_summary() {
        let s = posterior_summary(&[3.0; 10], 0.95).unwrap();
        assert_eq!((s.mean, s.lower, s.upper), (3.0, 3.0, 3.0));
        assert_eq!(s.sd, 0.0);
    }

    #[test]
    fn empty_chain_is_an_error() {
        assert_eq!(posterior_summary(&[], 0.95), Err(Error::EmptyChain));
    }

    #[test]
    fn tail_mass_consistent_with_interval_test() {
        let draws: Vec<f64> = (1..=100).map(f64::from).collect();
        let mut sorted = draws.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for value in [2.0, 10.0, 42.5, 60.0, 99.0] {
            let t = two_sided_tail(&sorted, value);
            for level in [0.5, 0.8, 0.9, 0.95, 0.99] {
                let s = posterior_summary(&draws, level).unwrap();
                let rejected = value < s.lower || value > s.upper;
                assert_eq!(t < 1.0 - level, rejected, "value {value} level {level}");
            }
        }
        assert_eq!(two_sided_tail(&sorted, 0.5), 0.0);
        assert_eq!(two_sided_tail(&sorted, 101.0), 0.0);
    }

    #[test]
    fn reflection_stays_in_bounds() {
        for &(x, lo, hi) in &[
            (1.4, 0.0, 1.0),
            (-0.3, 0.0, 1.0),
            (7.9, 0.0, 1.0),
            (-11.2, -1.0, 2.0),
            (1e6, 0.0, 40.0),
        ] {
            let r = reflect(x, lo, hi);
            assert!(r >= lo && r <= hi, "reflect({x}) = {r}");
        }
        assert_eq!(reflect(0.7, 0.0, 1.0), 0.7);
        assert_eq!(reflect(1.2, 0.0, 1.0), 0.8);
        assert_abs_diff_eq!(reflect(-2.5, 0.0, f64::INFINITY), 2.5);
    }

    #[test]
    fn adaptation_freezes_after_burn_in() {
        let mut walk = WalkState::new("m", 1.0, 0.3, 10);
        for _ in 0..100 {
            walk.record(true);
        }
        let adapted = walk.scale();
        assert!(adapted > 1.0, "all-accepts should widen the proposal");
        walk.freeze();
        for i in 0..100 {
            walk.record(i % 2 == 0);
        }
        assert_eq!(walk.scale(), adapted);
        let stat = walk.accept_stat();
        assert_abs_diff_eq!(stat.pre_burn_in, 1.0);
        assert_abs_diff_eq!(stat.post_burn_in, 0.5);
    }

    #[test]
    fn simplex_round_trip() {
        let w = [0.2, 0.3, 0.5];
        let state = SimplexState::from_weights(&w);
        for (a, b) in state.weights.iter().zip(w) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn derive_seed_spreads_indices() {
        let a = derive_seed(42, 0);
        let b = derive_seed(42, 1);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(42, 0));
    }

    #[test]
    fn conjugate_posterior_formula() {
        // Prior N(0, 1), likelihood estimate 2 with variance 1: posterior N(1, 1/2).
        let prior = ThetaPrior::Normal { mean: 0.0, var: 1.0 };
        let (m, v) = prior.posterior(2.0, 1.0);
        assert_abs_diff_eq!(m, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-12);
        let (m, v) = ThetaPrior::Flat.posterior(2.0, 0.25);
        assert_eq!((m, v), (2.0, 0.25));
    }

    #[test]
    fn config_validation() {
        assert!(ChainConfig::default().validate().is_ok());
        let bad = ChainConfig { iterations: 500, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ChainConfig { burn_in: 30_000, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
