//! Single-arm binary sampler.
//!
//! The rate parameter updates by exact Beta conjugacy given the amount and
//! weights; the hyper blocks move as in the continuous sampler with the Beta
//! conditional density as the target. Proposals that break the Beta moment
//! condition are rejected rather than fatal.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::prior::{uip_beta_from_rates, AmountPrior, ConditionalPrior};
use crate::special::beta_ln_pdf;
use crate::summaries::{BinaryStudies, BinarySummary};

use super::{
    draw_beta, scalar_metropolis, BlockAccept, Chain, ChainConfig, SimplexState, WalkState,
    WeightMode, AMOUNT_FLOOR,
};

/// Beta-scale prior block: fixed shapes or the unit-information construction.
pub(crate) trait BetaPriorBlock {
    /// Current conditional prior shapes `(alpha, beta)`.
    fn current(&self) -> (f64, f64);
    fn update(&mut self, theta: f64, rng: &mut ChaCha8Rng);
    fn names(&self) -> Vec<String> {
        Vec::new()
    }
    fn record(&self, _out: &mut Vec<f64>) {}
    fn freeze(&mut self) {}
    fn accepts(&self) -> Vec<BlockAccept> {
        Vec::new()
    }
}

/// Fixed Beta prior (noninformative analyses and pooled baselines).
pub(crate) struct FixedBetaPrior(pub f64, pub f64);

impl BetaPriorBlock for FixedBetaPrior {
    fn current(&self) -> (f64, f64) {
        (self.0, self.1)
    }
    fn update(&mut self, _theta: f64, _rng: &mut ChaCha8Rng) {}
}

/// Amount and weight blocks of the binary unit-information prior.
pub struct BinaryUipBlock {
    rates: Vec<f64>,
    amount: f64,
    amount_walk: Option<(WalkState, f64)>,
    weights: SimplexState,
    weight_walk: Option<(WalkState, Vec<f64>)>,
}

impl BinaryUipBlock {
    pub fn new(
        historical: &[BinarySummary],
        amount: &AmountPrior<f64>,
        wmode: &WeightMode,
        cfg: &ChainConfig,
    ) -> Result<Self> {
        let rates: Vec<f64> = historical.iter().map(|b| b.corrected_rate()).collect();
        let w0 = wmode.initial_weights(rates.len())?;
        let amount_walk = match *amount {
            AmountPrior::Fixed(_) => None,
            AmountPrior::Uniform { upper } => Some((
                WalkState::new("m", 0.1 * upper, cfg.target_accept, cfg.adapt_window)
                    .with_max_scale(upper),
                upper,
            )),
        };
        let weight_walk = match wmode {
            WeightMode::Fixed(_) => None,
            WeightMode::Dirichlet(_) if rates.len() < 2 => None,
            WeightMode::Dirichlet(gammas) => Some((
                WalkState::new("w", 0.5, cfg.target_accept_simplex, cfg.adapt_window),
                gammas.clone(),
            )),
        };
        let weights = SimplexState::from_weights(&w0);

        // The initial amount must satisfy the moment condition; walk upward
        // from U/2 if it does not.
        let mut block = Self {
            rates,
            amount: AMOUNT_FLOOR,
            amount_walk,
            weights,
            weight_walk,
        };
        let candidates: Vec<f64> = match *amount {
            AmountPrior::Fixed(m) => vec![m.max(AMOUNT_FLOOR)],
            AmountPrior::Uniform { upper } => {
                vec![0.5 * upper, 0.75 * upper, 0.9 * upper, 0.99 * upper]
            }
        };
        let mut chosen = None;
        let mut last_err = Error::DegeneratePrior;
        for m in candidates {
            match block.shapes_at(m, &block.weights.weights) {
                Ok(_) => {
                    chosen = Some(m);
                    break;
                }
                Err(e) => last_err = e,
            }
        }
        block.amount = chosen.ok_or(last_err)?;
        Ok(block)
    }

    fn shapes_at(&self, amount: f64, weights: &[f64]) -> Result<(f64, f64)> {
        let w = crate::prior::WeightVector::new(weights.to_vec())?;
        match uip_beta_from_rates(amount, &w, &self.rates)? {
            ConditionalPrior::Beta { alpha, beta } => Ok((alpha, beta)),
            ConditionalPrior::Normal { .. } => unreachable!("uip_beta returns a beta prior"),
        }
    }

}

impl BetaPriorBlock for BinaryUipBlock {
    fn current(&self) -> (f64, f64) {
        self.shapes_at(self.amount, &self.weights.weights)
            .expect("sampler state always satisfies the moment condition")
    }

    fn update(&mut self, theta: f64, rng: &mut ChaCha8Rng) {
        if let Some((walk, upper)) = &mut self.amount_walk {
            let upper = *upper;
            let rates = &self.rates;
            let weights = &self.weights.weights;
            self.amount = scalar_metropolis(rng, walk, self.amount, AMOUNT_FLOOR, upper, |m| {
                ln_beta_prior(rates, m, weights, theta)
            });
        }
        if let Some((walk, gammas)) = &mut self.weight_walk {
            let rates = &self.rates;
            let gammas = &*gammas;
            let amount = self.amount;
            self.weights.metropolis(rng, walk, |w| {
                let prior: f64 = w
                    .iter()
                    .zip(gammas)
                    .map(|(wk, g)| g * wk.max(1e-300).ln())
                    .sum();
                ln_beta_prior(rates, amount, w, theta) + prior
            });
        }
    }

    fn names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.amount_walk.is_some() {
            names.push("m".to_string());
        }
        if self.weight_walk.is_some() {
            for k in 1..=self.weights.k() {
                names.push(format!("w{k}"));
            }
        }
        names
    }

    fn record(&self, out: &mut Vec<f64>) {
        if self.amount_walk.is_some() {
            out.push(self.amount);
        }
        if self.weight_walk.is_some() {
            out.extend_from_slice(&self.weights.weights);
        }
    }

    fn freeze(&mut self) {
        if let Some((walk, _)) = &mut self.amount_walk {
            walk.freeze();
        }
        if let Some((walk, _)) = &mut self.weight_walk {
            walk.freeze();
        }
    }

    fn accepts(&self) -> Vec<BlockAccept> {
        let mut out = Vec::new();
        if let Some((walk, _)) = &self.amount_walk {
            out.push(walk.accept_stat());
        }
        if let Some((walk, _)) = &self.weight_walk {
            out.push(walk.accept_stat());
        }
        out
    }
}

fn ln_beta_prior(rates: &[f64], amount: f64, weights: &[f64], theta: f64) -> f64 {
    let mut mean = 0.0;
    let mut info = 0.0;
    for (&w, &p) in weights.iter().zip(rates) {
        mean += w * p;
        info += w / (p * (1.0 - p));
    }
    let var = 1.0 / (amount * info);
    let bound = mean * (1.0 - mean);
    if !(var > 0.0) || var >= bound {
        return f64::NEG_INFINITY;
    }
    let scale = bound / var - 1.0;
    beta_ln_pdf(theta, mean * scale, (1.0 - mean) * scale)
}

/// Gibbs engine for a single-arm binary endpoint.
pub(crate) fn run_location_binary(
    current: &BinarySummary,
    block: &mut dyn BetaPriorBlock,
    cfg: &ChainConfig,
) -> Result<Chain> {
    cfg.validate()?;
    let y = current.successes() as f64;
    let failures = (current.n() - current.successes()) as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut names = vec!["theta".to_string()];
    names.extend(block.names());
    let keep = cfg.iterations - cfg.burn_in;
    let mut columns: Vec<Vec<f64>> = names.iter().map(|_| Vec::with_capacity(keep)).collect();
    let mut row = Vec::with_capacity(names.len());

    for iter in 0..cfg.iterations {
        if iter == cfg.burn_in {
            block.freeze();
        }
        let (alpha, beta) = block.current();
        let theta = draw_beta(&mut rng, alpha + y, beta + failures);
        block.update(theta, &mut rng);

        if iter >= cfg.burn_in {
            row.clear();
            row.push(theta);
            block.record(&mut row);
            for (col, value) in columns.iter_mut().zip(&row) {
                col.push(*value);
            }
        }
    }

    Ok(Chain::new(names, columns, block.accepts(), *cfg))
}

/// Unit-information-prior posterior for a binary endpoint.
pub fn sample_uip_binary(
    studies: &BinaryStudies,
    amount: &AmountPrior<f64>,
    wmode: &WeightMode,
    cfg: &ChainConfig,
) -> Result<Chain> {
    let mut block = BinaryUipBlock::new(&studies.historical, amount, wmode, cfg)?;
    run_location_binary(&studies.current, &mut block, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::WeightVector;
    use approx::assert_abs_diff_eq;

    fn studies(rates: &[(u64, u64)], current: (u64, u64)) -> BinaryStudies {
        BinaryStudies::new(
            BinarySummary::new(current.0, current.1).unwrap(),
            rates
                .iter()
                .map(|&(n, y)| BinarySummary::new(n, y).unwrap())
                .collect(),
            Vec::new(),
        )
        .unwrap()
    }

    #[test]
    fn conjugate_identity_with_fixed_hypers() {
        // mu = 0.5, eta^2 = 1/12 gives the Beta(1,1) prior, so the posterior
        // after 5 successes in 10 is Beta(6, 6) exactly.
        let st = studies(&[(10, 5)], (10, 5));
        let w = WeightVector::new(vec![1.0]).unwrap();
        // eta^2 = 1/(M * 4) = 1/12 at M = 3.
        let amount = AmountPrior::fixed(3.0).unwrap();
        let cfg = ChainConfig {
            iterations: 40_000,
            burn_in: 1000,
            seed: 3,
            ..Default::default()
        };
        let chain = sample_uip_binary(&st, &amount, &WeightMode::Fixed(w), &cfg).unwrap();
        let s = chain.summary("theta", 0.95).unwrap();
        // Beta(6,6): mean 0.5, sd sqrt(0.25/13).
        assert_abs_diff_eq!(s.mean, 0.5, epsilon = 0.005);
        assert_abs_diff_eq!(s.sd, (0.25f64 / 13.0).sqrt(), epsilon = 0.005);
    }

    #[test]
    fn equal_rates_give_ess_m_minus_one() {
        // theta_hat_k all 0.5 at M = 10: prior Beta(4.5, 4.5), carrying 9
        // pseudo-observations next to the current 10.
        let st = studies(&[(20, 10), (30, 15)], (10, 5));
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let amount = AmountPrior::fixed(10.0).unwrap();
        let cfg = ChainConfig {
            iterations: 40_000,
            burn_in: 1000,
            seed: 4,
            ..Default::default()
        };
        let chain = sample_uip_binary(&st, &amount, &WeightMode::Fixed(w), &cfg).unwrap();
        let s = chain.summary("theta", 0.95).unwrap();
        // Posterior Beta(4.5 + 5, 4.5 + 5): variance of Beta(9.5, 9.5).
        let v = 9.5 * 9.5 / (19.0f64 * 19.0 * 20.0);
        assert_abs_diff_eq!(s.sd, v.sqrt(), epsilon = 0.005);
    }

    #[test]
    fn deterministic_and_supports() {
        let st = studies(&[(40, 8), (40, 16)], (40, 12));
        let amount = AmountPrior::uniform(80.0).unwrap();
        let wmode = WeightMode::Dirichlet(vec![1.0, 1.0]);
        let cfg = ChainConfig {
            iterations: 4000,
            burn_in: 2000,
            seed: 11,
            ..Default::default()
        };
        let a = sample_uip_binary(&st, &amount, &wmode, &cfg).unwrap();
        let b = sample_uip_binary(&st, &amount, &wmode, &cfg).unwrap();
        assert_eq!(a, b);
        for &t in a.column("theta").unwrap() {
            assert!(t > 0.0 && t < 1.0);
        }
        for &m in a.column("m").unwrap() {
            assert!((AMOUNT_FLOOR..=80.0).contains(&m));
        }
        for (&w1, &w2) in a
            .column("w1")
            .unwrap()
            .iter()
            .zip(a.column("w2").unwrap())
        {
            assert!(w1 > 0.0 && w2 > 0.0);
            assert_abs_diff_eq!(w1 + w2, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn agrees_with_normal_approximation_at_scale() {
        // Large n, interior rate: the Beta posterior mean approaches the
        // normal-approximation posterior mean.
        let n = 10_000u64;
        let st = studies(&[(n, 5200)], (n, 4900));
        let w = WeightVector::new(vec![1.0]).unwrap();
        let amount = AmountPrior::fixed(400.0).unwrap();
        let cfg = ChainConfig {
            iterations: 30_000,
            burn_in: 1000,
            seed: 6,
            ..Default::default()
        };
        let chain = sample_uip_binary(&st, &amount, &WeightMode::Fixed(w), &cfg).unwrap();
        let s = chain.summary("theta", 0.95).unwrap();

        let p_hist = 0.52;
        let prior_var = p_hist * (1.0 - p_hist) / 400.0;
        let p_cur = 0.49;
        let lik_var = p_cur * (1.0 - p_cur) / n as f64;
        let post_var = 1.0 / (1.0 / prior_var + 1.0 / lik_var);
        let post_mean = post_var * (p_hist / prior_var + p_cur / lik_var);
        assert_abs_diff_eq!(s.mean, post_mean, epsilon = 0.01);
    }
}
