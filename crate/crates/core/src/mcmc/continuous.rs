//! Single-arm continuous sampler.
//!
//! Gibbs cycle: exact conjugate draws of the mean and the residual variance,
//! then Metropolis moves of the amount parameter (reflected random walk on
//! `[1e-6, U]`) and of the weights (spherical random walk on the softmax
//! reparameterization, Dirichlet prior with the Jacobian folded in).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::prior::AmountPrior;
use crate::special::normal_ln_pdf;
use crate::summaries::{ContinuousStudies, ContinuousSummary, NormalEvidence};

use super::{
    draw_inv_gamma, draw_normal, scalar_metropolis, BlockAccept, Chain, ChainConfig,
    LocationPrior, SimplexState, ThetaPrior, VarianceModel, WalkState, WeightMode, AMOUNT_FLOOR,
};

/// Amount and weight blocks of a normal-scale unit-information prior. Also
/// serves as the effect prior of the regression sampler.
pub struct ContinuousUipBlock {
    estimates: Vec<f64>,
    unit_infos: Vec<f64>,
    amount: f64,
    amount_walk: Option<(WalkState, f64)>,
    weights: SimplexState,
    weight_walk: Option<(WalkState, Vec<f64>)>,
}

impl ContinuousUipBlock {
    pub fn new(
        evidence: &[NormalEvidence<f64>],
        amount: &AmountPrior<f64>,
        wmode: &WeightMode,
        cfg: &ChainConfig,
    ) -> Result<Self> {
        let k = evidence.len();
        let w0 = wmode.initial_weights(k)?;
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
            WeightMode::Dirichlet(gammas) if k < 2 => {
                let _ = gammas;
                None
            }
            WeightMode::Dirichlet(gammas) => Some((
                WalkState::new("w", 0.5, cfg.target_accept_simplex, cfg.adapt_window),
                gammas.clone(),
            )),
        };
        Ok(Self {
            estimates: evidence.iter().map(|e| e.estimate).collect(),
            unit_infos: evidence.iter().map(|e| e.unit_info()).collect(),
            amount: match *amount {
                AmountPrior::Fixed(m) => m.max(AMOUNT_FLOOR),
                AmountPrior::Uniform { upper } => 0.5 * upper,
            },
            amount_walk,
            weights: SimplexState::from_weights(&w0),
            weight_walk,
        })
    }

    /// Current amount state, exposed for tests.
    pub fn amount(&self) -> f64 {
        self.amount
    }
}

fn weighted_dot(weights: &[f64], values: &[f64]) -> f64 {
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

impl LocationPrior for ContinuousUipBlock {
    fn current(&self) -> ThetaPrior {
        ThetaPrior::Normal {
            mean: weighted_dot(&self.weights.weights, &self.estimates),
            var: 1.0 / (self.amount * weighted_dot(&self.weights.weights, &self.unit_infos)),
        }
    }

    fn update(&mut self, theta: f64, rng: &mut ChaCha8Rng) {
        if let Some((walk, upper)) = &mut self.amount_walk {
            let upper = *upper;
            let mean = weighted_dot(&self.weights.weights, &self.estimates);
            let info = weighted_dot(&self.weights.weights, &self.unit_infos);
            self.amount = scalar_metropolis(rng, walk, self.amount, AMOUNT_FLOOR, upper, |m| {
                normal_ln_pdf(theta, mean, 1.0 / (m * info))
            });
        }
        if let Some((walk, gammas)) = &mut self.weight_walk {
            let estimates = &self.estimates;
            let unit_infos = &self.unit_infos;
            let gammas = &*gammas;
            let amount = self.amount;
            self.weights.metropolis(rng, walk, |w| {
                let mean = weighted_dot(w, estimates);
                let info = weighted_dot(w, unit_infos);
                // Dirichlet(gamma) density times the softmax Jacobian, up to a constant.
                let prior: f64 = w
                    .iter()
                    .zip(gammas)
                    .map(|(wk, g)| g * wk.max(1e-300).ln())
                    .sum();
                normal_ln_pdf(theta, mean, 1.0 / (amount * info)) + prior
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

/// Gibbs engine for a single-arm continuous endpoint with an arbitrary
/// location-prior block. Records `theta`, `sigma2`, then the block's draws.
pub(crate) fn run_location_normal(
    current: &ContinuousSummary<f64>,
    variance: VarianceModel,
    block: &mut dyn LocationPrior,
    cfg: &ChainConfig,
) -> Result<Chain> {
    cfg.validate()?;
    let n = current.n() as f64;
    let estimate = current.mean();
    let sample_var = current.sample_variance();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sigma2 = match variance {
        VarianceModel::Fixed(v) => v,
        VarianceModel::InvGamma { .. } => current.mle_variance(),
    };

    let mut names = vec!["theta".to_string(), "sigma2".to_string()];
    names.extend(block.names());
    let keep = cfg.iterations - cfg.burn_in;
    let mut columns: Vec<Vec<f64>> = names.iter().map(|_| Vec::with_capacity(keep)).collect();
    let mut row = Vec::with_capacity(names.len());

    for iter in 0..cfg.iterations {
        if iter == cfg.burn_in {
            block.freeze();
        }
        let (post_mean, post_var) = block.current().posterior(estimate, sigma2 / n);
        let theta = draw_normal(&mut rng, post_mean, post_var);

        if let VarianceModel::InvGamma { zeta } = variance {
            let ss = (n - 1.0) * sample_var + n * (estimate - theta) * (estimate - theta);
            sigma2 = draw_inv_gamma(&mut rng, zeta + 0.5 * n, zeta + 0.5 * ss);
        }

        block.update(theta, &mut rng);

        if iter >= cfg.burn_in {
            row.clear();
            row.push(theta);
            row.push(sigma2);
            block.record(&mut row);
            for (col, value) in columns.iter_mut().zip(&row) {
                col.push(*value);
            }
        }
    }

    Ok(Chain::new(names, columns, block.accepts(), *cfg))
}

/// Unit-information-prior posterior for a continuous endpoint, with
/// `sigma^2 ~ InvGamma(0.01, 0.01)`.
pub fn sample_uip_continuous(
    studies: &ContinuousStudies<f64>,
    amount: &AmountPrior<f64>,
    wmode: &WeightMode,
    cfg: &ChainConfig,
) -> Result<Chain> {
    sample_uip_continuous_with_variance(studies, amount, wmode, VarianceModel::default(), cfg)
}

/// Same sampler with an explicit residual-variance model; the `Fixed` variant
/// serves known-variance analyses and conjugacy oracles.
pub fn sample_uip_continuous_with_variance(
    studies: &ContinuousStudies<f64>,
    amount: &AmountPrior<f64>,
    wmode: &WeightMode,
    variance: VarianceModel,
    cfg: &ChainConfig,
) -> Result<Chain> {
    let evidence = studies.evidence();
    let mut block = ContinuousUipBlock::new(&evidence, amount, wmode, cfg)?;
    run_location_normal(&studies.current, variance, &mut block, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::{uip_normal, WeightVector};
    use approx::assert_abs_diff_eq;

    fn studies(theta_hats: &[f64], n: u64) -> ContinuousStudies<f64> {
        let current = ContinuousSummary::new(n, 0.1, 1.0).unwrap();
        let hist = theta_hats
            .iter()
            .map(|&t| ContinuousSummary::new(n, t, 1.0).unwrap())
            .collect();
        ContinuousStudies::new(current, hist, Vec::new()).unwrap()
    }

    fn short(seed: u64) -> ChainConfig {
        ChainConfig {
            iterations: 4000,
            burn_in: 2000,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn conjugate_oracle_with_fixed_hypers() {
        // Fixed M, w and known variance: the theta draws are iid from the
        // closed-form conjugate posterior.
        let st = studies(&[-0.3, 0.3], 40);
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let amount = AmountPrior::fixed(20.0).unwrap();
        let cfg = ChainConfig {
            iterations: 20_000,
            burn_in: 1000,
            seed: 5,
            ..Default::default()
        };
        let chain = sample_uip_continuous_with_variance(
            &st,
            &amount,
            &WeightMode::Fixed(w.clone()),
            VarianceModel::Fixed(1.0),
            &cfg,
        )
        .unwrap();

        let prior = uip_normal(20.0, &w, &st.evidence()).unwrap();
        let prior_var = prior.variance();
        let sigma2 = 1.0;
        let n = 40.0;
        let post_var = 1.0 / (1.0 / prior_var + n / sigma2);
        let post_mean = post_var * (prior.mean() / prior_var + n * 0.1 / sigma2);

        let s = chain.summary("theta", 0.95).unwrap();
        assert_abs_diff_eq!(s.mean, post_mean, epsilon = 3.0 * post_var.sqrt() / 100.0);
        assert_abs_diff_eq!(s.sd, post_var.sqrt(), epsilon = 0.05 * post_var.sqrt());
    }

    #[test]
    fn single_history_matches_power_prior_form() {
        // K = 1, fixed w = (1), fixed M: step (a) is the single-historical
        // normal update with prior N(theta_hat_1, mle_var / M).
        let st = studies(&[0.5], 50);
        let w = WeightVector::new(vec![1.0]).unwrap();
        let amount = AmountPrior::fixed(10.0).unwrap();
        let chain = sample_uip_continuous_with_variance(
            &st,
            &amount,
            &WeightMode::Fixed(w),
            VarianceModel::Fixed(1.0),
            &ChainConfig {
                iterations: 30_000,
                burn_in: 1000,
                seed: 9,
                ..Default::default()
            },
        )
        .unwrap();
        let hist_var = st.historical[0].mle_variance();
        let prior_var = hist_var / 10.0;
        let post_var = 1.0 / (1.0 / prior_var + 50.0);
        let post_mean = post_var * (0.5 / prior_var + 50.0 * 0.1);
        let s = chain.summary("theta", 0.95).unwrap();
        assert_abs_diff_eq!(s.mean, post_mean, epsilon = 0.01);
        assert_abs_diff_eq!(s.sd, post_var.sqrt(), epsilon = 0.005);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let st = studies(&[-0.3, 0.3], 40);
        let amount = AmountPrior::uniform(40.0).unwrap();
        let wmode = WeightMode::Dirichlet(vec![1.0, 1.0]);
        let a = sample_uip_continuous(&st, &amount, &wmode, &short(7)).unwrap();
        let b = sample_uip_continuous(&st, &amount, &wmode, &short(7)).unwrap();
        assert_eq!(a, b);
        let c = sample_uip_continuous(&st, &amount, &wmode, &short(8)).unwrap();
        assert_ne!(a.column("theta").unwrap(), c.column("theta").unwrap());
    }

    #[test]
    fn draws_respect_supports() {
        let st = studies(&[-0.3, 0.3], 40);
        let amount = AmountPrior::uniform(40.0).unwrap();
        let wmode = WeightMode::Dirichlet(vec![1.0, 1.0]);
        let chain = sample_uip_continuous(&st, &amount, &wmode, &short(3)).unwrap();
        for &s2 in chain.column("sigma2").unwrap() {
            assert!(s2 > 0.0);
        }
        for &m in chain.column("m").unwrap() {
            assert!((AMOUNT_FLOOR..=40.0).contains(&m));
        }
        let w1 = chain.column("w1").unwrap();
        let w2 = chain.column("w2").unwrap();
        for (&a, &b) in w1.iter().zip(w2) {
            assert!(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0);
            assert_abs_diff_eq!(a + b, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn adaptation_reaches_target_band_on_peaked_targets() {
        // A current mean far from both historical means makes the amount
        // density decay sharply, so the walk has to shrink its scale to hit
        // the acceptance target.
        let current = ContinuousSummary::new(200, 3.0, 1.0).unwrap();
        let hist = vec![
            ContinuousSummary::new(40, -0.3, 1.0).unwrap(),
            ContinuousSummary::new(40, 0.3, 1.0).unwrap(),
        ];
        let st = ContinuousStudies::new(current, hist, Vec::new()).unwrap();
        let amount = AmountPrior::uniform(40.0).unwrap();
        let wmode = WeightMode::Fixed(WeightVector::new(vec![0.5, 0.5]).unwrap());
        let cfg = ChainConfig {
            iterations: 20_000,
            burn_in: 10_000,
            seed: 2,
            ..Default::default()
        };
        let chain = sample_uip_continuous(&st, &amount, &wmode, &cfg).unwrap();
        let m_stat = &chain.accept[0];
        assert!(
            (m_stat.post_burn_in - 0.30).abs() < 0.12,
            "amount block acceptance {} far from 0.30",
            m_stat.post_burn_in
        );

        // A large fixed amount concentrates the weight density, exercising the
        // simplex walk's adaptation.
        let current = ContinuousSummary::new(200, -0.25, 1.0).unwrap();
        let hist = vec![
            ContinuousSummary::new(40, -0.3, 1.0).unwrap(),
            ContinuousSummary::new(40, 0.3, 1.0).unwrap(),
        ];
        let st = ContinuousStudies::new(current, hist, Vec::new()).unwrap();
        let amount = AmountPrior::fixed(150.0).unwrap();
        let wmode = WeightMode::Dirichlet(vec![1.0, 1.0]);
        let chain = sample_uip_continuous(&st, &amount, &wmode, &cfg).unwrap();
        let w_stat = &chain.accept[0];
        assert_eq!(w_stat.name, "w");
        assert!(
            (w_stat.post_burn_in - 0.25).abs() < 0.12,
            "weight block acceptance {} far from 0.25",
            w_stat.post_burn_in
        );
    }
}
