//! Prior effective sample size.
//!
//! Two notions: the conditional ESS at fixed hyper-parameters (closed form),
//! and the marginal ESS with the hyper-prior integrated out, found by
//! matching the marginal prior precision against the expected posterior
//! precision of a deliberately flattened prior updated with `m` idealized
//! observations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::float::Real;
use crate::mcmc::{AMOUNT_FLOOR, WeightMode};
use crate::prior::{uip_beta_from_rates, AmountPrior, ConditionalPrior, WeightVector};
use crate::summaries::{BinarySummary, NormalEvidence};

/// Variance inflation of the flattened reference prior.
pub const EPSILON_INFLATION: f64 = 1e4;

/// How an ESS value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EssMethod {
    Conditional,
    Marginal,
}

/// An effective-sample-size estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssResult {
    pub value: f64,
    pub method: EssMethod,
    /// Split-half discrepancy of the search, marginal method only.
    pub mc_error: Option<f64>,
}

/// Conditional ESS of the normal-scale prior:
/// `sigma2_current * M * sum_k w_k / sigma_hat_k^2`.
pub fn conditional_ess_continuous<R: Real>(
    amount: R,
    weights: &WeightVector<R>,
    sigma2_current: R,
    evidence: &[NormalEvidence<R>],
) -> R {
    let info: R = weights
        .iter()
        .zip(evidence)
        .map(|(&w, e)| w * e.unit_info())
        .sum();
    sigma2_current * amount * info
}

/// Conditional ESS of the binary prior: `alpha + beta` of the matched Beta,
/// evaluated through the product form.
pub fn conditional_ess_binary<R: Real>(
    amount: R,
    weights: &WeightVector<R>,
    historical: &[BinarySummary],
) -> Result<R> {
    let rates: Vec<R> = historical.iter().map(|b| b.corrected_rate()).collect();
    conditional_ess_binary_from_rates(amount, weights, &rates)
}

/// Same as [`conditional_ess_binary`] over precomputed corrected rates.
pub fn conditional_ess_binary_from_rates<R: Real>(
    amount: R,
    weights: &WeightVector<R>,
    rates: &[R],
) -> Result<R> {
    let mut mean = R::zero();
    let mut info = R::zero();
    for (&w, &p) in weights.iter().zip(rates) {
        mean += w * p;
        info += w / (p * (R::one() - p));
    }
    let ess = amount * mean * (R::one() - mean) * info - R::one();
    if !(ess > R::zero()) {
        return Err(Error::InvalidPriorMoments {
            var: (R::one() / (amount * info)).as_f64(),
            bound: (mean * (R::one() - mean)).as_f64(),
        });
    }
    Ok(ess)
}

/// Endpoint model for the marginal ESS.
#[derive(Debug, Clone)]
pub enum MarginalModel<'a> {
    /// Continuous endpoint: the per-observation variance of the idealized
    /// current data, and the historical evidence.
    Continuous {
        sigma2_current: f64,
        evidence: &'a [NormalEvidence<f64>],
    },
    /// Binary endpoint over boundary-corrected historical rates.
    Binary { rates: &'a [f64] },
}

/// Hyper-prior specification for the marginal ESS.
#[derive(Debug, Clone)]
pub struct HyperSpec {
    pub amount: AmountPrior<f64>,
    pub weights: WeightMode,
}

/// Marginal ESS by the flattened-prior matching procedure:
/// 1. draw hyper-parameters, accumulate the marginal prior mean and precision;
/// 2. per draw, flatten the conditional prior (variance times 1e4, same mean);
/// 3. for each `m` on the grid, average the posterior precision after `m`
///    idealized observations equal to the marginal prior mean;
/// 4. return the `m` whose averaged precision is closest to the marginal
///    prior precision.
pub fn marginal_ess(
    model: &MarginalModel<'_>,
    hyper: &HyperSpec,
    grid_max: usize,
    mc_draws: usize,
    seed: u64,
) -> Result<EssResult> {
    if grid_max < 1 {
        return Err(Error::Config("marginal ESS grid must be nonempty".into()));
    }
    if mc_draws < 1000 {
        return Err(Error::Config(format!(
            "marginal ESS needs >= 1000 hyper draws, got {mc_draws}"
        )));
    }
    let k = match model {
        MarginalModel::Continuous { evidence, .. } => evidence.len(),
        MarginalModel::Binary { rates } => rates.len(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = draw_hyper(&mut rng, hyper, k, mc_draws)?;

    let half = mc_draws / 2;
    let full = search(model, &draws, grid_max)?;
    let first = search(model, &draws[..half], grid_max)?;
    let second = search(model, &draws[half..], grid_max)?;

    Ok(EssResult {
        value: full as f64,
        method: EssMethod::Marginal,
        mc_error: Some(0.5 * (first as f64 - second as f64).abs()),
    })
}

struct HyperDraw {
    amount: f64,
    weights: Vec<f64>,
}

fn draw_hyper(
    rng: &mut ChaCha8Rng,
    hyper: &HyperSpec,
    k: usize,
    mc_draws: usize,
) -> Result<Vec<HyperDraw>> {
    let gamma_dists: Option<Vec<Gamma<f64>>> = match &hyper.weights {
        WeightMode::Dirichlet(gammas) => {
            if gammas.len() != k {
                return Err(Error::Config(format!(
                    "{} Dirichlet shapes for {k} historical studies",
                    gammas.len()
                )));
            }
            Some(
                gammas
                    .iter()
                    .map(|&g| Gamma::new(g, 1.0).map_err(|e| Error::Config(e.to_string())))
                    .collect::<Result<_>>()?,
            )
        }
        WeightMode::Fixed(w) => {
            if w.len() != k {
                return Err(Error::Config(format!(
                    "{} fixed weights for {k} historical studies",
                    w.len()
                )));
            }
            None
        }
    };
    let amount_dist = match hyper.amount {
        AmountPrior::Fixed(_) => None,
        AmountPrior::Uniform { upper } => {
            Some(Uniform::new(0.0, upper).map_err(|e| Error::Config(e.to_string()))?)
        }
    };

    let mut out = Vec::with_capacity(mc_draws);
    for _ in 0..mc_draws {
        let amount = match (&hyper.amount, &amount_dist) {
            (AmountPrior::Fixed(m), _) => (*m).max(AMOUNT_FLOOR),
            (AmountPrior::Uniform { .. }, Some(d)) => d.sample(rng).max(AMOUNT_FLOOR),
            _ => unreachable!(),
        };
        let weights = match (&hyper.weights, &gamma_dists) {
            (WeightMode::Fixed(w), _) => w.as_slice().to_vec(),
            (WeightMode::Dirichlet(_), Some(dists)) => {
                let raw: Vec<f64> = dists.iter().map(|d| d.sample(rng).max(1e-12)).collect();
                let sum: f64 = raw.iter().sum();
                raw.into_iter().map(|g| g / sum).collect()
            }
            _ => unreachable!(),
        };
        out.push(HyperDraw { amount, weights });
    }
    Ok(out)
}

/// Conditional moments per hyper draw.
fn conditional_moments(model: &MarginalModel<'_>, draw: &HyperDraw) -> Result<(f64, f64)> {
    match model {
        MarginalModel::Continuous { evidence, .. } => {
            let mut mean = 0.0;
            let mut info = 0.0;
            for (&w, e) in draw.weights.iter().zip(*evidence) {
                mean += w * e.estimate;
                info += w * e.unit_info();
            }
            Ok((mean, 1.0 / (draw.amount * info)))
        }
        MarginalModel::Binary { rates } => {
            let w = WeightVector::new(draw.weights.clone())?;
            match uip_beta_from_rates(draw.amount, &w, rates)? {
                ConditionalPrior::Beta { alpha, beta } => {
                    let total = alpha + beta;
                    let mean = alpha / total;
                    Ok((mean, mean * (1.0 - mean) / (total + 1.0)))
                }
                ConditionalPrior::Normal { .. } => unreachable!(),
            }
        }
    }
}

fn search(model: &MarginalModel<'_>, draws: &[HyperDraw], grid_max: usize) -> Result<usize> {
    let mut moments = Vec::with_capacity(draws.len());
    for d in draws {
        moments.push(conditional_moments(model, d)?);
    }
    let n = moments.len() as f64;
    let mean_bar = moments.iter().map(|(m, _)| m).sum::<f64>() / n;
    let var_of_mean = moments
        .iter()
        .map(|(m, _)| (m - mean_bar) * (m - mean_bar))
        .sum::<f64>()
        / n;
    let mean_var = moments.iter().map(|(_, v)| v).sum::<f64>() / n;
    // Marginal prior variance by the law of total variance.
    let target_precision = 1.0 / (mean_var + var_of_mean);

    let mut best = (f64::INFINITY, 0usize);
    for m in 0..=grid_max {
        let mf = m as f64;
        let precision = match model {
            MarginalModel::Continuous { sigma2_current, .. } => {
                moments
                    .iter()
                    .map(|(_, v)| 1.0 / (EPSILON_INFLATION * v) + mf / sigma2_current)
                    .sum::<f64>()
                    / n
            }
            MarginalModel::Binary { .. } => {
                moments
                    .iter()
                    .map(|(mean, v)| {
                        // Flattened Beta with the same mean: shapes scaled so the
                        // total count shrinks by the inflation factor.
                        let total = (mean * (1.0 - mean) / v - 1.0).max(1e-12) / EPSILON_INFLATION;
                        let a = mean * total + mf * mean_bar;
                        let b = (1.0 - mean) * total + mf * (1.0 - mean_bar);
                        let t = a + b;
                        let post_var = a * b / (t * t * (t + 1.0));
                        1.0 / post_var
                    })
                    .sum::<f64>()
                    / n
            }
        };
        let gap = (precision - target_precision).abs();
        if gap < best.0 {
            best = (gap, m);
        }
    }
    if best.1 == grid_max {
        return Err(Error::GridExhausted(grid_max));
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ev(estimate: f64, n: u64, variance: f64) -> NormalEvidence<f64> {
        NormalEvidence::new(estimate, n, variance).unwrap()
    }

    #[test]
    fn equal_variances_give_exactly_m() {
        let w = WeightVector::new(vec![0.3, 0.7]).unwrap();
        let e = [ev(0.1, 80, 1.7), ev(-0.2, 120, 1.7)];
        let ess = conditional_ess_continuous(42.0, &w, 1.7, &e);
        assert_abs_diff_eq!(ess, 42.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            conditional_ess_continuous(0.0, &w, 1.7, &e),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn continuous_example_value() {
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let e = [ev(0.0, 100, 1.0), ev(0.0, 100, 4.0)];
        let ess = conditional_ess_continuous(100.0, &w, 1.0, &e);
        assert_abs_diff_eq!(ess, 62.5, epsilon = 1e-12);
    }

    #[test]
    fn equal_rates_give_m_minus_one() {
        let w = WeightVector::new(vec![0.25, 0.75]).unwrap();
        let ess = conditional_ess_binary_from_rates(30.0, &w, &[0.4, 0.4]).unwrap();
        assert_abs_diff_eq!(ess, 29.0, epsilon = 1e-12);
    }

    #[test]
    fn binary_product_form_value() {
        // The spec's worked example resolves through the alpha+beta oracle:
        // mu = 0.5, info = 1/0.24, M = 100 gives 100/4 * (1/0.24) * ... - 1.
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let ess = conditional_ess_binary_from_rates(100.0, &w, &[0.4, 0.6]).unwrap();
        let info = 0.5 / 0.24 + 0.5 / 0.24;
        assert_abs_diff_eq!(ess, 100.0 * 0.25 * info - 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ess, 103.166_666_666_67, epsilon = 1e-9);
    }

    #[test]
    fn binary_single_study_matches_beta_total() {
        let w = WeightVector::new(vec![1.0]).unwrap();
        let ess = conditional_ess_binary_from_rates(10.0, &w, &[0.5]).unwrap();
        assert_abs_diff_eq!(ess, 9.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_hyper_marginal_matches_conditional() {
        // Fixed amount and weights with equal variances: the marginal search
        // lands on the conditional ESS within grid resolution.
        let e = [ev(0.2, 80, 1.0), ev(-0.1, 120, 1.0)];
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let hyper = HyperSpec {
            amount: AmountPrior::fixed(60.0).unwrap(),
            weights: WeightMode::Fixed(w.clone()),
        };
        let model = MarginalModel::Continuous { sigma2_current: 1.0, evidence: &e };
        let result = marginal_ess(&model, &hyper, 300, 1000, 4).unwrap();
        let conditional = conditional_ess_continuous(60.0, &w, 1.0, &e);
        assert!((result.value - conditional).abs() <= 1.0);
        assert_eq!(result.mc_error, Some(0.0));
    }

    #[test]
    fn binary_degenerate_hyper_matches_alpha_beta_total() {
        let rates = [0.45, 0.55];
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let hyper = HyperSpec {
            amount: AmountPrior::fixed(50.0).unwrap(),
            weights: WeightMode::Fixed(w.clone()),
        };
        let model = MarginalModel::Binary { rates: &rates };
        let result = marginal_ess(&model, &hyper, 300, 1000, 4).unwrap();
        let conditional = conditional_ess_binary_from_rates(50.0, &w, &rates).unwrap();
        assert!(
            (result.value - conditional).abs() <= 1.5,
            "marginal {} vs conditional {conditional}",
            result.value
        );
    }

    #[test]
    fn weight_uncertainty_lowers_the_marginal_ess() {
        let e = [ev(0.4, 80, 1.0), ev(-0.4, 120, 1.0)];
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let fixed = HyperSpec {
            amount: AmountPrior::fixed(80.0).unwrap(),
            weights: WeightMode::Fixed(w.clone()),
        };
        let dirichlet = HyperSpec {
            amount: AmountPrior::fixed(80.0).unwrap(),
            weights: WeightMode::Dirichlet(vec![1.0, 1.0]),
        };
        let model = MarginalModel::Continuous { sigma2_current: 1.0, evidence: &e };
        let tight = marginal_ess(&model, &fixed, 400, 2000, 9).unwrap();
        let loose = marginal_ess(&model, &dirichlet, 400, 2000, 9).unwrap();
        assert!(
            loose.value < tight.value,
            "hyper spread must cost information: {} vs {}",
            loose.value,
            tight.value
        );
    }

    #[test]
    fn grid_exhaustion_is_reported() {
        let e = [ev(0.0, 100, 1.0)];
        let w = WeightVector::new(vec![1.0]).unwrap();
        let hyper = HyperSpec {
            amount: AmountPrior::fixed(500.0).unwrap(),
            weights: WeightMode::Fixed(w),
        };
        let model = MarginalModel::Continuous { sigma2_current: 1.0, evidence: &e };
        let err = marginal_ess(&model, &hyper, 50, 1000, 1).unwrap_err();
        assert_eq!(err, Error::GridExhausted(50));
    }

    #[test]
    fn deterministic_given_seed() {
        let e = [ev(0.3, 80, 1.0), ev(-0.3, 120, 1.2)];
        let hyper = HyperSpec {
            amount: AmountPrior::uniform(100.0).unwrap(),
            weights: WeightMode::Dirichlet(vec![0.8, 1.0]),
        };
        let model = MarginalModel::Continuous { sigma2_current: 1.0, evidence: &e };
        let a = marginal_ess(&model, &hyper, 300, 1500, 7).unwrap();
        let b = marginal_ess(&model, &hyper, 300, 1500, 7).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn continuous_ess_linear_and_scale_free(
            m in 0.1f64..200.0,
            c in 0.1f64..10.0,
            v1 in 0.2f64..5.0,
            v2 in 0.2f64..5.0,
            s2 in 0.2f64..5.0,
            wa in 0.05f64..0.95,
        ) {
            let w = WeightVector::new(vec![wa, 1.0 - wa]).unwrap();
            let e = [ev(0.0, 50, v1), ev(0.0, 70, v2)];
            let base = conditional_ess_continuous(m, &w, s2, &e);
            let doubled = conditional_ess_continuous(2.0 * m, &w, s2, &e);
            prop_assert!((doubled - 2.0 * base).abs() < 1e-9 * base.max(1.0));

            let scaled_e = [ev(0.0, 50, c * v1), ev(0.0, 70, c * v2)];
            let scaled = conditional_ess_continuous(m, &w, c * s2, &scaled_e);
            prop_assert!((scaled - base).abs() < 1e-9 * base.max(1.0));
        }

        #[test]
        fn binary_ess_equals_beta_total(
            m in 3.0f64..500.0,
            p1 in 0.05f64..0.95,
            p2 in 0.05f64..0.95,
            wa in 0.05f64..0.95,
        ) {
            let w = WeightVector::new(vec![wa, 1.0 - wa]).unwrap();
            let rates = [p1, p2];
            match (
                conditional_ess_binary_from_rates(m, &w, &rates),
                uip_beta_from_rates(m, &w, &rates),
            ) {
                (Ok(ess), Ok(ConditionalPrior::Beta { alpha, beta })) => {
                    prop_assert!((ess - (alpha + beta)).abs() < 1e-9);
                }
                (Err(_), Err(_)) => {}
                (ess, prior) => {
                    prop_assert!(false, "mismatch: {ess:?} vs {prior:?}");
                }
            }
        }
    }
}
