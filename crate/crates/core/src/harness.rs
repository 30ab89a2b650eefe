//! Simulation harness: operating characteristics of the borrowing methods
//! over replicated synthetic trials.
//!
//! Replications are the parallel unit. Every replication derives its own RNG
//! seed from the master seed, so results are identical regardless of thread
//! scheduling, and aggregation walks replications in index order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal as NormalDist, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::Method;
use crate::compare::{sample_compare_binary, sample_compare_continuous, CompareHyper};
use crate::divergence::{distances_binary, distances_normal, js_weights};
use crate::error::{Error, Result};
use crate::ess::{self, HyperSpec, MarginalModel};
use crate::mcmc::{
    derive_seed, quantile_sorted, sample_uip_binary, sample_uip_continuous, two_sided_tail, Chain,
    ChainConfig, WeightMode,
};
use crate::prior::{dirichlet_gammas, AmountPrior};
use crate::summaries::{
    BinaryStudies, BinarySummary, ContinuousStudies, ContinuousSummary, NormalEvidence,
};

/// Endpoint of a simulated trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndpointSpec {
    /// Outcomes `N(theta, sd^2)`; the sweep sets `theta`.
    Continuous { sd: f64 },
    /// Bernoulli outcomes; the sweep sets the rate.
    Binary,
}

/// One historical dataset generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoricalGenerator {
    /// Mean (continuous) or rate (binary).
    pub location: f64,
    /// Outcome standard deviation; ignored for binary endpoints.
    pub sd: f64,
    pub n: u64,
}

/// How historical datasets arise in each replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HistoricalSpec {
    /// Fresh data drawn from fixed generators every replication.
    Fixed(Vec<HistoricalGenerator>),
    /// Summary parameters drawn uniformly from ranges every replication.
    RandomContinuous {
        mean_range: (f64, f64),
        sd_range: (f64, f64),
        sizes: Vec<u64>,
    },
    RandomBinary {
        rate_range: (f64, f64),
        sizes: Vec<u64>,
    },
}

impl HistoricalSpec {
    pub fn len(&self) -> usize {
        match self {
            Self::Fixed(g) => g.len(),
            Self::RandomContinuous { sizes, .. } | Self::RandomBinary { sizes, .. } => sizes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sizes(&self) -> Vec<u64> {
        match self {
            Self::Fixed(g) => g.iter().map(|g| g.n).collect(),
            Self::RandomContinuous { sizes, .. } | Self::RandomBinary { sizes, .. } => {
                sizes.clone()
            }
        }
    }
}

/// A full simulation design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub endpoint: EndpointSpec,
    pub current_n: u64,
    pub historical: HistoricalSpec,
    /// Current-trial mean (or rate) per grid point.
    pub sweep: Vec<f64>,
    pub methods: Vec<Method>,
    pub replications: usize,
    pub master_seed: u64,
    pub amount: AmountPrior<f64>,
    pub chain: ChainConfig,
    pub hyper: CompareHyper,
    pub level: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.sweep.is_empty() {
            return Err(Error::Config("sweep grid must be nonempty".into()));
        }
        if self.historical.is_empty() {
            return Err(Error::Config("need at least one historical generator".into()));
        }
        if self.current_n < 2 {
            return Err(Error::Config("current sample size must be >= 2".into()));
        }
        match self.endpoint {
            EndpointSpec::Binary => {
                for g in &self.sweep {
                    if !(*g > 0.0 && *g < 1.0) {
                        return Err(Error::Config(format!("rate {g} outside (0, 1)")));
                    }
                }
            }
            EndpointSpec::Continuous { sd } => {
                if !(sd > 0.0) {
                    return Err(Error::Config("outcome sd must be positive".into()));
                }
            }
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::BadLevel(self.level));
        }
        self.chain.validate()?;
        self.hyper.validate()
    }
}

/// One aggregated cell of a scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub grid_value: f64,
    pub method: String,
    pub metric: String,
    pub mean: f64,
    pub lo95: f64,
    pub hi95: f64,
    pub n_reps: usize,
}

/// Aggregated operating characteristics, one row per grid x method x metric.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub rows: Vec<MetricRow>,
}

impl ScenarioResult {
    pub fn row(&self, grid_value: f64, method: &str, metric: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| {
            (r.grid_value - grid_value).abs() < 1e-9 && r.method == method && r.metric == metric
        })
    }

    /// Means over the grid for one method and metric, in grid order.
    pub fn series(&self, method: &str, metric: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.metric == metric)
            .map(|r| (r.grid_value, r.mean))
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "grid_value,method,metric,mean,lo95,hi95,n_reps")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.grid_value, r.method, r.metric, r.mean, r.lo95, r.hi95, r.n_reps
            )?;
        }
        Ok(())
    }
}

/// Mean with empirical 2.5/97.5 percentile bands across replications.
fn aggregate(grid_value: f64, method: &str, metric: &str, values: &[f64]) -> MetricRow {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("metric values must not be NaN"));
    MetricRow {
        grid_value,
        method: method.to_string(),
        metric: metric.to_string(),
        mean,
        lo95: quantile_sorted(&sorted, 0.025),
        hi95: quantile_sorted(&sorted, 0.975),
        n_reps: n,
    }
}

/// Simulated datasets of one replication.
enum RepData {
    Continuous(ContinuousStudies<f64>),
    Binary(BinaryStudies),
}

impl RepData {
    fn gammas(&self) -> Vec<f64> {
        match self {
            RepData::Continuous(s) => dirichlet_gammas(
                s.current.n(),
                &s.historical.iter().map(|h| h.n()).collect::<Vec<_>>(),
            ),
            RepData::Binary(s) => dirichlet_gammas(
                s.current.n(),
                &s.historical.iter().map(|h| h.n()).collect::<Vec<_>>(),
            ),
        }
    }

    fn elicited_weights(&self) -> Result<Vec<f64>> {
        let w = match self {
            RepData::Continuous(s) => js_weights(&distances_normal(
                &NormalEvidence::from_continuous(&s.current),
                &s.evidence(),
            )?)?,
            RepData::Binary(s) => js_weights(&distances_binary(&s.current, &s.historical)?)?,
        };
        Ok(w.as_slice().to_vec())
    }
}

fn simulate_rep(scenario: &Scenario, grid_value: f64, seed: u64) -> Result<RepData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match scenario.endpoint {
        EndpointSpec::Continuous { sd } => {
            let current = draw_continuous(&mut rng, scenario.current_n, grid_value, sd)?;
            let historical = match &scenario.historical {
                HistoricalSpec::Fixed(gens) => gens
                    .iter()
                    .map(|g| draw_continuous(&mut rng, g.n, g.location, g.sd))
                    .collect::<Result<Vec<_>>>()?,
                HistoricalSpec::RandomContinuous { mean_range, sd_range, sizes } => {
                    let mean_d = Uniform::new_inclusive(mean_range.0, mean_range.1)
                        .map_err(|e| Error::Config(e.to_string()))?;
                    let sd_d = Uniform::new_inclusive(sd_range.0, sd_range.1)
                        .map_err(|e| Error::Config(e.to_string()))?;
                    sizes
                        .iter()
                        .map(|&n| {
                            ContinuousSummary::new(
                                n,
                                mean_d.sample(&mut rng),
                                sd_d.sample(&mut rng),
                            )
                        })
                        .collect::<Result<Vec<_>>>()?
                }
                HistoricalSpec::RandomBinary { .. } => {
                    return Err(Error::Config(
                        "binary historical spec with a continuous endpoint".into(),
                    ))
                }
            };
            Ok(RepData::Continuous(ContinuousStudies::new(
                current,
                historical,
                Vec::new(),
            )?))
        }
        EndpointSpec::Binary => {
            let current = draw_binary(&mut rng, scenario.current_n, grid_value)?;
            let historical = match &scenario.historical {
                HistoricalSpec::Fixed(gens) => gens
                    .iter()
                    .map(|g| draw_binary(&mut rng, g.n, g.location))
                    .collect::<Result<Vec<_>>>()?,
                HistoricalSpec::RandomBinary { rate_range, sizes } => {
                    let rate_d = Uniform::new_inclusive(rate_range.0, rate_range.1)
                        .map_err(|e| Error::Config(e.to_string()))?;
                    sizes
                        .iter()
                        .map(|&n| {
                            let rate: f64 = rate_d.sample(&mut rng);
                            let successes = (rate * n as f64).round() as u64;
                            BinarySummary::new(n, successes.min(n))
                        })
                        .collect::<Result<Vec<_>>>()?
                }
                HistoricalSpec::RandomContinuous { .. } => {
                    return Err(Error::Config(
                        "continuous historical spec with a binary endpoint".into(),
                    ))
                }
            };
            Ok(RepData::Binary(BinaryStudies::new(
                current,
                historical,
                Vec::new(),
            )?))
        }
    }
}

fn draw_continuous(
    rng: &mut ChaCha8Rng,
    n: u64,
    mean: f64,
    sd: f64,
) -> Result<ContinuousSummary<f64>> {
    let dist = NormalDist::new(mean, sd).map_err(|e| Error::Config(e.to_string()))?;
    let samples: Vec<f64> = (0..n).map(|_| dist.sample(rng)).collect();
    ContinuousSummary::from_samples(&samples)
}

fn draw_binary(rng: &mut ChaCha8Rng, n: u64, rate: f64) -> Result<BinarySummary> {
    let dist = Binomial::new(n, rate).map_err(|e| Error::Config(e.to_string()))?;
    BinarySummary::new(n, dist.sample(rng))
}

/// Runs one method's sampler on one replication's data.
fn run_chain(scenario: &Scenario, data: &RepData, method: Method, seed: u64) -> Result<Chain> {
    let cfg = ChainConfig { seed, ..scenario.chain };
    match data {
        RepData::Continuous(studies) => match method {
            Method::UipDirichlet => sample_uip_continuous(
                studies,
                &scenario.amount,
                &WeightMode::Dirichlet(data.gammas()),
                &cfg,
            ),
            Method::UipJs => {
                let report = distances_normal(
                    &NormalEvidence::from_continuous(&studies.current),
                    &studies.evidence(),
                )?;
                let weights = js_weights(&report)?;
                sample_uip_continuous(studies, &scenario.amount, &WeightMode::Fixed(weights), &cfg)
            }
            other => sample_compare_continuous(
                studies,
                other.as_compare().expect("non-UIP method"),
                &scenario.hyper,
                &cfg,
            ),
        },
        RepData::Binary(studies) => match method {
            Method::UipDirichlet => sample_uip_binary(
                studies,
                &scenario.amount,
                &WeightMode::Dirichlet(data.gammas()),
                &cfg,
            ),
            Method::UipJs => {
                let report = distances_binary(&studies.current, &studies.historical)?;
                let weights = js_weights(&report)?;
                sample_uip_binary(studies, &scenario.amount, &WeightMode::Fixed(weights), &cfg)
            }
            other => sample_compare_binary(
                studies,
                other.as_compare().expect("non-UIP method"),
                &scenario.hyper,
                &cfg,
            ),
        },
    }
}

fn rep_seed(scenario: &Scenario, grid_idx: usize, rep: usize) -> u64 {
    derive_seed(
        derive_seed(scenario.master_seed, grid_idx as u64),
        rep as u64,
    )
}

fn chain_seed(data_seed: u64, method_idx: usize) -> u64 {
    derive_seed(data_seed, 0x1000 + method_idx as u64)
}

/// Hyper-parameter adaptation study: posterior means of the amount, the
/// weights and the absolute weights per grid point. UIP methods only.
pub fn run_trend(scenario: &Scenario) -> Result<ScenarioResult> {
    scenario.validate()?;
    for m in &scenario.methods {
        if !matches!(m, Method::UipDirichlet | Method::UipJs) {
            return Err(Error::Config(format!(
                "trend studies track unit-information hyper-parameters; `{}` has none",
                m.name()
            )));
        }
    }
    let k = scenario.historical.len();
    let mut result = ScenarioResult::default();

    for (gi, &grid) in scenario.sweep.iter().enumerate() {
        // Per replication x method: posterior means of m, then (w, m*w) per
        // historical study. Fixed-weight methods take the elicited weights.
        let reps: Vec<Vec<Vec<f64>>> = (0..scenario.replications)
            .into_par_iter()
            .map(|rep| -> Result<Vec<Vec<f64>>> {
                let seed = rep_seed(scenario, gi, rep);
                let data = simulate_rep(scenario, grid, seed)?;
                let mut per_method = Vec::with_capacity(scenario.methods.len());
                for (mi, &method) in scenario.methods.iter().enumerate() {
                    let chain = run_chain(scenario, &data, method, chain_seed(seed, mi))?;
                    let n = chain.len() as f64;
                    let m_draws = chain.column("m");
                    let m_mean = m_draws.map_or(f64::NAN, |c| c.iter().sum::<f64>() / n);
                    let fixed = match method {
                        Method::UipJs => Some(data.elicited_weights()?),
                        _ => None,
                    };
                    let mut values = vec![m_mean];
                    for wk in 1..=k {
                        match chain.column(&format!("w{wk}")) {
                            Some(w) => {
                                values.push(w.iter().sum::<f64>() / n);
                                let mw = m_draws.map_or(f64::NAN, |m| {
                                    m.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / n
                                });
                                values.push(mw);
                            }
                            None => {
                                let w = fixed.as_ref().map_or(f64::NAN, |f| f[wk - 1]);
                                values.push(w);
                                values.push(m_mean * w);
                            }
                        }
                    }
                    per_method.push(values);
                }
                Ok(per_method)
            })
            .collect::<Result<_>>()?;

        for (mi, &method) in scenario.methods.iter().enumerate() {
            let mut names = vec!["m".to_string()];
            for wk in 1..=k {
                names.push(format!("w{wk}"));
                names.push(format!("mw{wk}"));
            }
            for (idx, name) in names.iter().enumerate() {
                let values: Vec<f64> = reps.iter().map(|r| r[mi][idx]).collect();
                result.rows.push(aggregate(grid, method.name(), name, &values));
            }
        }
    }
    Ok(result)
}

/// Point-estimation study: absolute bias, posterior variance and posterior
/// mean-squared error per grid point and method. The grid value is the true
/// parameter.
pub fn run_estimation(scenario: &Scenario) -> Result<ScenarioResult> {
    scenario.validate()?;
    let mut result = ScenarioResult::default();
    for (gi, &grid) in scenario.sweep.iter().enumerate() {
        let reps: Vec<Vec<(f64, f64)>> = (0..scenario.replications)
            .into_par_iter()
            .map(|rep| -> Result<Vec<(f64, f64)>> {
                let seed = rep_seed(scenario, gi, rep);
                let data = simulate_rep(scenario, grid, seed)?;
                scenario
                    .methods
                    .iter()
                    .enumerate()
                    .map(|(mi, &method)| {
                        let chain = run_chain(scenario, &data, method, chain_seed(seed, mi))?;
                        let s = chain.summary("theta", scenario.level)?;
                        Ok((s.mean, s.sd * s.sd))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;

        for (mi, &method) in scenario.methods.iter().enumerate() {
            let biases: Vec<f64> = reps.iter().map(|r| r[mi].0 - grid).collect();
            let variances: Vec<f64> = reps.iter().map(|r| r[mi].1).collect();
            let mses: Vec<f64> = reps
                .iter()
                .map(|r| r[mi].1 + (r[mi].0 - grid) * (r[mi].0 - grid))
                .collect();

            // Absolute bias of the replication-averaged posterior bias, with
            // a normal-theory band.
            let n = biases.len() as f64;
            let mean_bias = biases.iter().sum::<f64>() / n;
            let se = (biases
                .iter()
                .map(|b| (b - mean_bias) * (b - mean_bias))
                .sum::<f64>()
                / (n - 1.0).max(1.0))
            .sqrt()
                / n.sqrt();
            result.rows.push(MetricRow {
                grid_value: grid,
                method: method.name().to_string(),
                metric: "abs_bias".to_string(),
                mean: mean_bias.abs(),
                lo95: (mean_bias.abs() - 1.96 * se).max(0.0),
                hi95: mean_bias.abs() + 1.96 * se,
                n_reps: biases.len(),
            });
            result.rows.push(aggregate(grid, method.name(), "bias", &biases));
            result
                .rows
                .push(aggregate(grid, method.name(), "variance", &variances));
            result.rows.push(aggregate(grid, method.name(), "mse", &mses));
        }
    }
    Ok(result)
}

/// Null-hypothesis location for a testing study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NullSpec {
    /// Test `H0: theta = grid value` at each grid point (size curves).
    TrackGrid,
    /// Test a fixed null across the sweep (power curves).
    Fixed(f64),
}

/// Rejection data of a testing study; tails are kept for calibration reuse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRun {
    pub result: ScenarioResult,
    /// `tails[grid][method][rep]`: two-sided tail mass of the null value.
    pub tails: Vec<Vec<Vec<f64>>>,
}

/// Interval-based testing study: per grid point and method, the rejection
/// rate of the equal-tailed credible interval. `levels` overrides the
/// scenario level per method (calibrated runs).
pub fn run_test(scenario: &Scenario, null: NullSpec, levels: Option<&[f64]>) -> Result<TestRun> {
    scenario.validate()?;
    if let Some(levels) = levels {
        if levels.len() != scenario.methods.len() {
            return Err(Error::Config(format!(
                "{} calibrated levels for {} methods",
                levels.len(),
                scenario.methods.len()
            )));
        }
    }
    let mut result = ScenarioResult::default();
    let mut all_tails = Vec::with_capacity(scenario.sweep.len());

    for (gi, &grid) in scenario.sweep.iter().enumerate() {
        let theta0 = match null {
            NullSpec::TrackGrid => grid,
            NullSpec::Fixed(v) => v,
        };
        let reps: Vec<Vec<f64>> = (0..scenario.replications)
            .into_par_iter()
            .map(|rep| -> Result<Vec<f64>> {
                let seed = rep_seed(scenario, gi, rep);
                let data = simulate_rep(scenario, grid, seed)?;
                scenario
                    .methods
                    .iter()
                    .enumerate()
                    .map(|(mi, &method)| {
                        let chain = run_chain(scenario, &data, method, chain_seed(seed, mi))?;
                        let mut draws = chain
                            .column("theta")
                            .expect("single-arm chains expose theta")
                            .to_vec();
                        draws.sort_by(|a, b| a.partial_cmp(b).expect("no NaN draws"));
                        Ok(two_sided_tail(&draws, theta0))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;

        let mut grid_tails = Vec::with_capacity(scenario.methods.len());
        for (mi, &method) in scenario.methods.iter().enumerate() {
            let tails: Vec<f64> = reps.iter().map(|r| r[mi]).collect();
            let level = levels.map_or(scenario.level, |l| l[mi]);
            let rate = tails.iter().filter(|t| **t < 1.0 - level).count() as f64
                / tails.len() as f64;
            let se = (rate * (1.0 - rate) / tails.len() as f64).sqrt();
            result.rows.push(MetricRow {
                grid_value: grid,
                method: method.name().to_string(),
                metric: "reject_rate".to_string(),
                mean: rate,
                lo95: (rate - 1.96 * se).max(0.0),
                hi95: (rate + 1.96 * se).min(1.0),
                n_reps: tails.len(),
            });
            grid_tails.push(tails);
        }
        all_tails.push(grid_tails);
    }
    Ok(TestRun { result, tails: all_tails })
}

/// Calibrated credible-interval level for one method: the widest interval
/// whose empirical rejection rate stays at or below the target, found by
/// bisecting over the stored tail masses. No re-sampling.
pub fn calibrate_one(tails: &[f64], target_size: f64) -> Result<f64> {
    if !(target_size > 0.0 && target_size < 1.0) {
        return Err(Error::BadLevel(target_size));
    }
    let n = tails.len() as f64;
    let size_at = |threshold: f64| tails.iter().filter(|t| **t < threshold).count() as f64 / n;
    // threshold = 1 - level; the size is nondecreasing in the threshold.
    let floor = size_at(f64::MIN_POSITIVE);
    if floor > target_size {
        return Err(Error::Uncalibratable { target: target_size, floor });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if size_at(mid) <= target_size {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(1.0 - lo)
}

/// Calibration outcome per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub method: Method,
    /// `None` when even the widest interval rejects too often.
    pub adjusted_level: Option<f64>,
    /// Rejection rate of the widest representable interval.
    pub floor: f64,
}

/// Simulates under `theta = theta0` and calibrates each method's interval
/// level so its empirical size matches the target.
pub fn calibrate_size(
    scenario: &Scenario,
    theta0: f64,
    target_size: f64,
) -> Result<Vec<Calibration>> {
    let mut null_scenario = scenario.clone();
    null_scenario.sweep = vec![theta0];
    let run = run_test(&null_scenario, NullSpec::Fixed(theta0), None)?;
    let mut out = Vec::with_capacity(scenario.methods.len());
    for (mi, &method) in scenario.methods.iter().enumerate() {
        let tails = &run.tails[0][mi];
        let floor =
            tails.iter().filter(|t| **t < f64::MIN_POSITIVE).count() as f64 / tails.len() as f64;
        match calibrate_one(tails, target_size) {
            Ok(level) => out.push(Calibration { method, adjusted_level: Some(level), floor }),
            Err(Error::Uncalibratable { floor, .. }) => {
                out.push(Calibration { method, adjusted_level: None, floor })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Effective-sample-size study: conditional ESS (divergence-elicited weights)
/// and marginal ESS (Dirichlet hyper-prior) per amount value, averaged over
/// replications of the historical parameters.
pub fn run_ess_study(
    scenario: &Scenario,
    amount_grid: &[f64],
    mc_draws: usize,
) -> Result<ScenarioResult> {
    scenario.validate()?;
    if amount_grid.is_empty() {
        return Err(Error::Config("amount grid must be nonempty".into()));
    }
    let grid_max = amount_grid.iter().fold(0.0f64, |a, &b| a.max(b)) as usize * 3 + 50;
    let current_level = scenario.sweep[0];

    let reps: Vec<Vec<(f64, f64)>> = (0..scenario.replications)
        .into_par_iter()
        .map(|rep| -> Result<Vec<(f64, f64)>> {
            let seed = rep_seed(scenario, 0, rep);
            let data = simulate_rep(scenario, current_level, seed)?;
            let gammas = data.gammas();
            let weights = crate::prior::WeightVector::new(data.elicited_weights()?)?;
            let mut out = Vec::with_capacity(amount_grid.len());
            for (ai, &amount) in amount_grid.iter().enumerate() {
                let ess_seed = derive_seed(seed, 0xA0 + ai as u64);
                let pair = match &data {
                    RepData::Continuous(s) => {
                        let evidence = s.evidence();
                        let conditional = ess::conditional_ess_continuous(
                            amount,
                            &weights,
                            s.current.mle_variance(),
                            &evidence,
                        );
                        let marginal = ess::marginal_ess(
                            &MarginalModel::Continuous {
                                sigma2_current: s.current.mle_variance(),
                                evidence: &evidence,
                            },
                            &HyperSpec {
                                amount: AmountPrior::Fixed(amount),
                                weights: WeightMode::Dirichlet(gammas.clone()),
                            },
                            grid_max,
                            mc_draws,
                            ess_seed,
                        )?;
                        (conditional, marginal.value)
                    }
                    RepData::Binary(s) => {
                        let rates: Vec<f64> = s.corrected_rates();
                        let conditional =
                            ess::conditional_ess_binary_from_rates(amount, &weights, &rates)?;
                        let marginal = ess::marginal_ess(
                            &MarginalModel::Binary { rates: &rates },
                            &HyperSpec {
                                amount: AmountPrior::Fixed(amount),
                                weights: WeightMode::Dirichlet(gammas.clone()),
                            },
                            grid_max,
                            mc_draws,
                            ess_seed,
                        )?;
                        (conditional, marginal.value)
                    }
                };
                out.push(pair);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut result = ScenarioResult::default();
    for (ai, &amount) in amount_grid.iter().enumerate() {
        let conditional: Vec<f64> = reps.iter().map(|r| r[ai].0).collect();
        let marginal: Vec<f64> = reps.iter().map(|r| r[ai].1).collect();
        result
            .rows
            .push(aggregate(amount, "uip-js", "conditional_ess", &conditional));
        result
            .rows
            .push(aggregate(amount, "uip-dirichlet", "marginal_ess", &marginal));
    }
    Ok(result)
}

/// Canned designs for the library's reference simulation studies.
pub mod presets {
    use super::*;

    fn base_chain(seed: u64) -> ChainConfig {
        ChainConfig { seed, ..Default::default() }
    }

    /// ESS against the amount parameter, continuous endpoint: three
    /// historical studies of sizes (80, 100, 120) with means on [-0.5, 0.5]
    /// and SDs on [0.9, 1.1]; current study of 100 at 0 with unit SD.
    pub fn continuous_ess_study(replications: usize, seed: u64) -> Scenario {
        Scenario {
            endpoint: EndpointSpec::Continuous { sd: 1.0 },
            current_n: 100,
            historical: HistoricalSpec::RandomContinuous {
                mean_range: (-0.5, 0.5),
                sd_range: (0.9, 1.1),
                sizes: vec![80, 100, 120],
            },
            sweep: vec![0.0],
            methods: vec![Method::UipJs, Method::UipDirichlet],
            replications,
            master_seed: seed,
            amount: AmountPrior::Uniform { upper: 300.0 },
            chain: base_chain(seed),
            hyper: CompareHyper::default(),
            level: 0.95,
        }
    }

    /// Binary twin of [`continuous_ess_study`]: historical rates on
    /// [0.4, 0.6], current rate 0.5.
    pub fn binary_ess_study(replications: usize, seed: u64) -> Scenario {
        Scenario {
            endpoint: EndpointSpec::Binary,
            current_n: 100,
            historical: HistoricalSpec::RandomBinary {
                rate_range: (0.4, 0.6),
                sizes: vec![80, 100, 120],
            },
            sweep: vec![0.5],
            ..continuous_ess_study(replications, seed)
        }
    }

    /// Default amount grid of the ESS studies: 50 to 150 in steps of 10.
    pub fn ess_amount_grid() -> Vec<f64> {
        (0..=10).map(|i| 50.0 + 10.0 * i as f64).collect()
    }

    /// Amount-adaptation trend, continuous endpoint: two historical studies
    /// at -0.3 and 0.3 (n = 40 each), current mean swept from 0.3 to 0.9.
    pub fn continuous_amount_trend(replications: usize, seed: u64) -> Scenario {
        Scenario {
            endpoint: EndpointSpec::Continuous { sd: 1.0 },
            current_n: 40,
            historical: HistoricalSpec::Fixed(vec![
                HistoricalGenerator { location: -0.3, sd: 1.0, n: 40 },
                HistoricalGenerator { location: 0.3, sd: 1.0, n: 40 },
            ]),
            sweep: (0..=6).map(|i| 0.3 + 0.1 * i as f64).collect(),
            methods: vec![Method::UipDirichlet, Method::UipJs],
            replications,
            master_seed: seed,
            amount: AmountPrior::Uniform { upper: 40.0 },
            chain: base_chain(seed),
            hyper: CompareHyper::default(),
            level: 0.95,
        }
    }

    /// Weight-adaptation trend, continuous endpoint: current mean swept
    /// between the two historical means, from -0.3 to 0.3.
    pub fn continuous_weight_trend(replications: usize, seed: u64) -> Scenario {
        Scenario {
            sweep: (0..=6).map(|i| -0.3 + 0.1 * i as f64).collect(),
            ..continuous_amount_trend(replications, seed)
        }
    }

    /// Binary amount trend: historical rates 0.2 and 0.4, current rate swept
    /// from 0.4 to 0.7, all sizes 40.
    pub fn binary_amount_trend(replications: usize, seed: u64) -> Scenario {
        Scenario {
            endpoint: EndpointSpec::Binary,
            current_n: 40,
            historical: HistoricalSpec::Fixed(vec![
                HistoricalGenerator { location: 0.2, sd: 0.0, n: 40 },
                HistoricalGenerator { location: 0.4, sd: 0.0, n: 40 },
            ]),
            sweep: (0..=6).map(|i| 0.4 + 0.05 * i as f64).collect(),
            methods: vec![Method::UipDirichlet, Method::UipJs],
            replications,
            master_seed: seed,
            amount: AmountPrior::Uniform { upper: 40.0 },
            chain: base_chain(seed),
            hyper: CompareHyper::default(),
            level: 0.95,
        }
    }

    /// Binary weight trend: historical rates 0.2 and 0.8, current rate swept
    /// from 0.2 to 0.8.
    pub fn binary_weight_trend(replications: usize, seed: u64) -> Scenario {
        Scenario {
            historical: HistoricalSpec::Fixed(vec![
                HistoricalGenerator { location: 0.2, sd: 0.0, n: 40 },
                HistoricalGenerator { location: 0.8, sd: 0.0, n: 40 },
            ]),
            sweep: (0..=6).map(|i| 0.2 + 0.1 * i as f64).collect(),
            ..binary_amount_trend(replications, seed)
        }
    }

    /// The seven methods the single-arm comparison studies run.
    pub fn comparison_methods() -> Vec<Method> {
        vec![
            Method::Jeffreys,
            Method::FullBorrow,
            Method::UipDirichlet,
            Method::UipJs,
            Method::Mpp,
            Method::Lcp,
            Method::Rmap,
        ]
    }

    /// Estimation / testing design: historical studies of 100 at 0.5 and 50
    /// at 1.0, unit SDs, current mean swept from 0 to 0.5.
    pub fn continuous_comparison(current_n: u64, replications: usize, seed: u64) -> Scenario {
        Scenario {
            endpoint: EndpointSpec::Continuous { sd: 1.0 },
            current_n,
            historical: HistoricalSpec::Fixed(vec![
                HistoricalGenerator { location: 0.5, sd: 1.0, n: 100 },
                HistoricalGenerator { location: 1.0, sd: 1.0, n: 50 },
            ]),
            sweep: (0..=5).map(|i| 0.1 * i as f64).collect(),
            methods: comparison_methods(),
            replications,
            master_seed: seed,
            amount: AmountPrior::Uniform { upper: 150.0 },
            chain: base_chain(seed),
            hyper: CompareHyper::default(),
            level: 0.95,
        }
    }
}
