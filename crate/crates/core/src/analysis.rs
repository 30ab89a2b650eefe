//! Borrowing analyses over a study set: method palette, report types, and
//! the dispatch that runs samplers and assembles posterior summaries,
//! weights, amount estimates and effective sample sizes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compare::{sample_compare, CompareHyper, CompareMethod};
use crate::divergence::{distances_binary, distances_normal, js_weights, DistanceReport};
use crate::error::{Error, Result};
use crate::ess::{self, EssResult, HyperSpec, MarginalModel};
use crate::mcmc::{
    derive_seed, sample_uip_binary, sample_uip_continuous, sample_uip_regression, Chain,
    ChainConfig, PosteriorSummary, WeightMode,
};
use crate::prior::{dirichlet_gammas, AmountPrior, WeightVector};
use crate::regression::{fit_separate, SeparateFit};
use crate::summaries::{
    CoefficientSummary, NormalEvidence, RegressionStudies, StudySet, TwoArmGroupStats,
};

/// Every analysis method the library offers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    UipDirichlet,
    UipJs,
    Jeffreys,
    FullBorrow,
    Mpp,
    Lcp,
    Map,
    Rmap,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::UipDirichlet,
        Method::UipJs,
        Method::Jeffreys,
        Method::FullBorrow,
        Method::Mpp,
        Method::Lcp,
        Method::Map,
        Method::Rmap,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::UipDirichlet => "uip-dirichlet",
            Method::UipJs => "uip-js",
            Method::Jeffreys => "jeffreys",
            Method::FullBorrow => "full-borrow",
            Method::Mpp => "mpp",
            Method::Lcp => "lcp",
            Method::Map => "map",
            Method::Rmap => "rmap",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown method `{name}`")))
    }

    pub fn as_compare(&self) -> Option<CompareMethod> {
        match self {
            Method::Jeffreys => Some(CompareMethod::Jeffreys),
            Method::FullBorrow => Some(CompareMethod::FullBorrow),
            Method::Mpp => Some(CompareMethod::Mpp),
            Method::Lcp => Some(CompareMethod::Lcp),
            Method::Map => Some(CompareMethod::Map),
            Method::Rmap => Some(CompareMethod::Rmap),
            Method::UipDirichlet | Method::UipJs => None,
        }
    }
}

/// Settings shared by every analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub amount: AmountPrior<f64>,
    pub hyper: CompareHyper,
    pub chain: ChainConfig,
    pub level: f64,
    /// Hyper draws for the marginal effective sample size.
    pub marginal_ess_draws: usize,
    pub marginal_ess_grid: usize,
    /// Retain raw chains on the report (for dumps); off by default.
    pub keep_chains: bool,
}

impl AnalysisSettings {
    pub fn new(amount: AmountPrior<f64>) -> Self {
        Self {
            amount,
            hyper: CompareHyper::default(),
            chain: ChainConfig::default(),
            level: 0.95,
            marginal_ess_draws: 2000,
            marginal_ess_grid: 1000,
            keep_chains: false,
        }
    }
}

/// Posterior results of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    /// Named posterior summaries (`theta`, or `beta0`/`beta1`).
    pub parameters: Vec<(String, PosteriorSummary)>,
    /// Posterior-mean weights (sampled) or the fixed elicited weights.
    pub weights: Option<Vec<f64>>,
    /// Posterior mean of the amount parameter when it is sampled.
    pub amount_mean: Option<f64>,
    pub ess_conditional: Option<f64>,
    pub ess_marginal: Option<EssResult>,
}

/// Noninformative per-study fit included in regression reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyFit {
    pub label: String,
    pub intercept: PosteriorSummary,
    pub effect: PosteriorSummary,
    pub n: u64,
}

/// Full output of an `analyze` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub endpoint: String,
    pub level: f64,
    /// Per-study noninformative fits (regression endpoints only).
    pub separate: Vec<StudyFit>,
    pub methods: Vec<MethodResult>,
    /// Divergences behind the elicited weights, when computed.
    pub distances: Option<DistanceReport<f64>>,
    /// Elicited weights, when computed.
    pub elicited_weights: Option<Vec<f64>>,
    /// Raw chains, kept only when the settings ask for them; not serialized.
    #[serde(skip)]
    pub chains: Vec<(Method, Chain)>,
}

/// Runs the requested methods over a study set.
pub fn analyze(
    studies: &StudySet<f64>,
    methods: &[Method],
    settings: &AnalysisSettings,
) -> Result<AnalysisReport> {
    settings.chain.validate()?;
    settings.hyper.validate()?;
    if !(settings.level > 0.0 && settings.level < 1.0) {
        return Err(Error::BadLevel(settings.level));
    }
    match studies {
        StudySet::Regression(r) => analyze_regression(r, methods, settings),
        StudySet::Continuous(_) | StudySet::Binary(_) => {
            analyze_single_arm(studies, methods, settings)
        }
    }
}

fn dirichlet_mode(studies: &StudySet<f64>) -> WeightMode {
    WeightMode::Dirichlet(dirichlet_gammas(
        studies.current_n(),
        &studies.historical_ns(),
    ))
}

fn js_mode(studies: &StudySet<f64>) -> Result<(WeightMode, DistanceReport<f64>, Vec<f64>)> {
    let report = match studies {
        StudySet::Continuous(s) => {
            distances_normal(&NormalEvidence::from_continuous(&s.current), &s.evidence())?
        }
        StudySet::Binary(s) => distances_binary(&s.current, &s.historical)?,
        StudySet::Regression(_) => unreachable!("regression elicits its own distances"),
    };
    let weights = js_weights(&report)?;
    let values = weights.as_slice().to_vec();
    Ok((WeightMode::Fixed(weights), report, values))
}

fn single_arm_chain(
    studies: &StudySet<f64>,
    method: Method,
    wmode: &WeightMode,
    settings: &AnalysisSettings,
) -> Result<Chain> {
    match method {
        Method::UipDirichlet | Method::UipJs => match studies {
            StudySet::Continuous(s) => {
                sample_uip_continuous(s, &settings.amount, wmode, &settings.chain)
            }
            StudySet::Binary(s) => sample_uip_binary(s, &settings.amount, wmode, &settings.chain),
            StudySet::Regression(_) => unreachable!(),
        },
        other => sample_compare(
            studies,
            other.as_compare().expect("non-UIP method"),
            &settings.hyper,
            &settings.chain,
        ),
    }
}

fn weight_means(chain: &Chain, k: usize) -> Option<Vec<f64>> {
    let mut means = Vec::with_capacity(k);
    for i in 1..=k {
        let col = chain.column(&format!("w{i}"))?;
        means.push(col.iter().sum::<f64>() / col.len() as f64);
    }
    Some(means)
}

fn amount_mean(chain: &Chain) -> Option<f64> {
    chain
        .column("m")
        .map(|m| m.iter().sum::<f64>() / m.len() as f64)
}

/// Conditional and marginal ESS of a fitted single-arm unit-information prior.
fn uip_ess(
    studies: &StudySet<f64>,
    chain: &Chain,
    wmode: &WeightMode,
    amount: &AmountPrior<f64>,
    settings: &AnalysisSettings,
) -> (Option<f64>, Option<EssResult>) {
    let k = studies.historical_len();
    let post_weights = match wmode {
        WeightMode::Fixed(w) => w.as_slice().to_vec(),
        WeightMode::Dirichlet(_) => weight_means(chain, k).unwrap_or_default(),
    };
    let post_amount = amount_mean(chain).or(match amount {
        AmountPrior::Fixed(m) => Some(*m),
        AmountPrior::Uniform { .. } => None,
    });

    let conditional = match (post_amount, WeightVector::new(post_weights)) {
        (Some(m), Ok(w)) => match studies {
            StudySet::Binary(s) => ess::conditional_ess_binary(m, &w, &s.historical).ok(),
            StudySet::Continuous(s) => Some(ess::conditional_ess_continuous(
                m,
                &w,
                s.current.mle_variance(),
                &s.evidence(),
            )),
            StudySet::Regression(_) => unreachable!("regression handles ESS inline"),
        },
        _ => None,
    };

    let hyper = HyperSpec { amount: *amount, weights: wmode.clone() };
    let seed = derive_seed(settings.chain.seed, 0xE55);
    let marginal = match studies {
        StudySet::Binary(s) => {
            let rates: Vec<f64> = s.corrected_rates();
            ess::marginal_ess(
                &MarginalModel::Binary { rates: &rates },
                &hyper,
                settings.marginal_ess_grid,
                settings.marginal_ess_draws,
                seed,
            )
        }
        StudySet::Continuous(s) => ess::marginal_ess(
            &MarginalModel::Continuous {
                sigma2_current: s.current.mle_variance(),
                evidence: &s.evidence(),
            },
            &hyper,
            settings.marginal_ess_grid,
            settings.marginal_ess_draws,
            seed,
        ),
        StudySet::Regression(_) => unreachable!("regression handles ESS inline"),
    };
    (conditional, marginal.ok())
}

fn analyze_single_arm(
    studies: &StudySet<f64>,
    methods: &[Method],
    settings: &AnalysisSettings,
) -> Result<AnalysisReport> {
    let mut report = AnalysisReport {
        endpoint: studies.endpoint_name().to_string(),
        level: settings.level,
        separate: Vec::new(),
        methods: Vec::new(),
        distances: None,
        elicited_weights: None,
        chains: Vec::new(),
    };

    let needs_js = methods.contains(&Method::UipJs);
    let js = if needs_js { Some(js_mode(studies)?) } else { None };
    if let Some((_, distances, weights)) = &js {
        report.distances = Some(distances.clone());
        report.elicited_weights = Some(weights.clone());
    }

    for &method in methods {
        let wmode = match method {
            Method::UipDirichlet => dirichlet_mode(studies),
            Method::UipJs => js.as_ref().expect("computed above").0.clone(),
            _ => WeightMode::Dirichlet(vec![1.0; studies.historical_len()]),
        };
        let chain = single_arm_chain(studies, method, &wmode, settings)?;
        let theta = chain.summary("theta", settings.level)?;
        let is_uip = matches!(method, Method::UipDirichlet | Method::UipJs);
        let (ess_conditional, ess_marginal) = if is_uip {
            uip_ess(studies, &chain, &wmode, &settings.amount, settings)
        } else {
            (None, None)
        };
        report.methods.push(MethodResult {
            method,
            parameters: vec![("theta".to_string(), theta)],
            weights: if is_uip {
                match &wmode {
                    WeightMode::Fixed(w) => Some(w.as_slice().to_vec()),
                    WeightMode::Dirichlet(_) => weight_means(&chain, studies.historical_len()),
                }
            } else {
                None
            },
            amount_mean: if is_uip { amount_mean(&chain) } else { None },
            ess_conditional,
            ess_marginal,
        });
        if settings.keep_chains {
            report.chains.push((method, chain));
        }
    }
    Ok(report)
}

/// Historical input for a regression analysis: either full arm statistics
/// (fitted separately first) or a published coefficient summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HistoricalRecord {
    Arms(TwoArmGroupStats<f64>),
    Coefficient(CoefficientSummary<f64>),
}

/// Two-arm analysis input with labeled historical studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionInput {
    pub current_label: String,
    pub current: TwoArmGroupStats<f64>,
    pub historical: Vec<(String, HistoricalRecord)>,
}

impl RegressionInput {
    /// Fits the per-study models, derives coefficient summaries, and bundles
    /// them into a study set plus report rows. Separate fits run in parallel
    /// with seeds derived per study, so results do not depend on scheduling.
    pub fn prepare(
        &self,
        cfg: &ChainConfig,
        level: f64,
    ) -> Result<(RegressionStudies<f64>, Vec<StudyFit>, NormalEvidence<f64>)> {
        let current_fit = {
            let cfg = ChainConfig { seed: derive_seed(cfg.seed, 0), ..*cfg };
            fit_separate(&self.current, &cfg, level)?
        };

        let fits: Vec<Option<SeparateFit>> = self
            .historical
            .par_iter()
            .enumerate()
            .map(|(i, (_, record))| match record {
                HistoricalRecord::Arms(stats) => {
                    let cfg = ChainConfig { seed: derive_seed(cfg.seed, (i + 1) as u64), ..*cfg };
                    fit_separate(stats, &cfg, level).map(Some)
                }
                HistoricalRecord::Coefficient(_) => Ok(None),
            })
            .collect::<Result<_>>()?;

        let mut coefficients = Vec::with_capacity(self.historical.len());
        let mut labels = Vec::with_capacity(self.historical.len());
        let mut rows = vec![StudyFit {
            label: self.current_label.clone(),
            intercept: current_fit.intercept,
            effect: current_fit.effect,
            n: self.current.n(),
        }];
        for ((label, record), fit) in self.historical.iter().zip(fits) {
            labels.push(label.clone());
            match (record, fit) {
                (HistoricalRecord::Arms(stats), Some(fit)) => {
                    coefficients.push(CoefficientSummary::new(
                        fit.effect.mean,
                        fit.effect.sd,
                        stats.n(),
                    )?);
                    rows.push(StudyFit {
                        label: label.clone(),
                        intercept: fit.intercept,
                        effect: fit.effect,
                        n: stats.n(),
                    });
                }
                (HistoricalRecord::Coefficient(c), _) => coefficients.push(*c),
                (HistoricalRecord::Arms(_), None) => unreachable!(),
            }
        }

        let studies = RegressionStudies::new(self.current, coefficients, labels)?;
        let current_evidence = NormalEvidence::new(
            current_fit.effect.mean,
            self.current.n(),
            self.current.n() as f64 * current_fit.effect.sd * current_fit.effect.sd,
        )?;
        Ok((studies, rows, current_evidence))
    }
}

fn analyze_regression(
    studies: &RegressionStudies<f64>,
    methods: &[Method],
    settings: &AnalysisSettings,
) -> Result<AnalysisReport> {
    let input = RegressionInput {
        current_label: "current".to_string(),
        current: studies.current,
        historical: studies
            .labels
            .iter()
            .zip(&studies.historical)
            .map(|(l, c)| (l.clone(), HistoricalRecord::Coefficient(*c)))
            .collect(),
    };
    analyze_regression_input(&input, methods, settings, None)
}

/// Full two-arm pipeline: separate fits, weight elicitation, borrowing runs.
/// `outcome_variances` supplies per-study pooled outcome variances
/// (current first) for reporting the conditional ESS on the outcome scale;
/// without them the coefficient scale is used.
pub fn analyze_regression_input(
    input: &RegressionInput,
    methods: &[Method],
    settings: &AnalysisSettings,
    outcome_variances: Option<(f64, Vec<f64>)>,
) -> Result<AnalysisReport> {
    settings.chain.validate()?;
    settings.hyper.validate()?;
    let (studies, separate, current_evidence) =
        input.prepare(&settings.chain, settings.level)?;
    let evidence = studies.evidence();

    let mut report = AnalysisReport {
        endpoint: "regression".to_string(),
        level: settings.level,
        separate,
        methods: Vec::new(),
        distances: None,
        elicited_weights: None,
        chains: Vec::new(),
    };

    let needs_js = methods.contains(&Method::UipJs);
    let js = if needs_js {
        let distances = distances_normal(&current_evidence, &evidence)?;
        let weights = js_weights(&distances)?;
        let values = weights.as_slice().to_vec();
        report.distances = Some(distances);
        report.elicited_weights = Some(values.clone());
        Some((WeightMode::Fixed(weights), values))
    } else {
        None
    };

    // ESS inputs: outcome scale when arm-level variances exist, coefficient
    // scale otherwise. The marginal ESS always runs on the coefficient scale
    // for internal consistency of the matching procedure.
    let coef_sigma2 = current_evidence.variance;
    let (cond_sigma2, cond_evidence): (f64, Vec<NormalEvidence<f64>>) = match &outcome_variances {
        Some((current_var, hist_vars)) if hist_vars.len() == evidence.len() => (
            *current_var,
            evidence
                .iter()
                .zip(hist_vars)
                .map(|(e, &v)| NormalEvidence::new(e.estimate, e.n, v))
                .collect::<Result<_>>()?,
        ),
        _ => (coef_sigma2, evidence.clone()),
    };

    let set = StudySet::Regression(studies.clone());
    for &method in methods {
        let wmode = match method {
            Method::UipDirichlet => dirichlet_mode(&set),
            Method::UipJs => js.as_ref().expect("computed above").0.clone(),
            _ => WeightMode::Dirichlet(vec![1.0; evidence.len()]),
        };
        let chain = match method {
            Method::UipDirichlet | Method::UipJs => {
                sample_uip_regression(&studies, &settings.amount, &wmode, &settings.chain)?
            }
            other => sample_compare(
                &set,
                other.as_compare().expect("non-UIP method"),
                &settings.hyper,
                &settings.chain,
            )?,
        };
        let beta0 = chain.summary("beta0", settings.level)?;
        let beta1 = chain.summary("beta1", settings.level)?;
        let is_uip = matches!(method, Method::UipDirichlet | Method::UipJs);
        let (ess_conditional, ess_marginal) = if is_uip {
            // Conditional ESS on the chosen scale at the posterior means;
            // marginal on the coefficient scale under the hyper-prior.
            let k = evidence.len();
            let post_weights = match &wmode {
                WeightMode::Fixed(w) => w.as_slice().to_vec(),
                WeightMode::Dirichlet(_) => weight_means(&chain, k).unwrap_or_default(),
            };
            let post_amount = amount_mean(&chain).or(match settings.amount {
                AmountPrior::Fixed(m) => Some(m),
                AmountPrior::Uniform { .. } => None,
            });
            let conditional = match (post_amount, WeightVector::new(post_weights)) {
                (Some(m), Ok(w)) => Some(ess::conditional_ess_continuous(
                    m,
                    &w,
                    cond_sigma2,
                    &cond_evidence,
                )),
                _ => None,
            };
            let marginal = ess::marginal_ess(
                &MarginalModel::Continuous {
                    sigma2_current: coef_sigma2,
                    evidence: &evidence,
                },
                &HyperSpec { amount: settings.amount, weights: wmode.clone() },
                settings.marginal_ess_grid,
                settings.marginal_ess_draws,
                derive_seed(settings.chain.seed, 0xE55),
            )
            .ok();
            (conditional, marginal)
        } else {
            (None, None)
        };

        report.methods.push(MethodResult {
            method,
            parameters: vec![
                ("beta0".to_string(), beta0),
                ("beta1".to_string(), beta1),
            ],
            weights: if is_uip {
                match &wmode {
                    WeightMode::Fixed(w) => Some(w.as_slice().to_vec()),
                    WeightMode::Dirichlet(_) => weight_means(&chain, evidence.len()),
                }
            } else {
                None
            },
            amount_mean: if is_uip { amount_mean(&chain) } else { None },
            ess_conditional,
            ess_marginal,
        });
        if settings.keep_chains {
            report.chains.push((method, chain));
        }
    }
    Ok(report)
}
