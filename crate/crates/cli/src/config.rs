//! Run-configuration schema: a TOML document validated up front, with
//! unknown keys rejected. `CONFIG_REFERENCE` is the canonical key listing
//! that the subcommand help prints.

use std::collections::BTreeMap;

use serde::Deserialize;

use uip_core::analysis::{HistoricalRecord, Method, RegressionInput};
use uip_core::compare::CompareHyper;
use uip_core::harness::{
    EndpointSpec, HistoricalGenerator, HistoricalSpec, Scenario,
};
use uip_core::mcmc::ChainConfig;
use uip_core::summaries::{
    BinaryStudies, BinarySummary, CoefficientSummary, ContinuousStudies, ContinuousSummary,
    TwoArmGroupStats,
};
use uip_core::StudySet;
use uip_core::AmountPrior;

/// Canonical description of every configuration key; printed by `--help`.
pub const CONFIG_REFERENCE: &str = r#"CONFIGURATION KEYS (TOML; unknown keys are rejected)

[[study]]                     one block per study (analyze / weights / ess)
  label      = "NAME"         study name used in reports and error messages
  role       = "current" | "historical"   exactly one current study required
  kind       = "continuous" | "binary" | "two-arm" | "coefficient"
  n          = 100            continuous/binary/coefficient sample size
  mean, sd   = 0.0, 1.0       continuous summaries (sd > 0, n >= 2)
  successes  = 12             binary success count (0 <= successes <= n)
  estimate   = 1.82           coefficient point estimate
  se         = 1.51           coefficient standard error (> 0), or instead:
  ci         = [lo, hi]       confidence interval to recover the se from
  ci_level   = 0.95           level of that interval (default 0.95)
  treatment  = { n=, mean=, sd= }   two-arm treatment arm
  control    = { n=, mean=, sd= }   two-arm control arm

[analysis]                    analyze command
  methods    = ["uip-dirichlet", "uip-js", "jeffreys", "full-borrow",
                "mpp", "lcp", "map", "rmap"]
  level      = 0.95           credible level (default 0.95)

[amount]                      hyper-prior on the amount parameter
  mode       = "uniform" | "fixed"
  upper      = 261.0          uniform upper bound (default: combined
                              historical size, or the current size if smaller)
  value      = 40.0           fixed amount

[chain]                       sampler settings (defaults shown)
  iterations = 20000          total iterations (>= 1000)
  burn_in    = 10000          discarded prefix (< iterations)
  seed       = 0              RNG seed (--seed overrides)
  adapt_window = 50           proposal-adaptation batch size
  target_accept = 0.30        scalar-block acceptance target
  target_accept_simplex = 0.25   weight-block acceptance target

[compare]                     comparison-prior hyper-parameters (defaults)
  mpp_beta = [1.0, 1.0]       Beta prior on each power parameter
  lcp_log_tau_range = [-30.0, 30.0]   uniform range of log commensurability
  map_tau_scale = 1.0         half-normal scale of the dispersion
  rmap_robust_weight = 0.1    vague-component mixture weight
  rmap_vague_sd = 100.0       vague-component standard deviation
  invga_zeta = 0.01           InvGamma(zeta, zeta) residual-variance prior

[ess]                         ess command
  amounts    = [50.0, 100.0]  amount values to evaluate
  weights    = "js" | "uniform" | [w1, w2, ...]   conditional-ESS weights
  mc_draws   = 2000           hyper draws for the marginal ESS (>= 1000)
  grid_max   = 1000           marginal search bound

[output]
  dump_chains = false         also write chain_<method>.csv draws (analyze)

[scenario]                    simulate command
  kind       = "trend" | "estimation" | "test" | "ess"
  endpoint   = "continuous" | "binary"
  current_n  = 40             current-trial size
  current_sd = 1.0            outcome SD (continuous endpoints)
  sweep      = { from = 0.3, to = 0.9, points = 7 }   current mean/rate grid
  methods    = [...]          as in [analysis] (trend: UIP methods only)
  replications = 200          independent replications
  master_seed  = 0            harness seed (--seed overrides)
  level      = 0.95
  null       = { mode = "track-grid" } or { mode = "fixed", value = 0.0 }
  calibrate  = { theta0 = 0.0, target_size = 0.05 }   optional, kind = "test"
  amounts    = { from = 50.0, to = 150.0, step = 10.0 }   kind = "ess"
  mc_draws   = 1000           marginal-ESS draws, kind = "ess"

[scenario.historical]         one of the two layouts:
  mode = "fixed"
  generators = [{ location = -0.3, sd = 1.0, n = 40 }, ...]
  mode = "random"             parameters redrawn each replication
  location_range = [-0.5, 0.5]
  sd_range = [0.9, 1.1]       continuous endpoints only
  sizes = [80, 100, 120]

[amount], [chain], [compare] also apply to simulate.
"#;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub study: Vec<StudyRecord>,
    pub analysis: Option<AnalysisSection>,
    pub amount: Option<AmountSection>,
    pub chain: Option<ChainSection>,
    pub compare: Option<CompareSection>,
    pub ess: Option<EssSection>,
    pub output: Option<OutputSection>,
    pub scenario: Option<ScenarioSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyRecord {
    pub label: String,
    pub role: Role,
    pub kind: StudyKind,
    pub n: Option<u64>,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub successes: Option<u64>,
    pub estimate: Option<f64>,
    pub se: Option<f64>,
    pub ci: Option<[f64; 2]>,
    pub ci_level: Option<f64>,
    pub treatment: Option<ArmRecord>,
    pub control: Option<ArmRecord>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmRecord {
    pub n: u64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Current,
    Historical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    Continuous,
    Binary,
    TwoArm,
    Coefficient,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub methods: Vec<String>,
    pub level: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmountSection {
    pub mode: AmountMode,
    pub upper: Option<f64>,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmountMode {
    Uniform,
    Fixed,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub seed: Option<u64>,
    pub adapt_window: Option<usize>,
    pub target_accept: Option<f64>,
    pub target_accept_simplex: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub mpp_beta: Option<[f64; 2]>,
    pub lcp_log_tau_range: Option<[f64; 2]>,
    pub map_tau_scale: Option<f64>,
    pub rmap_robust_weight: Option<f64>,
    pub rmap_vague_sd: Option<f64>,
    pub invga_zeta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EssSection {
    pub amounts: Vec<f64>,
    pub weights: Option<toml::Value>,
    pub mc_draws: Option<usize>,
    pub grid_max: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dump_chains: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: ScenarioKind,
    pub endpoint: EndpointName,
    pub current_n: u64,
    pub current_sd: Option<f64>,
    pub sweep: SweepSection,
    pub methods: Vec<String>,
    pub replications: Option<usize>,
    pub master_seed: Option<u64>,
    pub level: Option<f64>,
    pub historical: HistoricalSection,
    pub null: Option<NullSection>,
    pub calibrate: Option<CalibrateSection>,
    pub amounts: Option<AmountGridSection>,
    pub mc_draws: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Trend,
    Estimation,
    Test,
    Ess,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndpointName {
    Continuous,
    Binary,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoricalSection {
    pub mode: HistoricalMode,
    pub generators: Option<Vec<GeneratorRecord>>,
    pub location_range: Option<[f64; 2]>,
    pub sd_range: Option<[f64; 2]>,
    pub sizes: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HistoricalMode {
    Fixed,
    Random,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorRecord {
    pub location: f64,
    pub sd: Option<f64>,
    pub n: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullSection {
    pub mode: NullMode,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullMode {
    TrackGrid,
    Fixed,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSection {
    pub theta0: f64,
    pub target_size: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmountGridSection {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

/// A configuration error with enough context to point at the record.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = std::result::Result<T, ConfigError>;

fn fail<T>(msg: impl Into<String>) -> CResult<T> {
    Err(ConfigError(msg.into()))
}

impl RunConfig {
    pub fn parse(text: &str) -> CResult<Self> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn chain_config(&self, seed_override: Option<u64>) -> CResult<ChainConfig> {
        let section = self.chain.as_ref();
        let defaults = ChainConfig::default();
        let mut cfg = ChainConfig {
            iterations: section.and_then(|c| c.iterations).unwrap_or(defaults.iterations),
            burn_in: section.and_then(|c| c.burn_in).unwrap_or(defaults.burn_in),
            seed: section.and_then(|c| c.seed).unwrap_or(defaults.seed),
            adapt_window: section.and_then(|c| c.adapt_window).unwrap_or(defaults.adapt_window),
            target_accept: section
                .and_then(|c| c.target_accept)
                .unwrap_or(defaults.target_accept),
            target_accept_simplex: section
                .and_then(|c| c.target_accept_simplex)
                .unwrap_or(defaults.target_accept_simplex),
        };
        if let Some(seed) = seed_override {
            cfg.seed = seed;
        }
        cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }

    pub fn compare_hyper(&self) -> CResult<CompareHyper> {
        let section = self.compare.as_ref();
        let d = CompareHyper::default();
        let hyper = CompareHyper {
            mpp_beta: section
                .and_then(|c| c.mpp_beta)
                .map_or(d.mpp_beta, |v| (v[0], v[1])),
            lcp_log_tau_range: section
                .and_then(|c| c.lcp_log_tau_range)
                .map_or(d.lcp_log_tau_range, |v| (v[0], v[1])),
            map_tau_scale: section.and_then(|c| c.map_tau_scale).unwrap_or(d.map_tau_scale),
            rmap_robust_weight: section
                .and_then(|c| c.rmap_robust_weight)
                .unwrap_or(d.rmap_robust_weight),
            rmap_vague_sd: section.and_then(|c| c.rmap_vague_sd).unwrap_or(d.rmap_vague_sd),
            invga_zeta: section.and_then(|c| c.invga_zeta).unwrap_or(d.invga_zeta),
        };
        hyper.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(hyper)
    }

    /// Amount prior; defaults to Uniform with the spec's upper bound rule:
    /// the combined historical size, or the current size when history is
    /// larger than the current trial.
    pub fn amount_prior(&self, n_current: u64, n_hist_total: u64) -> CResult<AmountPrior> {
        match self.amount.as_ref() {
            None => {
                let default_upper = if n_hist_total > n_current {
                    n_current as f64
                } else {
                    n_hist_total as f64
                };
                AmountPrior::uniform(default_upper).map_err(|e| ConfigError(e.to_string()))
            }
            Some(section) => match section.mode {
                AmountMode::Uniform => {
                    let upper = section.upper.ok_or_else(|| {
                        ConfigError("[amount] mode = \"uniform\" needs `upper`".into())
                    })?;
                    if section.value.is_some() {
                        return fail("[amount] `value` is only for mode = \"fixed\"");
                    }
                    AmountPrior::uniform(upper).map_err(|e| ConfigError(e.to_string()))
                }
                AmountMode::Fixed => {
                    let value = section.value.ok_or_else(|| {
                        ConfigError("[amount] mode = \"fixed\" needs `value`".into())
                    })?;
                    if section.upper.is_some() {
                        return fail("[amount] `upper` is only for mode = \"uniform\"");
                    }
                    AmountPrior::fixed(value).map_err(|e| ConfigError(e.to_string()))
                }
            },
        }
    }

    pub fn methods(names: &[String]) -> CResult<Vec<Method>> {
        if names.is_empty() {
            return fail("at least one method is required");
        }
        let mut seen = BTreeMap::new();
        names
            .iter()
            .map(|name| {
                let m = Method::parse(name).map_err(|e| ConfigError(e.to_string()))?;
                if seen.insert(name.clone(), ()).is_some() {
                    return fail(format!("method `{name}` listed twice"));
                }
                Ok(m)
            })
            .collect()
    }

    /// Builds the study set (or regression input) from the study records.
    pub fn studies(&self) -> CResult<ParsedStudies> {
        if self.study.is_empty() {
            return fail("no [[study]] records in the configuration");
        }
        let currents: Vec<&StudyRecord> =
            self.study.iter().filter(|s| s.role == Role::Current).collect();
        if currents.len() != 1 {
            return fail(format!(
                "exactly one study must have role = \"current\", found {}",
                currents.len()
            ));
        }
        let current = currents[0];
        let historical: Vec<&StudyRecord> =
            self.study.iter().filter(|s| s.role == Role::Historical).collect();
        if historical.is_empty() {
            return fail("at least one historical study is required");
        }

        let labels: Vec<String> = historical.iter().map(|s| s.label.clone()).collect();
        match current.kind {
            StudyKind::Continuous => {
                let cur = continuous_summary(current)?;
                let hist = historical
                    .iter()
                    .map(|s| {
                        expect_kind(s, StudyKind::Continuous)?;
                        continuous_summary(s)
                    })
                    .collect::<CResult<Vec<_>>>()?;
                let set = ContinuousStudies::new(cur, hist, labels)
                    .map_err(|e| ConfigError(e.to_string()))?;
                Ok(ParsedStudies::Set(StudySet::Continuous(set)))
            }
            StudyKind::Binary => {
                let cur = binary_summary(current)?;
                let hist = historical
                    .iter()
                    .map(|s| {
                        expect_kind(s, StudyKind::Binary)?;
                        binary_summary(s)
                    })
                    .collect::<CResult<Vec<_>>>()?;
                let set = BinaryStudies::new(cur, hist, labels)
                    .map_err(|e| ConfigError(e.to_string()))?;
                Ok(ParsedStudies::Set(StudySet::Binary(set)))
            }
            StudyKind::TwoArm => {
                let cur = two_arm(current)?;
                let hist = historical
                    .iter()
                    .map(|s| match s.kind {
                        StudyKind::TwoArm => {
                            Ok((s.label.clone(), HistoricalRecord::Arms(two_arm(s)?)))
                        }
                        StudyKind::Coefficient => Ok((
                            s.label.clone(),
                            HistoricalRecord::Coefficient(coefficient_summary(s)?),
                        )),
                        _ => fail(format!(
                            "study `{}`: a two-arm analysis takes two-arm or coefficient history",
                            s.label
                        )),
                    })
                    .collect::<CResult<Vec<_>>>()?;
                Ok(ParsedStudies::Regression(RegressionInput {
                    current_label: current.label.clone(),
                    current: cur,
                    historical: hist,
                }))
            }
            StudyKind::Coefficient => fail(format!(
                "study `{}`: the current study cannot be a bare coefficient",
                current.label
            )),
        }
    }
}

/// Parsed study records: single-arm sets run directly; two-arm inputs go
/// through the regression pipeline.
pub enum ParsedStudies {
    Set(StudySet),
    Regression(RegressionInput),
}

impl ParsedStudies {
    pub fn current_n(&self) -> u64 {
        match self {
            ParsedStudies::Set(s) => s.current_n(),
            ParsedStudies::Regression(r) => r.current.n(),
        }
    }

    pub fn historical_total_n(&self) -> u64 {
        match self {
            ParsedStudies::Set(s) => s.historical_ns().iter().sum(),
            ParsedStudies::Regression(r) => r
                .historical
                .iter()
                .map(|(_, rec)| match rec {
                    HistoricalRecord::Arms(a) => a.n(),
                    HistoricalRecord::Coefficient(c) => c.n(),
                })
                .sum(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            ParsedStudies::Set(StudySet::Continuous(s)) => s.labels.clone(),
            ParsedStudies::Set(StudySet::Binary(s)) => s.labels.clone(),
            ParsedStudies::Set(StudySet::Regression(s)) => s.labels.clone(),
            ParsedStudies::Regression(r) => {
                r.historical.iter().map(|(l, _)| l.clone()).collect()
            }
        }
    }
}

fn expect_kind(s: &StudyRecord, kind: StudyKind) -> CResult<()> {
    if s.kind != kind {
        return fail(format!(
            "study `{}`: kind must match the current study's endpoint",
            s.label
        ));
    }
    Ok(())
}

fn require<T: Copy>(s: &StudyRecord, field: Option<T>, name: &str) -> CResult<T> {
    field.ok_or_else(|| ConfigError(format!("study `{}`: missing `{name}`", s.label)))
}

fn continuous_summary(s: &StudyRecord) -> CResult<ContinuousSummary<f64>> {
    let n = require(s, s.n, "n")?;
    let mean = require(s, s.mean, "mean")?;
    let sd = require(s, s.sd, "sd")?;
    ContinuousSummary::new(n, mean, sd)
        .map_err(|e| ConfigError(format!("study `{}`: {e}", s.label)))
}

fn binary_summary(s: &StudyRecord) -> CResult<BinarySummary> {
    let n = require(s, s.n, "n")?;
    let successes = require(s, s.successes, "successes")?;
    BinarySummary::new(n, successes)
        .map_err(|e| ConfigError(format!("study `{}`: {e}", s.label)))
}

fn two_arm(s: &StudyRecord) -> CResult<TwoArmGroupStats<f64>> {
    let t = require(s, s.treatment, "treatment")?;
    let c = require(s, s.control, "control")?;
    let treatment = ContinuousSummary::new(t.n, t.mean, t.sd)
        .map_err(|e| ConfigError(format!("study `{}` treatment arm: {e}", s.label)))?;
    let control = ContinuousSummary::new(c.n, c.mean, c.sd)
        .map_err(|e| ConfigError(format!("study `{}` control arm: {e}", s.label)))?;
    Ok(TwoArmGroupStats::new(treatment, control))
}

fn coefficient_summary(s: &StudyRecord) -> CResult<CoefficientSummary<f64>> {
    let n = require(s, s.n, "n")?;
    let estimate = require(s, s.estimate, "estimate")?;
    match (s.se, s.ci) {
        (Some(se), None) => CoefficientSummary::new(estimate, se, n)
            .map_err(|e| ConfigError(format!("study `{}`: {e}", s.label))),
        (None, Some([lo, hi])) => {
            let level = s.ci_level.unwrap_or(0.95);
            CoefficientSummary::from_ci(estimate, lo, hi, level, n)
                .map_err(|e| ConfigError(format!("study `{}`: {e}", s.label)))
        }
        (Some(_), Some(_)) => fail(format!(
            "study `{}`: give either `se` or `ci`, not both",
            s.label
        )),
        (None, None) => fail(format!("study `{}`: needs `se` or `ci`", s.label)),
    }
}

impl ScenarioSection {
    /// Builds a harness scenario; `reps_override` and `seed_override` come
    /// from the command line.
    pub fn build(
        &self,
        config: &RunConfig,
        reps_override: Option<usize>,
        seed_override: Option<u64>,
    ) -> CResult<Scenario> {
        let endpoint = match self.endpoint {
            EndpointName::Continuous => EndpointSpec::Continuous {
                sd: self.current_sd.unwrap_or(1.0),
            },
            EndpointName::Binary => {
                if self.current_sd.is_some() {
                    return fail("scenario: `current_sd` does not apply to binary endpoints");
                }
                EndpointSpec::Binary
            }
        };
        let historical = self.historical.build(self.endpoint)?;
        if self.sweep.points == 0 {
            return fail("scenario sweep needs at least one point");
        }
        let sweep: Vec<f64> = if self.sweep.points == 1 {
            vec![self.sweep.from]
        } else {
            (0..self.sweep.points)
                .map(|i| {
                    self.sweep.from
                        + (self.sweep.to - self.sweep.from) * i as f64
                            / (self.sweep.points - 1) as f64
                })
                .collect()
        };
        let methods = RunConfig::methods(&self.methods)?;
        let master_seed = seed_override.or(self.master_seed).unwrap_or(0);
        let n_hist_total: u64 = historical.sizes().iter().sum();
        let scenario = Scenario {
            endpoint,
            current_n: self.current_n,
            historical,
            sweep,
            methods,
            replications: reps_override.or(self.replications).unwrap_or(200),
            master_seed,
            amount: config.amount_prior(self.current_n, n_hist_total)?,
            chain: config.chain_config(Some(master_seed))?,
            hyper: config.compare_hyper()?,
            level: self.level.unwrap_or(0.95),
        };
        scenario.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(scenario)
    }
}

impl HistoricalSection {
    fn build(&self, endpoint: EndpointName) -> CResult<HistoricalSpec> {
        match self.mode {
            HistoricalMode::Fixed => {
                let generators = self
                    .generators
                    .as_ref()
                    .ok_or_else(|| {
                        ConfigError("[scenario.historical] fixed mode needs `generators`".into())
                    })?;
                if self.location_range.is_some() || self.sd_range.is_some() || self.sizes.is_some()
                {
                    return fail("[scenario.historical] range keys are for mode = \"random\"");
                }
                let gens = generators
                    .iter()
                    .map(|g| {
                        let sd = match endpoint {
                            EndpointName::Continuous => g.sd.ok_or_else(|| {
                                ConfigError("historical generator: missing `sd`".into())
                            })?,
                            EndpointName::Binary => g.sd.unwrap_or(0.0),
                        };
                        Ok(HistoricalGenerator { location: g.location, sd, n: g.n })
                    })
                    .collect::<CResult<Vec<_>>>()?;
                Ok(HistoricalSpec::Fixed(gens))
            }
            HistoricalMode::Random => {
                if self.generators.is_some() {
                    return fail("[scenario.historical] `generators` is for mode = \"fixed\"");
                }
                let location = self.location_range.ok_or_else(|| {
                    ConfigError("[scenario.historical] random mode needs `location_range`".into())
                })?;
                let sizes = self
                    .sizes
                    .clone()
                    .ok_or_else(|| ConfigError("[scenario.historical] needs `sizes`".into()))?;
                match endpoint {
                    EndpointName::Continuous => {
                        let sd = self.sd_range.ok_or_else(|| {
                            ConfigError(
                                "[scenario.historical] continuous random mode needs `sd_range`"
                                    .into(),
                            )
                        })?;
                        Ok(HistoricalSpec::RandomContinuous {
                            mean_range: (location[0], location[1]),
                            sd_range: (sd[0], sd[1]),
                            sizes,
                        })
                    }
                    EndpointName::Binary => {
                        if self.sd_range.is_some() {
                            return fail(
                                "[scenario.historical] `sd_range` does not apply to binary",
                            );
                        }
                        Ok(HistoricalSpec::RandomBinary {
                            rate_range: (location[0], location[1]),
                            sizes,
                        })
                    }
                }
            }
        }
    }
}

/// Weight selector for the `ess` command.
pub enum EssWeights {
    Elicited,
    Uniform,
    Explicit(Vec<f64>),
}

impl EssSection {
    pub fn weights(&self) -> CResult<EssWeights> {
        match &self.weights {
            None => Ok(EssWeights::Elicited),
            Some(toml::Value::String(s)) if s == "js" => Ok(EssWeights::Elicited),
            Some(toml::Value::String(s)) if s == "uniform" => Ok(EssWeights::Uniform),
            Some(toml::Value::Array(values)) => {
                let w = values
                    .iter()
                    .map(|v| {
                        v.as_float()
                            .ok_or_else(|| ConfigError("[ess] weights must be numbers".into()))
                    })
                    .collect::<CResult<Vec<_>>>()?;
                Ok(EssWeights::Explicit(w))
            }
            Some(other) => fail(format!(
                "[ess] weights must be \"js\", \"uniform\" or an array, got {other}"
            )),
        }
    }
}
