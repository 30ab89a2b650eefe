//! Command-line surface for historical-borrowing analyses: `analyze` runs
//! borrowing methods on configured study summaries, `weights` elicits
//! divergence-based weights, `ess` evaluates prior effective sample sizes,
//! `simulate` runs configured operating-characteristic studies, and
//! `replicate` runs the bundled reference studies.

mod config;
mod report;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use uip_core::analysis::{self, AnalysisSettings};
use uip_core::divergence::{distances_binary, distances_normal, js_weights};
use uip_core::ess::{EssResult, HyperSpec, MarginalModel};
use uip_core::harness::{self, NullSpec};
use uip_core::mcmc::{derive_seed, WeightMode};
use uip_core::prior::dirichlet_gammas;
use uip_core::summaries::{NormalEvidence, StudySet};
use uip_core::{AmountPrior, WeightVector};

use config::{ConfigError, EssWeights, ParsedStudies, RunConfig, CONFIG_REFERENCE};

/// A command failure with its process exit code: 2 for configuration and
/// schema problems, 3 for sampler errors, 1 for I/O.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn sampler(e: uip_core::Error) -> Self {
        Self { code: 3, message: e.to_string() }
    }

    fn io(e: anyhow::Error) -> Self {
        Self { code: 1, message: format!("{e:#}") }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::config(e.0)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::io(e)
    }
}

#[derive(Parser)]
#[command(
    name = "uip",
    about = "Adaptive borrowing from historical studies with unit-information priors",
    version,
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report and CSV files.
    #[arg(long, default_value = "uip-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Borrowing analysis of configured study summaries.
    #[command(after_long_help = CONFIG_REFERENCE)]
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Size of the worker thread pool (0 = one per core).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Divergences and elicited weights for configured studies.
    #[command(after_long_help = CONFIG_REFERENCE)]
    Weights {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Conditional and marginal prior effective sample sizes.
    #[command(after_long_help = CONFIG_REFERENCE)]
    Ess {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Operating-characteristic studies from a scenario configuration.
    #[command(after_long_help = CONFIG_REFERENCE)]
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Overrides the configured replication count.
        #[arg(long)]
        reps: Option<usize>,
        /// Size of the worker thread pool (0 = one per core).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Bundled reference studies (fig1, fig2, fig3, fig4, webfig1, webfig2,
    /// memantine).
    Replicate {
        /// Which study to run.
        target: String,
        /// Overrides the default RNG seed of the target.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for CSV files.
        #[arg(long, default_value = "uip-out")]
        out: PathBuf,
        /// Overrides the default replication count.
        #[arg(long)]
        reps: Option<usize>,
        /// Size of the worker thread pool (0 = one per core).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn configure_threads(threads: usize) {
    if threads > 0 {
        // A second configuration attempt is harmless; the first pool wins.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze { common, threads } => {
            configure_threads(threads);
            cmd_analyze(&common)
        }
        Command::Weights { common } => cmd_weights(&common),
        Command::Ess { common } => cmd_ess(&common),
        Command::Simulate { common, reps, threads } => {
            configure_threads(threads);
            cmd_simulate(&common, reps)
        }
        Command::Replicate { target, seed, out, reps, threads } => {
            configure_threads(threads);
            let target = scenarios::Target::parse(&target)?;
            let written = scenarios::run(target, &out, reps, seed)?;
            for path in written {
                println!("wrote {path}");
            }
            Ok(())
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(&common.config).map_err(|e| {
        Failure::config(format!("cannot read {}: {e}", common.config.display()))
    })?;
    Ok(RunConfig::parse(&text)?)
}

fn settings_from(
    config: &RunConfig,
    studies: &ParsedStudies,
    seed: Option<u64>,
) -> Result<AnalysisSettings, Failure> {
    let amount = config.amount_prior(studies.current_n(), studies.historical_total_n())?;
    let mut settings = AnalysisSettings::new(amount);
    settings.chain = config.chain_config(seed)?;
    settings.hyper = config.compare_hyper()?;
    if let Some(analysis) = &config.analysis {
        if let Some(level) = analysis.level {
            settings.level = level;
        }
    }
    settings.keep_chains = config
        .output
        .as_ref()
        .and_then(|o| o.dump_chains)
        .unwrap_or(false);
    Ok(settings)
}

fn cmd_analyze(common: &CommonArgs) -> Result<(), Failure> {
    let config = load_config(common)?;
    let analysis_section = config
        .analysis
        .as_ref()
        .ok_or_else(|| Failure::config("analyze needs an [analysis] section"))?;
    let methods = RunConfig::methods(&analysis_section.methods)?;
    let studies = config.studies()?;
    let settings = settings_from(&config, &studies, common.seed)?;
    let labels = studies.labels();

    let report = match &studies {
        ParsedStudies::Set(set) => {
            analysis::analyze(set, &methods, &settings).map_err(Failure::sampler)?
        }
        ParsedStudies::Regression(input) => {
            // Outcome variances exist whenever the history is arm-level.
            let outcome = outcome_variances(input);
            analysis::analyze_regression_input(input, &methods, &settings, outcome)
                .map_err(Failure::sampler)?
        }
    };

    report::print_analysis(&report, &labels);
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    let path = report::write_file(&common.out, "report.json", &json)?;
    println!("wrote {}", path.display());
    let path = report::write_file(&common.out, "report.csv", &report::analysis_csv(&report))?;
    println!("wrote {}", path.display());

    for (method, chain) in &report.chains {
        let mut buf = Vec::new();
        chain.write_csv(&mut buf).expect("in-memory write");
        let name = format!("chain_{}.csv", method.name());
        let path = report::write_file(
            &common.out,
            &name,
            &String::from_utf8(buf).expect("CSV is UTF-8"),
        )?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Pooled outcome variances (current first) when every historical record is
/// arm-level; the outcome-scale conditional ESS needs them.
fn outcome_variances(input: &analysis::RegressionInput) -> Option<(f64, Vec<f64>)> {
    let mut hist = Vec::with_capacity(input.historical.len());
    for (_, record) in &input.historical {
        match record {
            analysis::HistoricalRecord::Arms(stats) => hist.push(stats.pooled_mle_variance()),
            analysis::HistoricalRecord::Coefficient(_) => return None,
        }
    }
    Some((input.current.pooled_mle_variance(), hist))
}

/// Divergence report and weights for any endpoint; regression inputs fit
/// their per-study models first.
fn elicit(
    config: &RunConfig,
    studies: &ParsedStudies,
    seed: Option<u64>,
) -> Result<(uip_core::DistanceReport, Vec<f64>), Failure> {
    let report = match studies {
        ParsedStudies::Set(StudySet::Continuous(s)) => {
            distances_normal(&NormalEvidence::from_continuous(&s.current), &s.evidence())
                .map_err(Failure::sampler)?
        }
        ParsedStudies::Set(StudySet::Binary(s)) => {
            distances_binary(&s.current, &s.historical).map_err(Failure::sampler)?
        }
        ParsedStudies::Set(StudySet::Regression(s)) => {
            let current_evidence = regression_current_evidence_from_set(config, s, seed)?;
            distances_normal(&current_evidence, &s.evidence()).map_err(Failure::sampler)?
        }
        ParsedStudies::Regression(input) => {
            let chain = config.chain_config(seed)?;
            let (studies, _, current_evidence) =
                input.prepare(&chain, 0.95).map_err(Failure::sampler)?;
            distances_normal(&current_evidence, &studies.evidence()).map_err(Failure::sampler)?
        }
    };
    let weights = js_weights(&report).map_err(Failure::sampler)?;
    let values = weights.as_slice().to_vec();
    Ok((report, values))
}

fn regression_current_evidence_from_set(
    config: &RunConfig,
    studies: &uip_core::RegressionStudies,
    seed: Option<u64>,
) -> Result<NormalEvidence<f64>, Failure> {
    let chain = config.chain_config(seed)?;
    let fit = uip_core::regression::fit_separate(&studies.current, &chain, 0.95)
        .map_err(Failure::sampler)?;
    NormalEvidence::new(
        fit.effect.mean,
        studies.current.n(),
        studies.current.n() as f64 * fit.effect.sd * fit.effect.sd,
    )
    .map_err(Failure::sampler)
}

fn cmd_weights(common: &CommonArgs) -> Result<(), Failure> {
    let config = load_config(common)?;
    let studies = config.studies()?;
    let labels = studies.labels();
    let (distances, weights) = elicit(&config, &studies, common.seed)?;

    report::print_weights(&labels, &distances, &weights);
    let csv = report::weights_csv(&labels, &distances, &weights);
    let path = report::write_file(&common.out, "weights.csv", &csv)?;
    println!("wrote {}", path.display());
    let json = serde_json::json!({
        "labels": labels,
        "divergences": distances.distances,
        "capped": distances.subsampled,
        "weights": weights,
    });
    let path = report::write_file(
        &common.out,
        "weights.json",
        &serde_json::to_string_pretty(&json).expect("weights serialize"),
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_ess(common: &CommonArgs) -> Result<(), Failure> {
    let config = load_config(common)?;
    let ess_section = config
        .ess
        .as_ref()
        .ok_or_else(|| Failure::config("ess needs an [ess] section"))?;
    if ess_section.amounts.is_empty() {
        return Err(Failure::config("[ess] amounts must be nonempty"));
    }
    let studies = config.studies()?;
    let seed = common.seed.unwrap_or(0);
    let k = studies.labels().len();

    // Conditional-ESS weights per the configuration.
    let weights = match ess_section.weights()? {
        EssWeights::Elicited => {
            let (_, w) = elicit(&config, &studies, common.seed)?;
            WeightVector::new(w).map_err(Failure::sampler)?
        }
        EssWeights::Uniform => WeightVector::uniform(k),
        EssWeights::Explicit(w) => WeightVector::new(w).map_err(Failure::sampler)?,
    };
    if weights.len() != k {
        return Err(Failure::config(format!(
            "[ess] {} weights for {k} historical studies",
            weights.len()
        )));
    }

    let mc_draws = ess_section.mc_draws.unwrap_or(2000);
    let grid_max = ess_section.grid_max.unwrap_or(1000);

    // Marginal ESS integrates Dirichlet weights at each fixed amount.
    let (sigma2, evidence, rates, gammas): (f64, Vec<NormalEvidence<f64>>, Vec<f64>, Vec<f64>) =
        match &studies {
            ParsedStudies::Set(StudySet::Continuous(s)) => (
                s.current.mle_variance(),
                s.evidence(),
                Vec::new(),
                dirichlet_gammas(
                    s.current.n(),
                    &s.historical.iter().map(|h| h.n()).collect::<Vec<_>>(),
                ),
            ),
            ParsedStudies::Set(StudySet::Binary(s)) => (
                0.0,
                Vec::new(),
                s.corrected_rates(),
                dirichlet_gammas(
                    s.current.n(),
                    &s.historical.iter().map(|h| h.n()).collect::<Vec<_>>(),
                ),
            ),
            ParsedStudies::Set(StudySet::Regression(s)) => {
                let current = regression_current_evidence_from_set(&config, s, common.seed)?;
                (
                    current.variance,
                    s.evidence(),
                    Vec::new(),
                    dirichlet_gammas(
                        s.current.n(),
                        &s.historical.iter().map(|h| h.n()).collect::<Vec<_>>(),
                    ),
                )
            }
            ParsedStudies::Regression(input) => {
                let chain = config.chain_config(common.seed)?;
                let (set, _, current) = input.prepare(&chain, 0.95).map_err(Failure::sampler)?;
                let ns: Vec<u64> = set.historical.iter().map(|h| h.n()).collect();
                (
                    current.variance,
                    set.evidence(),
                    Vec::new(),
                    dirichlet_gammas(set.current.n(), &ns),
                )
            }
        };

    let mut rows: Vec<(f64, f64, EssResult)> = Vec::with_capacity(ess_section.amounts.len());
    for (i, &amount) in ess_section.amounts.iter().enumerate() {
        let hyper = HyperSpec {
            amount: AmountPrior::Fixed(amount),
            weights: WeightMode::Dirichlet(gammas.clone()),
        };
        let (conditional, marginal) = if rates.is_empty() {
            let conditional =
                uip_core::ess::conditional_ess_continuous(amount, &weights, sigma2, &evidence);
            let marginal = uip_core::ess::marginal_ess(
                &MarginalModel::Continuous { sigma2_current: sigma2, evidence: &evidence },
                &hyper,
                grid_max,
                mc_draws,
                derive_seed(seed, i as u64),
            )
            .map_err(Failure::sampler)?;
            (conditional, marginal)
        } else {
            let conditional =
                uip_core::ess::conditional_ess_binary_from_rates(amount, &weights, &rates)
                    .map_err(Failure::sampler)?;
            let marginal = uip_core::ess::marginal_ess(
                &MarginalModel::Binary { rates: &rates },
                &hyper,
                grid_max,
                mc_draws,
                derive_seed(seed, i as u64),
            )
            .map_err(Failure::sampler)?;
            (conditional, marginal)
        };
        rows.push((amount, conditional, marginal));
    }

    report::print_ess(&rows);
    let path = report::write_file(&common.out, "ess.csv", &report::ess_csv(&rows))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_simulate(common: &CommonArgs, reps: Option<usize>) -> Result<(), Failure> {
    let config = load_config(common)?;
    let section = config
        .scenario
        .as_ref()
        .ok_or_else(|| Failure::config("simulate needs a [scenario] section"))?;
    let scenario = section.build(&config, reps, common.seed)?;

    match section.kind {
        config::ScenarioKind::Trend => {
            let result = harness::run_trend(&scenario).map_err(Failure::sampler)?;
            let path =
                report::write_file(&common.out, "trend.csv", &report::scenario_csv(&result))?;
            println!("wrote {}", path.display());
        }
        config::ScenarioKind::Estimation => {
            let result = harness::run_estimation(&scenario).map_err(Failure::sampler)?;
            let path =
                report::write_file(&common.out, "estimation.csv", &report::scenario_csv(&result))?;
            println!("wrote {}", path.display());
        }
        config::ScenarioKind::Test => {
            let null = match &section.null {
                None => NullSpec::TrackGrid,
                Some(config::NullSection { mode: config::NullMode::TrackGrid, value }) => {
                    if value.is_some() {
                        return Err(Failure::config(
                            "[scenario] null.value is only for mode = \"fixed\"",
                        ));
                    }
                    NullSpec::TrackGrid
                }
                Some(config::NullSection { mode: config::NullMode::Fixed, value }) => {
                    NullSpec::Fixed(value.ok_or_else(|| {
                        Failure::config("[scenario] null mode = \"fixed\" needs `value`")
                    })?)
                }
            };
            let run = harness::run_test(&scenario, null, None).map_err(Failure::sampler)?;
            let path =
                report::write_file(&common.out, "test.csv", &report::scenario_csv(&run.result))?;
            println!("wrote {}", path.display());

            if let Some(calibrate) = section.calibrate {
                let calibrations =
                    harness::calibrate_size(&scenario, calibrate.theta0, calibrate.target_size)
                        .map_err(Failure::sampler)?;
                let path = report::write_file(
                    &common.out,
                    "calibration.csv",
                    &report::calibration_csv(&calibrations),
                )?;
                println!("wrote {}", path.display());

                let mut calibrated = scenario.clone();
                calibrated.methods = calibrations
                    .iter()
                    .filter(|c| c.adjusted_level.is_some())
                    .map(|c| c.method)
                    .collect();
                let levels: Vec<f64> =
                    calibrations.iter().filter_map(|c| c.adjusted_level).collect();
                if !calibrated.methods.is_empty() {
                    let run = harness::run_test(
                        &calibrated,
                        NullSpec::Fixed(calibrate.theta0),
                        Some(&levels),
                    )
                    .map_err(Failure::sampler)?;
                    let path = report::write_file(
                        &common.out,
                        "calibrated_test.csv",
                        &report::scenario_csv(&run.result),
                    )?;
                    println!("wrote {}", path.display());
                }
            }
        }
        config::ScenarioKind::Ess => {
            let grid_section = section.amounts.ok_or_else(|| {
                Failure::config("[scenario] kind = \"ess\" needs an `amounts` grid")
            })?;
            if grid_section.step <= 0.0 || grid_section.to < grid_section.from {
                return Err(Failure::config("[scenario] amounts grid must increase"));
            }
            let mut grid = Vec::new();
            let mut value = grid_section.from;
            while value <= grid_section.to + 1e-9 {
                grid.push(value);
                value += grid_section.step;
            }
            let result = harness::run_ess_study(&scenario, &grid, section.mc_draws.unwrap_or(1000))
                .map_err(Failure::sampler)?;
            let path =
                report::write_file(&common.out, "ess_study.csv", &report::scenario_csv(&result))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
