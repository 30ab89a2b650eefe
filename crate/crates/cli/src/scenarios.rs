//! Canned replication targets: the reference simulation studies and the
//! bundled memantine analysis, runnable without a configuration file.

use std::path::Path;

use anyhow::Result;

use uip_core::analysis::{analyze_regression_input, AnalysisSettings, Method};
use uip_core::datasets;
use uip_core::harness::{self, presets, NullSpec, Scenario};
use uip_core::mcmc::ChainConfig;
use uip_core::AmountPrior;

use crate::report;
use crate::Failure;

/// A canned target and its default scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// ESS against the amount parameter, continuous endpoint.
    Fig1,
    /// Amount and weight adaptation trends, continuous endpoint.
    Fig2,
    /// Bias / variance / MSE comparison at n = 60 and 120.
    Fig3,
    /// Size, power and calibrated power at n = 60 and 120.
    Fig4,
    /// ESS study, binary endpoint.
    Webfig1,
    /// Adaptation trends, binary endpoint.
    Webfig2,
    /// Borrowing analysis of the bundled six-trial memantine data.
    Memantine,
}

impl Target {
    pub const ALL: [(&'static str, Target, &'static str); 7] = [
        ("fig1", Target::Fig1, "conditional vs marginal ESS across the amount grid (continuous)"),
        ("fig2", Target::Fig2, "amount and weight adaptation trends (continuous)"),
        ("fig3", Target::Fig3, "absolute bias, variance and MSE across methods (n = 60, 120)"),
        ("fig4", Target::Fig4, "size, power and calibrated power across methods (n = 60, 120)"),
        ("webfig1", Target::Webfig1, "conditional vs marginal ESS across the amount grid (binary)"),
        ("webfig2", Target::Webfig2, "amount and weight adaptation trends (binary)"),
        ("memantine", Target::Memantine, "six-trial borrowing analysis from the bundled summaries"),
    ];

    pub fn parse(name: &str) -> Result<Target, Failure> {
        Self::ALL
            .iter()
            .find(|(n, _, _)| *n == name)
            .map(|(_, t, _)| *t)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|(n, _, _)| *n).collect();
                Failure::config(format!(
                    "unknown replication target `{name}`; expected one of {}",
                    names.join(", ")
                ))
            })
    }

    fn default_replications(&self) -> usize {
        match self {
            Target::Fig1 | Target::Fig2 | Target::Webfig1 | Target::Webfig2 => 100,
            Target::Fig3 | Target::Fig4 => 200,
            Target::Memantine => 0,
        }
    }

    fn default_seed(&self) -> u64 {
        match self {
            Target::Fig1 => 101,
            Target::Fig2 => 102,
            Target::Fig3 => 103,
            Target::Fig4 => 104,
            Target::Webfig1 => 111,
            Target::Webfig2 => 112,
            Target::Memantine => 105,
        }
    }
}

fn write_result(
    out: &Path,
    name: &str,
    result: &harness::ScenarioResult,
    written: &mut Vec<String>,
) -> Result<()> {
    let path = report::write_file(out, name, &report::scenario_csv(result))?;
    written.push(path.display().to_string());
    Ok(())
}

/// Runs one canned target, writing its CSVs under `out`.
pub fn run(
    target: Target,
    out: &Path,
    reps: Option<usize>,
    seed: Option<u64>,
) -> Result<Vec<String>, Failure> {
    let reps = reps.unwrap_or_else(|| target.default_replications());
    let seed = seed.unwrap_or_else(|| target.default_seed());
    let mut written = Vec::new();

    match target {
        Target::Fig1 => {
            let scenario = presets::continuous_ess_study(reps, seed);
            let result = harness::run_ess_study(&scenario, &presets::ess_amount_grid(), 1000)
                .map_err(Failure::sampler)?;
            write_result(out, "fig1_ess.csv", &result, &mut written)?;
        }
        Target::Webfig1 => {
            let scenario = presets::binary_ess_study(reps, seed);
            let result = harness::run_ess_study(&scenario, &presets::ess_amount_grid(), 1000)
                .map_err(Failure::sampler)?;
            write_result(out, "webfig1_ess.csv", &result, &mut written)?;
        }
        Target::Fig2 => {
            let amount = harness::run_trend(&presets::continuous_amount_trend(reps, seed))
                .map_err(Failure::sampler)?;
            write_result(out, "fig2_amount.csv", &amount, &mut written)?;
            let weights = harness::run_trend(&presets::continuous_weight_trend(reps, seed + 1))
                .map_err(Failure::sampler)?;
            write_result(out, "fig2_weights.csv", &weights, &mut written)?;
        }
        Target::Webfig2 => {
            let amount = harness::run_trend(&presets::binary_amount_trend(reps, seed))
                .map_err(Failure::sampler)?;
            write_result(out, "webfig2_amount.csv", &amount, &mut written)?;
            let weights = harness::run_trend(&presets::binary_weight_trend(reps, seed + 1))
                .map_err(Failure::sampler)?;
            write_result(out, "webfig2_weights.csv", &weights, &mut written)?;
        }
        Target::Fig3 => {
            for n in [60u64, 120] {
                let scenario = presets::continuous_comparison(n, reps, seed + n);
                let result = harness::run_estimation(&scenario).map_err(Failure::sampler)?;
                write_result(out, &format!("fig3_n{n}.csv"), &result, &mut written)?;
            }
        }
        Target::Fig4 => {
            for n in [60u64, 120] {
                let scenario = presets::continuous_comparison(n, reps, seed + n);
                let size = harness::run_test(&scenario, NullSpec::TrackGrid, None)
                    .map_err(Failure::sampler)?;
                write_result(out, &format!("fig4_size_n{n}.csv"), &size.result, &mut written)?;

                let power = harness::run_test(&scenario, NullSpec::Fixed(0.0), None)
                    .map_err(Failure::sampler)?;
                write_result(out, &format!("fig4_power_n{n}.csv"), &power.result, &mut written)?;

                let calibrations =
                    harness::calibrate_size(&scenario, 0.0, 0.05).map_err(Failure::sampler)?;
                let path = report::write_file(
                    out,
                    &format!("fig4_calibration_n{n}.csv"),
                    &report::calibration_csv(&calibrations),
                )?;
                written.push(path.display().to_string());

                let mut calibrated = scenario.clone();
                calibrated.methods = calibrations
                    .iter()
                    .filter(|c| c.adjusted_level.is_some())
                    .map(|c| c.method)
                    .collect();
                let levels: Vec<f64> =
                    calibrations.iter().filter_map(|c| c.adjusted_level).collect();
                let run = harness::run_test(&calibrated, NullSpec::Fixed(0.0), Some(&levels))
                    .map_err(Failure::sampler)?;
                write_result(
                    out,
                    &format!("fig4_calibrated_power_n{n}.csv"),
                    &run.result,
                    &mut written,
                )?;
            }
        }
        Target::Memantine => {
            let input = datasets::memantine_input();
            let mut settings = AnalysisSettings::new(
                AmountPrior::uniform(input.current.n() as f64).map_err(Failure::sampler)?,
            );
            settings.chain = ChainConfig { seed, ..Default::default() };
            let methods = [
                Method::UipDirichlet,
                Method::UipJs,
                Method::Mpp,
                Method::Lcp,
                Method::Rmap,
            ];
            let report = analyze_regression_input(
                &input,
                &methods,
                &settings,
                Some(datasets::memantine_outcome_variances()),
            )
            .map_err(Failure::sampler)?;
            let labels: Vec<String> =
                input.historical.iter().map(|(l, _)| l.clone()).collect();
            report::print_analysis(&report, &labels);
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            let path = report::write_file(out, "memantine_report.json", &json)?;
            written.push(path.display().to_string());
            let path =
                report::write_file(out, "memantine_report.csv", &report::analysis_csv(&report))?;
            written.push(path.display().to_string());
        }
    }
    Ok(written)
}
