//! Report rendering: human-readable tables on stdout, flat CSVs and JSON
//! documents on disk. All file output is a deterministic function of the
//! analysis results.

use std::fmt::Write as FmtWrite;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use uip_core::analysis::AnalysisReport;
use uip_core::divergence::DistanceReport;
use uip_core::ess::EssResult;
use uip_core::harness::{Calibration, ScenarioResult};

/// Writes `content` under `dir/name`, creating the directory if needed.
pub fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn scenario_csv(result: &ScenarioResult) -> String {
    let mut buf = Vec::new();
    result.write_csv(&mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

/// Flat CSV of an analysis report: one row per method and quantity.
pub fn analysis_csv(report: &AnalysisReport) -> String {
    let mut out = String::from("method,quantity,value,sd,lower,upper\n");
    for fit in &report.separate {
        for (name, s) in [("beta0", fit.intercept), ("beta1", fit.effect)] {
            let _ = writeln!(
                out,
                "separate:{},{name},{},{},{},{}",
                fit.label, s.mean, s.sd, s.lower, s.upper
            );
        }
    }
    for m in &report.methods {
        for (name, s) in &m.parameters {
            let _ = writeln!(
                out,
                "{},{name},{},{},{},{}",
                m.method.name(),
                s.mean,
                s.sd,
                s.lower,
                s.upper
            );
        }
        if let Some(weights) = &m.weights {
            for (k, w) in weights.iter().enumerate() {
                let _ = writeln!(out, "{},w{},{w},,,", m.method.name(), k + 1);
            }
        }
        if let Some(amount) = m.amount_mean {
            let _ = writeln!(out, "{},m,{amount},,,", m.method.name());
        }
        if let Some(ess) = m.ess_conditional {
            let _ = writeln!(out, "{},ess_conditional,{ess},,,", m.method.name());
        }
        if let Some(EssResult { value, .. }) = m.ess_marginal {
            let _ = writeln!(out, "{},ess_marginal,{value},,,", m.method.name());
        }
    }
    out
}

/// Stdout table of an analysis report.
pub fn print_analysis(report: &AnalysisReport, labels: &[String]) {
    let pct = (report.level * 100.0).round();
    if !report.separate.is_empty() {
        println!("Separate fits (noninformative priors, {pct}% intervals)");
        println!(
            "  {:<12} {:>10} {:>22} {:>10} {:>22}",
            "study", "intercept", "interval", "effect", "interval"
        );
        for fit in &report.separate {
            println!(
                "  {:<12} {:>10.3} {:>22} {:>10.3} {:>22}",
                fit.label,
                fit.intercept.mean,
                format!("({:.3}, {:.3})", fit.intercept.lower, fit.intercept.upper),
                fit.effect.mean,
                format!("({:.3}, {:.3})", fit.effect.lower, fit.effect.upper),
            );
        }
        println!();
    }
    if let Some(weights) = &report.elicited_weights {
        println!("Elicited weights (inverse divergence)");
        for (label, w) in labels.iter().zip(weights) {
            println!("  {label:<12} {w:.4}");
        }
        println!();
    }
    if report.methods.is_empty() {
        return;
    }
    println!("Borrowing analyses ({pct}% intervals)");
    for m in &report.methods {
        println!("  {}", m.method.name());
        for (name, s) in &m.parameters {
            println!(
                "    {:<16} {:>8.3}  ({:.3}, {:.3})  sd {:.3}",
                name, s.mean, s.lower, s.upper, s.sd
            );
        }
        if let Some(amount) = m.amount_mean {
            println!("    {:<16} {amount:>8.1}", "amount (mean)");
        }
        if let Some(weights) = &m.weights {
            let rendered: Vec<String> = weights.iter().map(|w| format!("{w:.3}")).collect();
            println!("    {:<16} ({})", "weights", rendered.join(", "));
        }
        if let Some(ess) = m.ess_conditional {
            println!("    {:<16} {ess:>8.1}", "ESS (cond.)");
        }
        if let Some(EssResult { value, mc_error, .. }) = m.ess_marginal {
            let err = mc_error.map_or(String::new(), |e| format!("  (split-half {e:.1})"));
            println!("    {:<16} {value:>8.1}{err}", "ESS (marginal)");
        }
    }
}

/// CSV of a divergence report plus the weights it implies.
pub fn weights_csv(labels: &[String], distances: &DistanceReport<f64>, weights: &[f64]) -> String {
    let mut out = String::from("study,divergence,capped,weight\n");
    for (((label, d), capped), w) in labels
        .iter()
        .zip(&distances.distances)
        .zip(&distances.subsampled)
        .zip(weights)
    {
        let _ = writeln!(out, "{label},{d},{capped},{w}");
    }
    out
}

pub fn print_weights(labels: &[String], distances: &DistanceReport<f64>, weights: &[f64]) {
    println!(
        "{:<14} {:>12} {:>8} {:>10}",
        "study", "divergence", "capped", "weight"
    );
    for (((label, d), capped), w) in labels
        .iter()
        .zip(&distances.distances)
        .zip(&distances.subsampled)
        .zip(weights)
    {
        println!("{label:<14} {d:>12.5} {capped:>8} {w:>10.4}");
    }
}

/// CSV of an ESS evaluation: one row per amount value.
pub fn ess_csv(rows: &[(f64, f64, EssResult)]) -> String {
    let mut out = String::from("amount,conditional_ess,marginal_ess,marginal_mc_error\n");
    for (amount, conditional, marginal) in rows {
        let _ = writeln!(
            out,
            "{amount},{conditional},{},{}",
            marginal.value,
            marginal.mc_error.unwrap_or(f64::NAN)
        );
    }
    out
}

pub fn print_ess(rows: &[(f64, f64, EssResult)]) {
    println!("{:>8} {:>16} {:>14}", "amount", "conditional", "marginal");
    for (amount, conditional, marginal) in rows {
        println!(
            "{amount:>8.1} {conditional:>16.2} {:>14.1}",
            marginal.value
        );
    }
}

/// CSV of a calibration pass.
pub fn calibration_csv(calibrations: &[Calibration]) -> String {
    let mut out = String::from("method,adjusted_level,floor,calibratable\n");
    for c in calibrations {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            c.method.name(),
            c.adjusted_level.map_or(String::new(), |l| l.to_string()),
            c.floor,
            c.adjusted_level.is_some()
        );
    }
    out
}
