//! Bundled example data: arm-level NPI-change statistics from six
//! double-blind placebo-controlled memantine trials in Alzheimer's disease.
//! MEM-MD-12 serves as the current study; the other five are historical.

use crate::analysis::{HistoricalRecord, RegressionInput};
use crate::summaries::{ContinuousSummary, TwoArmGroupStats};

/// Arm-level statistics `(label, (n, mean, sd) treatment, (n, mean, sd) placebo)`.
pub const MEMANTINE_ARMS: [(&str, (u64, f64, f64), (u64, f64, f64)); 6] = [
    ("MEM-MD-12", (136, 0.97, 11.26), (125, 0.86, 11.08)),
    ("LU-99679", (146, -0.36, 10.40), (64, -2.23, 9.55)),
    ("MEM-MD-01", (133, -2.11, 15.12), (127, 0.51, 13.75)),
    ("MEM-MD-02", (171, -0.75, 11.03), (152, 2.78, 13.48)),
    ("MEM-MD-10", (107, 0.77, 12.06), (118, 2.83, 15.70)),
    ("MRZ-9605", (97, 0.09, 15.92), (84, 2.89, 16.13)),
];

fn arms(spec: &(&str, (u64, f64, f64), (u64, f64, f64))) -> TwoArmGroupStats<f64> {
    let (_, t, c) = spec;
    TwoArmGroupStats::new(
        ContinuousSummary::new(t.0, t.1, t.2).expect("valid treatment arm"),
        ContinuousSummary::new(c.0, c.1, c.2).expect("valid placebo arm"),
    )
}

/// The six trials as a ready-to-run regression input (current study first in
/// [`MEMANTINE_ARMS`], the rest as historical arm records).
pub fn memantine_input() -> RegressionInput {
    RegressionInput {
        current_label: MEMANTINE_ARMS[0].0.to_string(),
        current: arms(&MEMANTINE_ARMS[0]),
        historical: MEMANTINE_ARMS[1..]
            .iter()
            .map(|spec| (spec.0.to_string(), HistoricalRecord::Arms(arms(spec))))
            .collect(),
    }
}

/// Pooled per-study outcome variances (MLE convention), current study first.
/// These feed the outcome-scale conditional ESS.
pub fn memantine_outcome_variances() -> (f64, Vec<f64>) {
    let all: Vec<f64> = MEMANTINE_ARMS
        .iter()
        .map(|spec| arms(spec).pooled_mle_variance())
        .collect();
    (all[0], all[1..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_match_published_sizes() {
        let input = memantine_input();
        assert_eq!(input.current.n(), 261);
        let ns: Vec<u64> = input
            .historical
            .iter()
            .map(|(_, r)| match r {
                HistoricalRecord::Arms(a) => a.n(),
                HistoricalRecord::Coefficient(c) => c.n(),
            })
            .collect();
        assert_eq!(ns, vec![210, 260, 323, 225, 181]);
    }

    #[test]
    fn outcome_variances_are_plausible() {
        let (current, hist) = memantine_outcome_variances();
        assert!((current - 123.9).abs() < 0.5);
        assert_eq!(hist.len(), 5);
        for v in hist {
            assert!(v > 80.0 && v < 300.0);
        }
    }
}
