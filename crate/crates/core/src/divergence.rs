//! Jensen–Shannon weight elicitation.
//!
//! Three steps: form noninformative initial posteriors for the current and
//! each historical dataset, measure their pairwise divergence
//! `d_k = (KL(cur || hist_k) + KL(hist_k || cur)) / 2`, then set
//! `w_k = (1/d_k) / sum_s (1/d_s)` with a 1e-6 floor on each distance.
//! Oversized historical datasets (`n_k > n`) are either subsampled when
//! patient-level records exist or replaced by a surrogate posterior whose
//! information content is capped at `n` observations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::float::Real;
use crate::special::{digamma, ln_beta};
use crate::summaries::{BinarySummary, ContinuousSummary, NormalEvidence};

/// Floor applied to each divergence before inversion, guarding against
/// identical datasets.
pub const DISTANCE_FLOOR: f64 = 1e-6;

/// Default number of subsample repeats when a historical dataset is larger
/// than the current one.
pub const DEFAULT_SUBSAMPLE_REPEATS: u32 = 100;

/// Posterior of the parameter of interest under a noninformative prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialPosterior<R> {
    Normal { mean: R, var: R },
    Beta { a: R, b: R },
}

impl<R: Real> InitialPosterior<R> {
    /// Plug-in normal posterior of a continuous mean: `N(mean, mle_var / n)`.
    pub fn continuous(s: &ContinuousSummary<R>) -> Self {
        Self::Normal {
            mean: s.mean(),
            var: s.mle_variance() / R::lit(s.n() as f64),
        }
    }

    /// Exact Jeffreys posterior of a Bernoulli rate:
    /// `Beta(y + 1/2, n - y + 1/2)`.
    pub fn binary(b: &BinarySummary) -> Self {
        Self::Beta {
            a: R::lit(b.successes() as f64) + R::lit(0.5),
            b: R::lit((b.n() - b.successes()) as f64) + R::lit(0.5),
        }
    }

    /// Normal posterior of a regression coefficient: `N(estimate, se^2)`.
    pub fn evidence(e: &NormalEvidence<R>) -> Self {
        Self::Normal {
            mean: e.estimate,
            var: e.se2(),
        }
    }
}

/// Divergences from the current dataset to each historical one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport<R> {
    /// Jensen–Shannon divergence per historical dataset, floored at 1e-6.
    pub distances: Vec<R>,
    /// Whether the capped surrogate (or subsampling) was used for study k.
    pub subsampled: Vec<bool>,
    /// Subsample repeats actually drawn (0 for the purely closed-form path).
    pub repeats_used: u32,
}

/// Kullback–Leibler divergence `KL(p || q)` in nats, closed form.
pub fn kl_divergence<R: Real>(p: &InitialPosterior<R>, q: &InitialPosterior<R>) -> Result<R> {
    match (*p, *q) {
        (
            InitialPosterior::Normal { mean: mp, var: vp },
            InitialPosterior::Normal { mean: mq, var: vq },
        ) => {
            let half = R::lit(0.5);
            let d = mp - mq;
            Ok(half * (vq / vp).ln() + (vp + d * d) / (R::lit(2.0) * vq) - half)
        }
        (InitialPosterior::Beta { a, b }, InitialPosterior::Beta { a: c, b: d }) => {
            let (a, b, c, d) = (a.as_f64(), b.as_f64(), c.as_f64(), d.as_f64());
            let kl = ln_beta(c, d) - ln_beta(a, b)
                + (a - c) * digamma(a)
                + (b - d) * digamma(b)
                + (c - a + d - b) * digamma(a + b);
            Ok(R::lit(kl))
        }
        _ => Err(Error::VariantMismatch),
    }
}

/// Symmetrized divergence: the average of both KL directions.
pub fn js_distance<R: Real>(p: &InitialPosterior<R>, q: &InitialPosterior<R>) -> Result<R> {
    Ok((kl_divergence(p, q)? + kl_divergence(q, p)?) / R::lit(2.0))
}

/// Patient-level records, needed only when subsampling an oversized
/// historical dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum PatientData<R> {
    Continuous(Vec<R>),
    Binary(Vec<bool>),
}

impl<R: Real> PatientData<R> {
    pub fn len(&self) -> usize {
        match self {
            Self::Continuous(v) => v.len(),
            Self::Binary(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn initial_posterior(&self) -> Result<InitialPosterior<R>> {
        match self {
            Self::Continuous(v) => Ok(InitialPosterior::continuous(
                &ContinuousSummary::from_samples(v)?,
            )),
            Self::Binary(v) => Ok(InitialPosterior::binary(&BinarySummary::from_samples(v)?)),
        }
    }

    fn subsample(&self, indices: &[usize]) -> Self {
        match self {
            Self::Continuous(v) => Self::Continuous(indices.iter().map(|&i| v[i]).collect()),
            Self::Binary(v) => Self::Binary(indices.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Averaged divergence over `repeats` size-`n` subsamples (drawn without
/// replacement) of an oversized historical dataset. Deterministic for a
/// fixed seed; repeat `l` uses seed `seed + l`.
pub fn js_distance_subsampled<R: Real>(
    current: &PatientData<R>,
    historical: &PatientData<R>,
    repeats: u32,
    seed: u64,
) -> Result<R> {
    let n = current.len() as u64;
    let n_hist = historical.len() as u64;
    if n_hist <= n {
        return Err(Error::NotApplicable {
            n_hist,
            n_current: n,
        });
    }
    if repeats == 0 {
        return Err(Error::Config("subsample repeats must be >= 1".into()));
    }
    let current_posterior = current.initial_posterior()?;
    let mut total = R::zero();
    for l in 0..repeats {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(l as u64));
        let indices =
            rand::seq::index::sample(&mut rng, historical.len(), current.len()).into_vec();
        let sub = historical.subsample(&indices);
        total += js_distance(&current_posterior, &sub.initial_posterior()?)?;
    }
    Ok(total / R::lit(repeats as f64))
}

/// Weights from a distance report: inverse distances, normalized, with the
/// 1e-6 floor applied first.
pub fn js_weights<R: Real>(report: &DistanceReport<R>) -> Result<crate::prior::WeightVector<R>> {
    let floor = R::lit(DISTANCE_FLOOR);
    let inverted: Vec<R> = report
        .distances
        .iter()
        .map(|&d| R::one() / d.max(floor))
        .collect();
    crate::prior::WeightVector::from_unnormalized(&inverted)
}

/// Closed-form distance report for normal-scale evidence (continuous or
/// coefficient history). Oversized studies get the capped surrogate
/// `N(estimate, variance / n_current)`, which mimics the expected posterior
/// of a size-`n_current` subsample.
pub fn distances_normal<R: Real>(
    current: &NormalEvidence<R>,
    historical: &[NormalEvidence<R>],
) -> Result<DistanceReport<R>> {
    let cur = InitialPosterior::evidence(current);
    let mut distances = Vec::with_capacity(historical.len());
    let mut subsampled = Vec::with_capacity(historical.len());
    for e in historical {
        let capped = e.n > current.n;
        let posterior = if capped {
            InitialPosterior::Normal {
                mean: e.estimate,
                var: e.variance / R::lit(current.n as f64),
            }
        } else {
            InitialPosterior::evidence(e)
        };
        distances.push(js_distance(&cur, &posterior)?);
        subsampled.push(capped);
    }
    Ok(DistanceReport {
        distances,
        subsampled,
        repeats_used: 0,
    })
}

/// Closed-form distance report for binary studies. An oversized study is
/// replaced by the Jeffreys posterior of `n_current` observations at the same
/// raw rate (fractional pseudo-counts).
pub fn distances_binary<R: Real>(
    current: &BinarySummary,
    historical: &[BinarySummary],
) -> Result<DistanceReport<R>> {
    let cur = InitialPosterior::binary(current);
    let mut distances = Vec::with_capacity(historical.len());
    let mut subsampled = Vec::with_capacity(historical.len());
    for b in historical {
        let capped = b.n() > current.n();
        let posterior = if capped {
            let n = R::lit(current.n() as f64);
            let rate: R = b.rate();
            InitialPosterior::Beta {
                a: n * rate + R::lit(0.5),
                b: n * (R::one() - rate) + R::lit(0.5),
            }
        } else {
            InitialPosterior::binary(b)
        };
        distances.push(js_distance(&cur, &posterior)?);
        subsampled.push(capped);
    }
    Ok(DistanceReport {
        distances,
        subsampled,
        repeats_used: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::WeightVector;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Simpson-rule KL between two densities given by their log-densities on
    /// [lo, hi]; the independent oracle for the closed forms. Working in logs
    /// keeps the integrand finite where one density underflows.
    fn kl_quadrature(
        lo: f64,
        hi: f64,
        nodes: usize,
        ln_f: impl Fn(f64) -> f64,
        ln_g: impl Fn(f64) -> f64,
    ) -> f64 {
        let n = if nodes % 2 == 0 { nodes } else { nodes + 1 };
        let h = (hi - lo) / n as f64;
        let integrand = |x: f64| {
            let lf = ln_f(x);
            if lf < -700.0 || !lf.is_finite() {
                0.0
            } else {
                lf.exp() * (lf - ln_g(x))
            }
        };
        let mut acc = integrand(lo) + integrand(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * integrand(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    fn normal_ln_pdf(mean: f64, var: f64) -> impl Fn(f64) -> f64 {
        move |x| {
            let d = x - mean;
            -0.5 * (d * d / var + (2.0 * std::f64::consts::PI * var).ln())
        }
    }

    fn beta_ln_pdf(a: f64, b: f64) -> impl Fn(f64) -> f64 {
        move |x| (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(a, b)
    }

    #[test]
    fn kl_zero_for_identical() {
        let p = InitialPosterior::Normal { mean: 1.3, var: 0.7 };
        assert_abs_diff_eq!(kl_divergence(&p, &p).unwrap(), 0.0, epsilon = 1e-14);
        let q = InitialPosterior::Beta { a: 3.0, b: 5.0 };
        assert_abs_diff_eq!(kl_divergence(&q, &q).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn kl_normal_unit_shift() {
        let p = InitialPosterior::Normal { mean: 0.0, var: 1.0 };
        let q = InitialPosterior::Normal { mean: 1.0, var: 1.0 };
        assert_abs_diff_eq!(kl_divergence(&p, &q).unwrap(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(js_distance(&p, &q).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn kl_beta_against_quadrature() {
        let p = InitialPosterior::Beta { a: 2.0, b: 2.0 };
        let q = InitialPosterior::Beta { a: 1.0, b: 1.0 };
        let closed = kl_divergence(&p, &q).unwrap();
        // ln 6 + 2 psi(2) - 2 psi(4)
        assert_abs_diff_eq!(closed, 0.125_092_88, epsilon = 1e-7);
        let quad = kl_quadrature(
            1e-9,
            1.0 - 1e-9,
            10_000,
            beta_ln_pdf(2.0, 2.0),
            beta_ln_pdf(1.0, 1.0),
        );
        assert_abs_diff_eq!(closed, quad, epsilon = 1e-6);
    }

    #[test]
    fn kl_mismatched_families() {
        let p = InitialPosterior::Normal { mean: 0.0, var: 1.0 };
        let q = InitialPosterior::Beta { a: 1.0, b: 1.0 };
        assert_eq!(kl_divergence(&p, &q), Err(Error::VariantMismatch));
    }

    #[test]
    fn initial_posterior_examples() {
        let b = BinarySummary::new(10, 5).unwrap();
        assert_eq!(
            InitialPosterior::<f64>::binary(&b),
            InitialPosterior::Beta { a: 5.5, b: 5.5 }
        );

        let s = ContinuousSummary::new(100, 0.0, 1.0).unwrap();
        let InitialPosterior::Normal { mean, var } = InitialPosterior::continuous(&s) else {
            panic!("expected normal");
        };
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(var, 0.0099, epsilon = 1e-15);

        // Coefficient with se recovered from a published 95% CI.
        let c = crate::summaries::CoefficientSummary::from_ci(1.819, -1.185, 4.744, 0.95, 210)
            .unwrap();
        let e = NormalEvidence::from_coefficient(&c);
        let InitialPosterior::Normal { mean, var } = InitialPosterior::evidence(&e) else {
            panic!("expected normal");
        };
        assert_abs_diff_eq!(mean, 1.819, epsilon = 1e-12);
        assert_abs_diff_eq!(var, 2.2877, epsilon = 5e-4);
    }

    #[test]
    fn js_weights_examples() {
        let report = DistanceReport {
            distances: vec![1.0, 1.0, 1.0],
            subsampled: vec![false; 3],
            repeats_used: 0,
        };
        let w = js_weights(&report).unwrap();
        for &wk in w.as_slice() {
            assert_abs_diff_eq!(wk, 1.0 / 3.0, epsilon = 1e-15);
        }

        let report = DistanceReport {
            distances: vec![1.0, 2.0],
            subsampled: vec![false; 2],
            repeats_used: 0,
        };
        let w = js_weights(&report).unwrap();
        assert_abs_diff_eq!(w.as_slice()[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.as_slice()[1], 1.0 / 3.0, epsilon = 1e-15);

        // Zero distance hits the floor instead of dividing by zero.
        let report = DistanceReport {
            distances: vec![0.0, 1.0],
            subsampled: vec![false; 2],
            repeats_used: 0,
        };
        let w = js_weights(&report).unwrap();
        assert_abs_diff_eq!(w.as_slice()[0], 1e6 / (1e6 + 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(w.as_slice()[1], 1.0 / (1e6 + 1.0), epsilon = 1e-12);
    }

    #[test]
    fn subsampled_distance_gates_and_determinism() {
        let current = PatientData::Continuous((0..50).map(|i| (i as f64) * 0.1).collect());
        let small = PatientData::Continuous(vec![0.0; 30]);
        assert_eq!(
            js_distance_subsampled(&current, &small, 10, 7),
            Err(Error::NotApplicable { n_hist: 30, n_current: 50 })
        );

        let big = PatientData::Continuous((0..200).map(|i| ((i % 50) as f64) * 0.1).collect());
        let d1: f64 = js_distance_subsampled(&current, &big, 25, 7).unwrap();
        let d2: f64 = js_distance_subsampled(&current, &big, 25, 7).unwrap();
        assert_eq!(d1, d2);
        let d3: f64 = js_distance_subsampled(&current, &big, 25, 8).unwrap();
        assert_ne!(d1, d3);
    }

    #[test]
    fn subsampled_distance_tracks_population_agreement() {
        // Historical data replicating the current empirical distribution sits
        // far closer than a shifted population, and the residual distance
        // shrinks as the subsample covers most of the historical dataset.
        // Seed kept a whole multiple of every dataset so all of them share one
        // empirical distribution.
        let seed_pts: Vec<f64> = (0..50).map(|i| (i as f64) / 5.0).collect();
        let copies = |c: usize| -> Vec<f64> {
            seed_pts.iter().copied().cycle().take(50 * c).collect()
        };
        let hist = PatientData::Continuous(copies(6)); // n_k = 300

        let matching = PatientData::Continuous(copies(2)); // n = 100
        let shifted =
            PatientData::Continuous(copies(2).iter().map(|y| y + 9.0).collect::<Vec<_>>());
        let d_match: f64 = js_distance_subsampled(&matching, &hist, 100, 11).unwrap();
        let d_shift: f64 = js_distance_subsampled(&shifted, &hist, 100, 11).unwrap();
        assert!(
            d_match < 0.05 * d_shift,
            "matching {d_match} vs shifted {d_shift}"
        );

        // Subsample fraction 250/300: without-replacement draws almost
        // reproduce the historical data, so the distance collapses.
        let dense = PatientData::Continuous(copies(5));
        let d_dense: f64 = js_distance_subsampled(&dense, &hist, 100, 11).unwrap();
        assert!(d_dense < 0.5 * d_match, "dense {d_dense} vs sparse {d_match}");
    }

    #[test]
    fn capped_surrogate_flags_oversized_studies() {
        let cur = NormalEvidence::new(0.0, 100, 1.0).unwrap();
        let hist = [
            NormalEvidence::new(0.5, 80, 1.0).unwrap(),
            NormalEvidence::new(0.5, 140, 1.0).unwrap(),
        ];
        let report = distances_normal(&cur, &hist).unwrap();
        assert_eq!(report.subsampled, vec![false, true]);
        // The capped study carries less information, so it sits closer in
        // variance to the current posterior than the raw posterior would.
        let raw = js_distance(
            &InitialPosterior::evidence(&cur),
            &InitialPosterior::evidence(&hist[1]),
        )
        .unwrap();
        assert!(report.distances[1] < raw);
    }

    #[test]
    fn binary_distances_match_direct_js() {
        let cur = BinarySummary::new(40, 12).unwrap();
        let hist = [BinarySummary::new(40, 20).unwrap()];
        let report: DistanceReport<f64> = distances_binary(&cur, &hist).unwrap();
        let direct = js_distance(
            &InitialPosterior::<f64>::binary(&cur),
            &InitialPosterior::binary(&hist[0]),
        )
        .unwrap();
        assert_abs_diff_eq!(report.distances[0], direct, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn js_is_symmetric(
            m1 in -5.0f64..5.0, v1 in 0.01f64..10.0,
            m2 in -5.0f64..5.0, v2 in 0.01f64..10.0,
        ) {
            let p = InitialPosterior::Normal { mean: m1, var: v1 };
            let q = InitialPosterior::Normal { mean: m2, var: v2 };
            let fw = js_distance(&p, &q).unwrap();
            let bw = js_distance(&q, &p).unwrap();
            prop_assert!((fw - bw).abs() < 1e-12);
        }

        #[test]
        fn js_beta_symmetric_and_nonnegative(
            a1 in 0.5f64..30.0, b1 in 0.5f64..30.0,
            a2 in 0.5f64..30.0, b2 in 0.5f64..30.0,
        ) {
            let p = InitialPosterior::Beta { a: a1, b: b1 };
            let q = InitialPosterior::Beta { a: a2, b: b2 };
            let fw = js_distance(&p, &q).unwrap();
            let bw = js_distance(&q, &p).unwrap();
            prop_assert!((fw - bw).abs() < 1e-10);
            prop_assert!(fw >= -1e-12);
        }

        #[test]
        fn kl_nonnegative_zero_iff_equal(
            m1 in -5.0f64..5.0, v1 in 0.01f64..10.0,
            m2 in -5.0f64..5.0, v2 in 0.01f64..10.0,
        ) {
            let p = InitialPosterior::Normal { mean: m1, var: v1 };
            let q = InitialPosterior::Normal { mean: m2, var: v2 };
            let kl = kl_divergence(&p, &q).unwrap();
            prop_assert!(kl >= -1e-13);
            if (m1 - m2).abs() > 1e-3 || (v1 - v2).abs() > 1e-3 {
                prop_assert!(kl > 0.0);
            }
        }

        #[test]
        fn normal_kl_matches_quadrature(
            m1 in -2.0f64..2.0, v1 in 0.2f64..4.0,
            m2 in -2.0f64..2.0, v2 in 0.2f64..4.0,
        ) {
            let p = InitialPosterior::Normal { mean: m1, var: v1 };
            let q = InitialPosterior::Normal { mean: m2, var: v2 };
            let closed = kl_divergence(&p, &q).unwrap();
            let sd = v1.sqrt();
            let quad = kl_quadrature(
                m1 - 14.0 * sd,
                m1 + 14.0 * sd,
                10_000,
                normal_ln_pdf(m1, v1),
                normal_ln_pdf(m2, v2),
            );
            prop_assert!((closed - quad).abs() < 1e-6, "closed {closed} vs quad {quad}");
        }

        #[test]
        fn weights_scale_invariant(
            d in prop::collection::vec(0.01f64..100.0, 2..6),
            c in 0.1f64..10.0,
        ) {
            let base = DistanceReport { distances: d.clone(), subsampled: vec![false; d.len()], repeats_used: 0 };
            let scaled = DistanceReport {
                distances: d.iter().map(|&x| x * c).collect(),
                subsampled: vec![false; d.len()],
                repeats_used: 0,
            };
            let w0 = js_weights(&base).unwrap();
            let w1 = js_weights(&scaled).unwrap();
            for (a, b) in w0.as_slice().iter().zip(w1.as_slice()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            let _valid: &WeightVector<f64> = &w0;
        }
    }
}
