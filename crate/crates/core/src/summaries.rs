//! Dataset summaries: the sufficient statistics a borrowing analysis runs on.
//!
//! Every analysis in this crate consumes summary statistics of the kind
//! routinely reported in publications (sample sizes, means, standard
//! deviations, point estimates with confidence intervals). Patient-level
//! records are only ever needed for the optional subsampled distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::float::Real;
use crate::special::std_normal_quantile;

/// Summary of a continuous-outcome dataset.
///
/// `sd` is the conventional sample standard deviation (divisor `n - 1`), the
/// form publications report. Formulas that require the maximum-likelihood
/// variance apply the `(n - 1)/n` factor through [`mle_variance`](Self::mle_variance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousSummary<R> {
    n: u64,
    mean: R,
    sd: R,
}

impl<R: Real> ContinuousSummary<R> {
    pub fn new(n: u64, mean: R, sd: R) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSummary(format!(
                "continuous summary needs n >= 2, got {n}"
            )));
        }
        if !mean.is_finite() {
            return Err(Error::InvalidSummary("mean must be finite".into()));
        }
        if !(sd.is_finite() && sd > R::zero()) {
            return Err(Error::InvalidSummary(format!(
                "standard deviation must be finite and > 0, got {sd}"
            )));
        }
        Ok(Self { n, mean, sd })
    }

    /// Summarizes raw observations (sample mean, sample SD with divisor n-1).
    pub fn from_samples(samples: &[R]) -> Result<Self> {
        let n = samples.len() as u64;
        if n < 2 {
            return Err(Error::InvalidSummary(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        let nf = R::lit(n as f64);
        let mean = samples.iter().copied().sum::<R>() / nf;
        let ss = samples
            .iter()
            .map(|&y| (y - mean) * (y - mean))
            .sum::<R>();
        let sd = (ss / (nf - R::one())).sqrt();
        Self::new(n, mean, sd)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> R {
        self.mean
    }

    pub fn sd(&self) -> R {
        self.sd
    }

    /// Sample variance (divisor n-1).
    pub fn sample_variance(&self) -> R {
        self.sd * self.sd
    }

    /// Maximum-likelihood variance: `sd^2 (n-1)/n`.
    pub fn mle_variance(&self) -> R {
        let n = R::lit(self.n as f64);
        self.sd * self.sd * (n - R::one()) / n
    }
}

/// Pools continuous summaries into one summary of the concatenated data.
/// Exact: within- and between-group sums of squares recombine losslessly.
pub fn pool_continuous<R: Real>(parts: &[ContinuousSummary<R>]) -> Result<ContinuousSummary<R>> {
    if parts.is_empty() {
        return Err(Error::InvalidSummary("cannot pool zero summaries".into()));
    }
    let total_n: u64 = parts.iter().map(|s| s.n).sum();
    let nf = R::lit(total_n as f64);
    let mean = parts
        .iter()
        .map(|s| R::lit(s.n as f64) * s.mean)
        .sum::<R>()
        / nf;
    let ss = parts
        .iter()
        .map(|s| {
            let ni = R::lit(s.n as f64);
            (ni - R::one()) * s.sample_variance() + ni * (s.mean - mean) * (s.mean - mean)
        })
        .sum::<R>();
    let sd = (ss / (nf - R::one())).sqrt();
    ContinuousSummary::new(total_n, mean, sd)
}

/// Summary of a binary-outcome dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinarySummary {
    n: u64,
    successes: u64,
}

impl BinarySummary {
    pub fn new(n: u64, successes: u64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidSummary("binary summary needs n >= 1".into()));
        }
        if successes > n {
            return Err(Error::InvalidSummary(format!(
                "successes {successes} exceed sample size {n}"
            )));
        }
        Ok(Self { n, successes })
    }

    pub fn from_samples(samples: &[bool]) -> Result<Self> {
        let successes = samples.iter().filter(|&&b| b).count() as u64;
        Self::new(samples.len() as u64, successes)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    /// Raw success rate, possibly 0 or 1.
    pub fn rate<R: Real>(&self) -> R {
        R::lit(self.successes as f64) / R::lit(self.n as f64)
    }

    /// Success rate nudged off the boundary: `(y + 1/2)/(n + 1)` when the raw
    /// rate is exactly 0 or 1, unchanged otherwise. Interior estimates stay
    /// exact while the unit information stays finite.
    pub fn corrected_rate<R: Real>(&self) -> R {
        if self.successes == 0 || self.successes == self.n {
            (R::lit(self.successes as f64) + R::lit(0.5)) / (R::lit(self.n as f64) + R::one())
        } else {
            self.rate()
        }
    }
}

/// Pools binary summaries by adding counts.
pub fn pool_binary(parts: &[BinarySummary]) -> Result<BinarySummary> {
    if parts.is_empty() {
        return Err(Error::InvalidSummary("cannot pool zero summaries".into()));
    }
    BinarySummary::new(
        parts.iter().map(|s| s.n).sum(),
        parts.iter().map(|s| s.successes).sum(),
    )
}

/// Summary of one regression coefficient from a historical study: the point
/// estimate, its standard error, and the study's sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary<R> {
    estimate: R,
    se: R,
    n: u64,
}

impl<R: Real> CoefficientSummary<R> {
    pub fn new(estimate: R, se: R, n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSummary(format!(
                "coefficient summary needs n >= 2, got {n}"
            )));
        }
        if !estimate.is_finite() {
            return Err(Error::InvalidSummary("estimate must be finite".into()));
        }
        if !(se.is_finite() && se > R::zero()) {
            return Err(Error::InvalidSummary(format!(
                "standard error must be finite and > 0, got {se}"
            )));
        }
        Ok(Self { estimate, se, n })
    }

    /// Builds the summary from a published confidence interval.
    pub fn from_ci(estimate: R, lower: R, upper: R, level: R, n: u64) -> Result<Self> {
        Self::new(estimate, se_from_ci(lower, upper, level)?, n)
    }

    pub fn estimate(&self) -> R {
        self.estimate
    }

    pub fn se(&self) -> R {
        self.se
    }

    pub fn n(&self) -> u64 {
        self.n
    }
}

/// Arm-level statistics of a two-arm study for the linear model
/// `Y ~ intercept + effect * treated`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoArmGroupStats<R> {
    pub treatment: ContinuousSummary<R>,
    pub control: ContinuousSummary<R>,
}

impl<R: Real> TwoArmGroupStats<R> {
    pub fn new(treatment: ContinuousSummary<R>, control: ContinuousSummary<R>) -> Self {
        Self { treatment, control }
    }

    /// Total sample size across both arms.
    pub fn n(&self) -> u64 {
        self.treatment.n() + self.control.n()
    }

    /// Pooled residual variance around the arm means (MLE convention),
    /// the per-observation variance scale of the two-arm linear model.
    pub fn pooled_mle_variance(&self) -> R {
        let nt = R::lit(self.treatment.n() as f64);
        let nc = R::lit(self.control.n() as f64);
        let ss = (nt - R::one()) * self.treatment.sample_variance()
            + (nc - R::one()) * self.control.sample_variance();
        ss / (nt + nc)
    }
}

/// Standard error recovered from an equal-tailed confidence interval:
/// `(upper - lower) / (2 z)` with `z` the standard-normal quantile at
/// `(1 + level)/2`.
pub fn se_from_ci<R: Real>(lower: R, upper: R, level: R) -> Result<R> {
    if !(level > R::zero() && level < R::one()) {
        return Err(Error::BadLevel(level.as_f64()));
    }
    if upper <= lower {
        return Err(Error::NonPositiveWidth {
            lower: lower.as_f64(),
            upper: upper.as_f64(),
        });
    }
    let z = R::lit(std_normal_quantile((1.0 + level.as_f64()) / 2.0));
    Ok((upper - lower) / (R::lit(2.0) * z))
}

/// A historical data point on the normal scale: a location estimate, the
/// study's sample size, and the per-observation variance scale. Continuous
/// summaries map to `(mean, n, mle variance)`; coefficient summaries to
/// `(estimate, n, n * se^2)`, so that `variance / n = se^2` either way.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalEvidence<R> {
    pub estimate: R,
    pub n: u64,
    pub variance: R,
}

impl<R: Real> NormalEvidence<R> {
    pub fn new(estimate: R, n: u64, variance: R) -> Result<Self> {
        if !(variance.is_finite() && variance > R::zero()) {
            return Err(Error::InvalidSummary(format!(
                "per-observation variance must be finite and > 0, got {variance}"
            )));
        }
        Ok(Self { estimate, n, variance })
    }

    pub fn from_continuous(s: &ContinuousSummary<R>) -> Self {
        Self {
            estimate: s.mean(),
            n: s.n(),
            variance: s.mle_variance(),
        }
    }

    pub fn from_coefficient(c: &CoefficientSummary<R>) -> Self {
        Self {
            estimate: c.estimate(),
            n: c.n(),
            variance: R::lit(c.n() as f64) * c.se() * c.se(),
        }
    }

    /// Observed information carried by a single observation.
    pub fn unit_info(&self) -> R {
        R::one() / self.variance
    }

    /// Squared standard error of the estimate: `variance / n`.
    pub fn se2(&self) -> R {
        self.variance / R::lit(self.n as f64)
    }
}

/// Current study plus `K >= 1` historical studies on a continuous endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousStudies<R> {
    pub current: ContinuousSummary<R>,
    pub historical: Vec<ContinuousSummary<R>>,
    pub labels: Vec<String>,
}

impl<R: Real> ContinuousStudies<R> {
    pub fn new(
        current: ContinuousSummary<R>,
        historical: Vec<ContinuousSummary<R>>,
        labels: Vec<String>,
    ) -> Result<Self> {
        check_study_set(historical.len(), &labels)?;
        Ok(Self { current, historical, labels })
    }

    pub fn evidence(&self) -> Vec<NormalEvidence<R>> {
        self.historical.iter().map(NormalEvidence::from_continuous).collect()
    }
}

/// Current study plus historical studies on a binary endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryStudies {
    pub current: BinarySummary,
    pub historical: Vec<BinarySummary>,
    pub labels: Vec<String>,
}

impl BinaryStudies {
    pub fn new(
        current: BinarySummary,
        historical: Vec<BinarySummary>,
        labels: Vec<String>,
    ) -> Result<Self> {
        check_study_set(historical.len(), &labels)?;
        Ok(Self { current, historical, labels })
    }

    /// Boundary-corrected historical rates.
    pub fn corrected_rates<R: Real>(&self) -> Vec<R> {
        self.historical.iter().map(|b| b.corrected_rate()).collect()
    }
}

/// Two-arm current study plus historical coefficient summaries for the
/// treatment effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionStudies<R> {
    pub current: TwoArmGroupStats<R>,
    pub historical: Vec<CoefficientSummary<R>>,
    pub labels: Vec<String>,
}

impl<R: Real> RegressionStudies<R> {
    pub fn new(
        current: TwoArmGroupStats<R>,
        historical: Vec<CoefficientSummary<R>>,
        labels: Vec<String>,
    ) -> Result<Self> {
        check_study_set(historical.len(), &labels)?;
        Ok(Self { current, historical, labels })
    }

    pub fn evidence(&self) -> Vec<NormalEvidence<R>> {
        self.historical.iter().map(NormalEvidence::from_coefficient).collect()
    }
}

/// A borrowing problem of any endpoint kind; the dispatch type for samplers
/// and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StudySet<R> {
    Continuous(ContinuousStudies<R>),
    Binary(BinaryStudies),
    Regression(RegressionStudies<R>),
}

impl<R: Real> StudySet<R> {
    pub fn endpoint_name(&self) -> &'static str {
        match self {
            Self::Continuous(_) => "continuous",
            Self::Binary(_) => "binary",
            Self::Regression(_) => "regression",
        }
    }

    pub fn historical_len(&self) -> usize {
        match self {
            Self::Continuous(s) => s.historical.len(),
            Self::Binary(s) => s.historical.len(),
            Self::Regression(s) => s.historical.len(),
        }
    }

    pub fn current_n(&self) -> u64 {
        match self {
            Self::Continuous(s) => s.current.n(),
            Self::Binary(s) => s.current.n(),
            Self::Regression(s) => s.current.n(),
        }
    }

    pub fn historical_ns(&self) -> Vec<u64> {
        match self {
            Self::Continuous(s) => s.historical.iter().map(|h| h.n()).collect(),
            Self::Binary(s) => s.historical.iter().map(|h| h.n()).collect(),
            Self::Regression(s) => s.historical.iter().map(|h| h.n()).collect(),
        }
    }
}

fn check_study_set(k: usize, labels: &[String]) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidSummary(
            "a study set needs at least one historical study".into(),
        ));
    }
    if !labels.is_empty() && labels.len() != k {
        return Err(Error::InvalidSummary(format!(
            "{} labels for {k} historical studies",
            labels.len()
        )));
    }
    Ok(())
}
