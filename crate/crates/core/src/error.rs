//! Crate-wide error type.

/// Errors produced by prior construction, samplers and the harness.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Confidence interval with `upper <= lower`.
    #[error("confidence interval has non-positive width: lower {lower}, upper {upper}")]
    NonPositiveWidth { lower: f64, upper: f64 },

    /// Confidence/credible level outside the open unit interval.
    #[error("level {0} is outside (0, 1)")]
    BadLevel(f64),

    /// A dataset summary violating its invariants (names the offending record).
    #[error("invalid summary: {0}")]
    InvalidSummary(String),

    /// Weight vector off the open simplex.
    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    /// Amount parameter M = 0 would give the prior infinite variance.
    #[error("amount parameter M = 0 yields an infinite-variance prior; use a noninformative prior instead")]
    DegeneratePrior,

    /// Beta moment matching impossible: requested variance exceeds what any
    /// Beta distribution with the requested mean can have.
    #[error("beta moment matching impossible: variance {var} >= mu(1-mu) = {bound}")]
    InvalidPriorMoments { var: f64, bound: f64 },

    /// Divergence between distributions of different families.
    #[error("divergence requires distributions of the same family")]
    VariantMismatch,

    /// Subsampled distance requested although the historical dataset is not
    /// larger than the current one.
    #[error("subsampling not applicable: historical size {n_hist} <= current size {n_current}")]
    NotApplicable { n_hist: u64, n_current: u64 },

    /// Subsampled distance requested with only summary statistics available.
    #[error("patient-level records are required for the subsampled distance")]
    NeedsPatientLevel,

    /// Invalid sampler configuration.
    #[error("invalid chain configuration: {0}")]
    Config(String),

    /// Posterior summary of an empty chain.
    #[error("chain holds no draws")]
    EmptyChain,

    /// Every power parameter is zero, so the power prior is flat.
    #[error("all power parameters are zero; the conditional prior is flat")]
    AllZeroPower,

    /// Endpoint kind not supported by the requested method.
    #[error("method `{method}` does not support {endpoint} endpoints")]
    UnsupportedEndpoint { method: String, endpoint: String },

    /// Marginal-ESS search hit the end of the grid.
    #[error("marginal ESS grid exhausted at m = {0}; enlarge the grid or reduce the amount upper bound")]
    GridExhausted(usize),

    /// No credible-interval level can bring the empirical size down to target.
    #[error("cannot calibrate size to {target}: the widest interval still rejects at rate {floor}")]
    Uncalibratable { target: f64, floor: f64 },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
