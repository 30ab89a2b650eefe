//! Unit-information priors for adaptive borrowing from historical datasets.
//!
//! The closed-form layer (summaries, prior construction, divergences,
//! effective sample sizes) is generic over the scalar type through
//! [`float::Real`]; the samplers, analyses and the simulation harness run at
//! `f64`. The aliases below fix the default scalar for downstream code.

pub mod analysis;
pub mod compare;
pub mod datasets;
pub mod divergence;
pub mod error;
pub mod ess;
pub mod float;
pub mod harness;
pub mod mcmc;
pub mod prior;
pub mod regression;
pub mod special;
pub mod summaries;

pub use error::{Error, Result};

/// Default scalar of the samplers and the CLI.
pub type Scalar = f64;

pub type ContinuousSummary = summaries::ContinuousSummary<Scalar>;
pub type BinarySummary = summaries::BinarySummary;
pub type CoefficientSummary = summaries::CoefficientSummary<Scalar>;
pub type TwoArmGroupStats = summaries::TwoArmGroupStats<Scalar>;
pub type NormalEvidence = summaries::NormalEvidence<Scalar>;
pub type ContinuousStudies = summaries::ContinuousStudies<Scalar>;
pub type BinaryStudies = summaries::BinaryStudies;
pub type RegressionStudies = summaries::RegressionStudies<Scalar>;
pub type StudySet = summaries::StudySet<Scalar>;
pub type WeightVector = prior::WeightVector<Scalar>;
pub type AmountPrior = prior::AmountPrior<Scalar>;
pub type ConditionalPrior = prior::ConditionalPrior<Scalar>;
pub type InitialPosterior = divergence::InitialPosterior<Scalar>;
pub type DistanceReport = divergence::DistanceReport<Scalar>;
