//! Extraction of channel statistics from power-delay data.
//!
//! * [`pdp`]: delay and angular power profiles and the DS/ASA/K estimators on them.
//! * [`spread`]: the same estimators on plain (value, power) slices.
//! * [`mpc`]: multipath components.
//! * [`kpm`]: K-power-means clustering with the multipath component distance.
//! * [`stats`]: distribution fits, correlation and correlation distance.

pub mod kpm;
pub mod mpc;
pub mod pdp;
pub mod spread;
pub mod stats;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("total power is zero")]
    ZeroPower,
    #[error("negative power {0}")]
    NegativePower(f64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("PDPs do not share a delay grid")]
    InconsistentGrid,
    #[error("delay step must be positive")]
    BadStep,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("lognormal fit needs positive samples, got {0}")]
    NonPositiveSample(f64),
    #[error("zero variance in column {0}")]
    ZeroVariance(usize),
    #[error("autocorrelation never falls to 1/e; track too short")]
    TrackTooShort,
    #[error("cluster count {k} exceeds the {n} available MPCs")]
    TooManyClusters { k: usize, n: usize },
    #[error("cluster count must be at least one")]
    ZeroClusters,
    #[error("MPC set carries no cluster labels")]
    Unlabeled,
    #[error("cluster {0} has no members")]
    EmptyCluster(usize),
    #[error("delay {0} s is negative or not finite")]
    NegativeDelay(f64),
    #[error("negative margin {0} dB")]
    NegativeMargin(f64),
}
