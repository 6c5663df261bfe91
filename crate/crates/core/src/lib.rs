//! Stochastic terahertz channel simulation and analysis.
//!
//! Generation runs parameter set -> correlated large-scale parameters ([`lsp`]) ->
//! clusters and rays ([`cluster`]) -> tap coefficients ([`coeff`]). The
//! [`analysis`] side extracts delay spread, angular spread, K-factor, path loss and
//! cluster statistics from power-delay data, which closes the loop through
//! [`roundtrip`]. [`capacity`] runs the MIMO capacity comparison.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod antenna;
pub mod capacity;
pub mod cluster;
pub mod coeff;
pub mod drop;
pub mod field;
pub mod lsp;
pub mod params;
pub mod pathloss;
pub mod psd;
pub mod rng;
pub mod roundtrip;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
