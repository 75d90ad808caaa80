//! Desk-scale simulator and analysis toolkit for a deterministic single-atom
//! cavity-QED delivery experiment.
//!
//! The crate models the full measurement chain of such an experiment:
//!
//! - [`cqed`] — closed-form atom-cavity physics: position-dependent coupling,
//!   the cavity scattering rate, cooperativity, and the photon detection chain.
//! - [`beams`] — Gaussian-beam propagation and the dipole-trap depth / Stark
//!   shift models for the optical conveyor and loading lattices.
//! - [`conveyor`] — frequency-ramp transport plans and the atom trajectories
//!   they produce, including drift and multi-pass sweeps.
//! - [`montecarlo`] — seeded stochastic generation: inhomogeneous Poisson
//!   photon counting, atom survival, and MOT birth-death fluorescence traces.
//! - [`analysis`] — recovery of the measured quantities from (simulated or
//!   imported) traces: change-point step counting, run averaging, and
//!   Levenberg-Marquardt fits (Gaussian, Lorentzian, linear).
//! - [`scenario`] — declarative experiment configurations, the scenario
//!   runner, and CSV/report output backing the `sim` command-line tool.
//!
//! All physics operations are pure functions of value-type inputs; all
//! stochastic generators draw from explicit [`montecarlo::RngStream`]s, so
//! identical configuration and seed reproduce byte-identical outputs.

pub mod analysis;
pub mod beams;
pub mod conveyor;
pub mod cqed;
pub mod error;
pub mod montecarlo;
pub mod params;
pub mod scenario;
pub mod stats;
pub mod units;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
