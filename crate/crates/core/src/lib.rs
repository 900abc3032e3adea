//! Downlink model and simulator for cellular networks that coordinate
//! inter-cell interference with almost-blank subframes (ABS) and serve
//! device groups through an elected relay.
//!
//! The crate is organized in layers:
//!
//! - [`mcs`] / [`deploy`] / [`radio`]: link-level building blocks — MCS
//!   lookup tables, base-station deployments, log-distance pathloss, and the
//!   closed-form SINR distribution of a Rayleigh-faded link under a set of
//!   Rayleigh-faded interferers plus squared-Gaussian noise.
//! - [`states`]: ABS states (subsets of active stations), association,
//!   weighted scheduler shares, and per-state group/system throughput for a
//!   concrete placement snapshot.
//! - [`asymptotic`]: long-run expectations of the same quantities when group
//!   positions follow a spatial distribution instead of a snapshot.
//! - [`optimizer`]: proportional-fair and max-throughput optimization over
//!   the probabilities with which each ABS state is scheduled, plus pattern
//!   realization (state probabilities -> concrete subframe patterns).
//! - [`sim`]: event-driven subframe simulator (WRR scheduling, exponential
//!   fading, random-waypoint mobility) used to validate the model and to
//!   evaluate blanking policies end to end.
//! - [`harness`]: JSON scenario configs, grid deployment generation, and
//!   multi-seed / multi-policy experiment suites with CSV + manifest output.

pub mod asymptotic;
pub mod deploy;
pub mod error;
pub mod harness;
pub mod mcs;
pub mod optimizer;
pub mod radio;
pub mod seeding;
pub mod sim;
pub mod states;

pub use asymptotic::{AsymptoticModel, GroupModel, Raster, ShareMode, SpatialDistribution};
pub use deploy::{BaseStation, Deployment, Point, Rect};
pub use error::Error;
pub use mcs::{McsEntry, McsTable};
pub use optimizer::{
    AbsPattern, History, PfSolution, SolveOptions, StateProbabilities, ThroughputMatrix,
};
pub use radio::{LinkBudget, PathlossModel};
pub use sim::{MetricsReport, Policy, RunSpec, SimConfig};
pub use states::{AbsState, EfficiencyMode, GroupPlacement, NetworkEnv, Snapshot};


/// Symbol rate of a 20 MHz carrier (symbols/s): 100 resource blocks of
/// 12 subcarriers x 14 symbols per 1 ms subframe.
pub const DEFAULT_SYMBOL_RATE: f64 = 16.8e6;

/// Convert a decibel quantity to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert a linear quantity to decibels.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Convert a dBm power to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Convert a power in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    linear_to_db(watts) + 30.0
}
