//! Rate regions and power minimization for Gaussian interference channels
//! with per-user stream splitting.
//!
//! A `U`-user interference channel carries `U * U` independently coded
//! streams (each user splits its traffic into `U` components); receivers
//! decode a chosen subset by successive interference cancellation and
//! treat the rest as noise. This crate provides:
//!
//! * [`model`] — channel/power/rate value types and per-stream SIC rate
//!   caps;
//! * [`region`] — partial-MAC constraint sets, achievable-region
//!   membership, and a two-user boundary scan;
//! * [`minpic`] — minimum sum-power solvers under per-user rate floors: a
//!   fast fixed-point/dual/local-search solver and an exhaustive oracle;
//! * [`timeshare`] — time-sharing schedules mixing decoding
//!   configurations via a small LP;
//! * [`baseline`] — the orthogonal-access (OMA) comparison point;
//! * [`epi`] — entropy-power arithmetic, a 1-D symmetric decreasing
//!   rearrangement, and sum-rate outer bounds (in nats);
//! * [`gen`] — seeded scenario generation for reproducible experiments.
//!
//! The heavy enumeration paths (exhaustive search, boundary scans, OMA
//! grids) run data-parallel through rayon when the default `parallel`
//! feature is enabled; disabling it yields a dependency-free sequential
//! build with identical results.
//!
//! # Example
//!
//! Minimize the total power of a weak-interference two-user channel under
//! 1 bit/use rate floors and compare against the orthogonal baseline:
//!
//! ```
//! use icpower::baseline::oma_optimize_fractions;
//! use icpower::minpic::minpic_solve;
//! use icpower::{Channel, Scenario, SolverSettings};
//!
//! let channel = Channel::symmetric(2, 1.0, 0.1, 1.0)?;
//! let scenario = Scenario::new(channel, vec![1.0, 1.0])?;
//!
//! let solution = minpic_solve(&scenario, &SolverSettings::default());
//! assert!(solution.feasible);
//!
//! let oma = oma_optimize_fractions(&scenario, 64)?;
//! assert!(solution.total_power < oma.total_power);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

#![allow(clippy::needless_range_loop)] // index loops mirror the matrix math
#![allow(clippy::too_many_arguments)] // solver kernels carry their knobs

pub mod baseline;
pub mod epi;
pub mod gen;
pub mod minpic;
pub mod model;
pub mod region;
mod simplex;
pub mod timeshare;

pub use model::{
    Channel, DecodingConfig, ModelError, PowerAllocation, RateAllocation, Scenario, SubUserId,
    SubUserSet,
};
pub use region::{BoundarySample, PartialMacPolytope, RateConstraint, RegionError};

pub use minpic::{Solution, SolverSettings};
