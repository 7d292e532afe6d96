//! Finite-difference laboratory for one-dimensional parabolic SPDEs driven by
//! space-time white noise.
//!
//! The crate simulates the pair
//!
//! ```text
//! dU = (U_xx + b(t,x,U)) dt + a(t,x,U) W(dt,dx)
//! dV = (V_xx + b(t,x,V) + d(t,x,V)) dt + a(t,x,V) W(dt,dx)
//! ```
//!
//! and checks numerically that reweighting heat paths `U` by the Girsanov
//! density built from `R = d/a` reproduces the statistics of `V`. For the
//! Allen-Cahn drift `d(u) = 2u(1 - u^2)` and power-law noise
//! `a(u) = C u^gamma` it also measures the compact-support property and
//! the integrability functional that controls it.
//!
//! Modules, bottom-up:
//!
//! - [`grid`]: space-time grid and seeded white-noise increments
//! - [`coefficients`]: `(a, b, d)` presets and initial data
//! - [`solver`]: explicit Euler-Maruyama stepping
//! - [`transfer`]: ratio process, localization, log-density, reweighting
//! - [`diagnostics`]: epsilon-support, integrability functional, heat oracle
//! - [`stats`]: weighted ECDF / KS / ESS / bootstrap
//! - [`config`] and [`runner`]: experiment configs and the subcommand drivers

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod runner;
pub mod solver;
pub mod stats;
pub mod transfer;

pub use coefficients::{preset, Coefficient, CoefficientSpec, InitialData, PresetName};
pub use diagnostics::{
    heat_oracle, integrability_functional, support_containment_rate, support_profile,
    SupportProfile,
};
pub use error::{Error, Result};
pub use grid::{derive_seed, sample_noise, NoiseIncrements, SpaceTimeGrid};
pub use solver::{solve_path, solve_path_with, Boundary, FieldPath, NoiseScheme, SolveOptions};
pub use stats::{
    bootstrap_ci, ess, ks_weighted, weighted_ecdf, Interval, KsResult, Statistic, WeightedSample,
};
pub use transfer::{
    accumulate_quadratic, localization_time, log_weight, ratio, reweighted_estimate,
    reweighted_expectation, transfer_trace, Estimate, TransferRecord, TransferTrace,
};
