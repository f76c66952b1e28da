//! Numerical laboratory for Dyson Brownian motion on the circle and
//! multiradial Loewner evolution.
//!
//! The crate is organized around a handful of interacting pieces:
//!
//! * [`circle`] — static interaction functions on the ordered torus
//!   (cotangent drift, cosecant repulsion, Vandermonde-type products,
//!   gap statistics),
//! * [`path`] — time-sampled driving paths, the sup metric, time changes,
//!   and CSV round-tripping,
//! * [`energy`] — Dirichlet / multiradial energies and the radial
//!   interaction functional, evaluated by midpoint quadrature on the
//!   piecewise-linear interpretation of a sampled path,
//! * [`flow`] — the deterministic zero-energy (trigonometric
//!   Calogero–Moser) flow and its convergence diagnostics,
//! * [`sde`] — Euler–Maruyama simulation of the interacting diffusion and
//!   the Girsanov-reweighted Brownian representation,
//! * [`loewner`] — forward and backward multiradial Loewner flows in
//!   cylinder coordinates: hulls, traces, capacity and derivative bounds,
//! * [`ldp`] — empirical large-deviation experiments: rate-function
//!   minimization over discretized paths and Monte Carlo tail estimates,
//! * [`acceptance`] — the end-to-end verification suite backing the
//!   `check` subcommand of the CLI.
//!
//! Core numerics are generic over the scalar type through the [`float::Scalar`]
//! trait; `f64` is the working precision everywhere (see [`Real`]).

pub mod acceptance;
pub mod circle;
pub mod energy;
pub mod float;
pub mod flow;
pub mod ldp;
pub mod loewner;
pub mod path;
pub mod rng;
pub mod sde;
pub mod svg;

/// Working precision used by the CLI, the stochastic lab, and all tests.
pub type Real = f64;

/// Angle configuration at working precision.
pub type AngleConfig = circle::AngleConfiguration<Real>;
/// Driving path at working precision.
pub type Path = path::DrivingPath<Real>;

pub use circle::{AngleConfiguration, GapStats};
pub use energy::EnergyReport;
pub use flow::ConvergenceReport;
pub use ldp::{EventSpec, RateResult};
pub use loewner::{LoewnerTrace, WeightFunction};
pub use path::{DrivingPath, TimeChange};
pub use sde::{SimulationConfig, StoppedEnsemble};
