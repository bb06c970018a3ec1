//! Exact solver for two-stage stochastic programs with decision-dependent
//! uncertainty: an extended L-Shaped method with distribution-specific cuts,
//! an extensive-form baseline, an implicit-enumeration oracle, and a suite of
//! production-planning benchmark builders.

pub mod cli;
pub mod engine;
pub mod lp;
pub mod methods;
pub mod milp;
pub mod model;
pub mod ppp;

pub use cli::run_cli;
