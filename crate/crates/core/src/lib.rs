//! Allometric (power-law) scaling between company size and environmental
//! impact.
//!
//! The pipeline is: [`ingest`] parses and filters company observations into
//! grouped samples, [`regress`] fits `ln impact = ln c + beta · ln size` by
//! least squares, [`benchmark`] turns group fits into size-dependent benchmark
//! lines and scores companies against them, [`dispersion`] summarizes residuals
//! by country, and [`report`] renders tables and plots. [`synthgen`] produces
//! populations with known parameters for testing the estimators.

pub mod benchmark;
pub mod dispersion;
pub mod exec;
pub mod ingest;
pub mod numfmt;
pub mod regress;
pub mod report;
pub mod rng;
pub mod synthgen;

pub use exec::Execution;
