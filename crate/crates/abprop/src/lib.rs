//! Batch front end for the two-vortex propagator: configuration, grid and
//! single-point evaluation, verification suites and serialization.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod suites;

pub use error::AppError;
