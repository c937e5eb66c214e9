//! Command-line front end for predictive information decomposition:
//! CSV ingestion, analysis and significance-test plumbing, coefficient
//! sweeps, and versioned JSON/CSV artifacts.
//!
//! The binary is a thin shim over [`commands::run`]; everything else
//! lives here so the pieces stay directly testable.

pub mod args;
pub mod commands;
pub mod io;
pub mod report;
pub mod sweep;

pub use args::Cli;
pub use commands::{dispatch, run};
