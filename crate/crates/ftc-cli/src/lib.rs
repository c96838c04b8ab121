//! Companion crate: scenario files, simulation runs, reports, and exports
//! around the `ftc-core` protocol library. The `ftc` binary is a thin
//! front-end over these modules.

pub mod config;
pub mod export;
pub mod report;
