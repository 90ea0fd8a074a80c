//! Command-line frontend: flight record ingestion, ledger-backed registry
//! commands, possession proofs, private exports, fleet scenarios and
//! reproducible scripted runs.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod export;
pub mod report;
pub mod runner;
pub mod scenario;
