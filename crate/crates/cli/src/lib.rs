//! Command-line front end for the SQUID simulator: configuration, scenario
//! dispatch, deterministic output files and parameter sweeps.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod validate;
