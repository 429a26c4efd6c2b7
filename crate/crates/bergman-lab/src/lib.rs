//! Command-line laboratory around `bergman-core`.
//!
//! The library half of this crate hosts everything the binary needs beyond
//! the numerics themselves: a layered configuration system (flags over a
//! parameter file over defaults), CSV and JSON output with fixed formatting,
//! and rayon drivers that parallelize the projection and the multistart zero
//! search without changing a single output bit.
//!
//! The binary `bergman-lab` wires these together into subcommands; see
//! [`cli`] for the surface and [`commands`] for the execution paths.

pub mod cli;
pub mod commands;
pub mod config;
pub mod csvout;
pub mod parallel;
pub mod summary;
