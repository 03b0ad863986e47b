//! Command-line front end for the corner-growth library: argument parsing,
//! configuration resolution and output writers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod config;
pub mod fluct;
pub mod run;
pub mod svg;

pub use run::{run, CliError, CliResult};
