//! Scenario files, output formats and the `cohesive` command line for the
//! cohesive fracture solver in `cohesive-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

pub use error::CliError;
pub use scenario::Scenario;
