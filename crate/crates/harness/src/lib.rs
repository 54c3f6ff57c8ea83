//! Experiment harness for `dpope-core`: seeded Monte-Carlo runs, the
//! marginal-distribution verifier, an exact small-instance privacy auditor,
//! concentration checks, CSV/plot output and the `dpope` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod builtin;
pub mod cli;
mod error;
pub mod experiment;
pub mod io;
pub mod lemmas;
pub mod plot;
pub mod sweep;
pub mod verify;

pub use error::{HarnessError, Result};
