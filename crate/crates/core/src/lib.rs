//! Differentially private online prediction from experts.
//!
//! This crate is `no_std` and only needs `alloc`. It contains:
//!
//! - [`dp`]: samplers, the exponential mechanism, AboveThreshold, the binary
//!   tree mechanism and a privacy ledger with basic/advanced composition.
//! - [`adversaries`]: loss vectors and oblivious, stochastic and adaptive loss
//!   sources, including the hard-instance constructions.
//! - [`algorithms`]: multiplicative weights, private shrinking dartboard
//!   (plain and batched), limited updates for stochastic adversaries and the
//!   sparse-vector algorithms for the realizable setting.
//! - [`oco`]: DP-FTRL over the Euclidean ball and the cover-based reduction to
//!   experts.
//!
//! All randomness is drawn from explicitly passed RNG streams; see [`rng`].
#![no_std]
#![deny(unsafe_code)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected alongside bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adversaries;
pub mod algorithms;
pub mod dp;
mod error;
pub mod math;
pub mod oco;
pub mod rng;

pub use error::{Error, Result};
