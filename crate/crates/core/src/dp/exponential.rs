use alloc::vec::Vec;
use rand::Rng;

use crate::math::exp;
use crate::{Error, Result};

/// Sample an index with probability proportional to `exp(log_weights[i])`.
///
/// Entries equal to `-inf` have probability zero. Requires at least one
/// finite entry.
pub fn sample_from_log_weights<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> Result<usize> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::parameter("log weights need at least one finite entry"));
    }
    let total: f64 = log_weights.iter().map(|w| exp(w - max)).sum();
    let mut target = rng.gen::<f64>() * total;
    let mut last_positive = 0;
    for (i, w) in log_weights.iter().enumerate() {
        let mass = exp(w - max);
        if mass > 0.0 {
            last_positive = i;
            if target < mass {
                return Ok(i);
            }
            target -= mass;
        }
    }
    // Rounding left a sliver of mass unassigned.
    Ok(last_positive)
}

fn validate(scores: &[f64], eta: f64) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::parameter("exponential mechanism needs at least one candidate"));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::parameter("eta must be positive and finite"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::parameter("scores must be finite"));
    }
    Ok(())
}

/// Exponential mechanism over `d` candidates: index `x` is returned with
/// probability `∝ exp(−η · scores[x] / 2)`. Low scores are preferred; with
/// 1-sensitive scores one invocation is η-DP.
pub fn exponential_mechanism<R: Rng + ?Sized>(scores: &[f64], eta: f64, rng: &mut R) -> Result<usize> {
    validate(scores, eta)?;
    let log_w: Vec<f64> = scores.iter().map(|s| -eta * s / 2.0).collect();
    sample_from_log_weights(&log_w, rng)
}

/// Closed-form output distribution of [`exponential_mechanism`].
pub fn exponential_mechanism_probabilities(scores: &[f64], eta: f64) -> Result<Vec<f64>> {
    validate(scores, eta)?;
    let log_w: Vec<f64> = scores.iter().map(|s| -eta * s / 2.0).collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| exp(l - max)).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}
