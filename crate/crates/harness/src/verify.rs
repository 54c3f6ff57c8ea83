//! Empirical marginals of the shrinking dartboard against the exact
//! multiplicative-weights distribution.

use dpope_core::adversaries::AdversarySpec;
use dpope_core::algorithms::{mw_update, run_shrinking_dartboard, ExpertState, SDConfig};
use rayon::prelude::*;

use crate::experiment::run_rng;
use crate::{HarnessError, Result};

pub const MAX_HORIZON: u64 = 200;
pub const MAX_EXPERTS: usize = 16;

/// `√(d ln(2dT) / (2 runs))`: a union of DKW-style bands over all `(t, x)`.
pub fn sampling_slack(runs: u64, d: usize, horizon: u64) -> f64 {
    let d = d as f64;
    (d * (2.0 * d * horizon as f64).ln() / (2.0 * runs as f64)).sqrt()
}

/// `P^t(x) ∝ (1 − η)^{L_{t−1}(x)}` for `t = 1..=T`, evaluated directly
/// from cumulative losses rather than through incremental updates.
pub fn exact_marginals(matrix: &[impl AsRef<[f64]>], eta: f64) -> Vec<Vec<f64>> {
    let d = matrix[0].as_ref().len();
    let log_decay = (-eta).ln_1p();
    let mut cum = vec![0.0; d];
    let mut out = Vec::with_capacity(matrix.len());
    for row in matrix {
        let logs: Vec<f64> = cum.iter().map(|c| c * log_decay).collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = w.iter().sum();
        out.push(w.iter().map(|v| v / z).collect());
        for (c, l) in cum.iter_mut().zip(row.as_ref()) {
            *c += l;
        }
    }
    out
}

/// Largest relative gap between [`exact_marginals`] and the normalized
/// state of incremental `mw_update` calls.
pub fn mw_state_discrepancy(matrix: &[impl AsRef<[f64]>], eta: f64) -> Result<f64> {
    let exact = exact_marginals(matrix, eta);
    let mut state = ExpertState::uniform(exact[0].len())?;
    let mut worst = 0.0f64;
    for (t, row) in matrix.iter().enumerate() {
        for (p, q) in state.probabilities().iter().zip(&exact[t]) {
            worst = worst.max((p - q).abs() / q.abs().max(f64::MIN_POSITIVE));
        }
        mw_update(&mut state, row.as_ref(), eta)?;
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalReport {
    /// TV distance at each round `t = 1..=T`.
    pub tv: Vec<f64>,
    pub max_tv: f64,
    /// `e^{−Tp/3}`, or 0 when the budget `K ≥ T + 1` never binds.
    pub bound: f64,
    pub slack: f64,
    /// `bound + slack ≥ 1`, so the check cannot fail.
    pub vacuous: bool,
    pub passed: bool,
}

pub fn verify_marginal(config: &SDConfig, adversary: &AdversarySpec, runs: u64, seed: u64) -> Result<MarginalReport> {
    let (horizon, d) = (adversary.horizon(), adversary.d());
    if horizon > MAX_HORIZON || d > MAX_EXPERTS {
        return Err(HarnessError::validation(format!(
            "verify-marginal supports T ≤ {MAX_HORIZON} and d ≤ {MAX_EXPERTS}, got T = {horizon}, d = {d}"
        )));
    }
    if config.batch_size() != 1 {
        return Err(HarnessError::validation("verify-marginal needs batch size 1"));
    }
    if runs == 0 {
        return Err(HarnessError::validation("runs must be at least 1"));
    }
    let matrix = adversary
        .matrix()
        .ok_or_else(|| HarnessError::validation("verify-marginal needs an oblivious adversary"))?;
    let exact = exact_marginals(matrix, config.eta());
    let t_len = horizon as usize;

    let counts = (0..runs)
        .into_par_iter()
        .try_fold(
            || vec![0u64; t_len * d],
            |mut acc, run| -> Result<Vec<u64>> {
                let trace = run_shrinking_dartboard(config, adversary, run, &mut run_rng(seed, run))?;
                for (i, r) in trace.rounds.iter().enumerate() {
                    acc[i * d + r.expert] += 1;
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0u64; t_len * d],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;

    let n = runs as f64;
    let tv: Vec<f64> = (0..t_len)
        .map(|t| 0.5 * (0..d).map(|x| (counts[t * d + x] as f64 / n - exact[t][x]).abs()).sum::<f64>())
        .collect();
    let max_tv = tv.iter().cloned().fold(0.0, f64::max);
    let bound = if config.k_budget() > horizon { 0.0 } else { (-(horizon as f64) * config.p_switch() / 3.0).exp() };
    let slack = sampling_slack(runs, d, horizon);
    let vacuous = bound + slack >= 1.0;
    let passed = vacuous || max_tv <= bound + slack;
    Ok(MarginalReport { tv, max_tv, bound, slack, vacuous, passed })
}
