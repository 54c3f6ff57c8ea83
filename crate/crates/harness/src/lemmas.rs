//! Monte-Carlo checks of the Chernoff and geometric-sum tail bounds.

use dpope_core::dp::{sample_bernoulli, sample_geometric};
use rayon::prelude::*;

use crate::experiment::run_rng;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct TailCheck {
    pub name: String,
    pub runs: u64,
    pub exceedances: u64,
    pub bound: f64,
    /// `bound + 3σ` with `σ² = bound(1 − bound)/runs`.
    pub limit: f64,
    pub passed: bool,
}

impl TailCheck {
    pub fn frequency(&self) -> f64 {
        self.exceedances as f64 / self.runs as f64
    }

    fn new(name: String, runs: u64, exceedances: u64, bound: f64) -> Self {
        let b = bound.min(1.0);
        let limit = b + 3.0 * (b * (1.0 - b) / runs as f64).sqrt();
        let passed = exceedances as f64 / runs as f64 <= limit;
        TailCheck { name, runs, exceedances, bound, limit, passed }
    }
}

/// `P(X > (1 + δ)np) ≤ e^{−npδ²/3}` for `X ~ Binomial(n, p)`.
pub fn chernoff_check(n: u64, p: f64, delta: f64, runs: u64, seed: u64) -> Result<TailCheck> {
    let cut = (1.0 + delta) * n as f64 * p;
    let exceed = (0..runs)
        .into_par_iter()
        .map(|run| -> Result<u64> {
            let mut rng = run_rng(seed, run);
            let mut x = 0u64;
            for _ in 0..n {
                x += sample_bernoulli(p, &mut rng)? as u64;
            }
            Ok((x as f64 > cut) as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let bound = (-(n as f64) * p * delta * delta / 3.0).exp();
    Ok(TailCheck::new(format!("chernoff n={n} p={p} delta={delta}"), runs, exceed, bound))
}

/// `P(W > 2k/p) ≤ e^{−k/4}` for `W` a sum of `n` Geometric(p) trial counts, `k ≥ n`.
pub fn geometric_check(n: u64, k: u64, p: f64, runs: u64, seed: u64) -> Result<TailCheck> {
    let cut = 2.0 * k as f64 / p;
    let exceed = (0..runs)
        .into_par_iter()
        .map(|run| -> Result<u64> {
            let mut rng = run_rng(seed, run);
            let mut w = 0u64;
            for _ in 0..n {
                w += sample_geometric(p, &mut rng)?;
            }
            Ok((w as f64 > cut) as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let bound = (-(k as f64) / 4.0).exp();
    Ok(TailCheck::new(format!("geometric n={n} k={k} p={p}"), runs, exceed, bound))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub checks: Vec<TailCheck>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{} {}: {} / {} exceedances, bound {:.6e}, limit {:.6e}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.exceedances,
                c.runs,
                c.bound,
                c.limit
            ));
        }
        s
    }
}

/// The default grid. Each check uses its own seed offset.
pub fn check_concentration_lemmas(runs: u64, seed: u64) -> Result<LemmaReport> {
    let chernoff = [(1000, 0.1, 1.0), (200, 0.3, 0.5), (100, 0.5, 0.2)];
    let geometric = [(10, 10, 1.0 / 3.0), (5, 10, 0.5), (4, 4, 1.0), (20, 20, 0.1)];
    let mut checks = Vec::new();
    for (i, &(n, p, d)) in chernoff.iter().enumerate() {
        checks.push(chernoff_check(n, p, d, runs, seed.wrapping_add(i as u64))?);
    }
    for (i, &(n, k, p)) in geometric.iter().enumerate() {
        checks.push(geometric_check(n, k, p, runs, seed.wrapping_add(100 + i as u64))?);
    }
    Ok(LemmaReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certain_geometric_has_no_tail() {
        let c = geometric_check(4, 4, 1.0, 1000, 1).unwrap();
        assert_eq!(c.exceedances, 0);
    }

    #[test]
    fn chernoff_far_tail_is_empty() {
        let c = chernoff_check(1000, 0.1, 1.0, 2000, 2).unwrap();
        assert_eq!(c.exceedances, 0);
        assert!((c.bound - (-100.0f64 / 3.0).exp()).abs() < 1e-20);
    }
}
