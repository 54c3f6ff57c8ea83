//! Exact output distribution of the shrinking dartboard on tiny instances.
//!
//! The observable is `(x_1, z_2, x_2, …, z_T, x_T)` with `z_t` the resample
//! indicator. All probabilities are exact rationals: `η` and `p` enter as
//! the exact binary values of their `f64` representations and losses must
//! be 0 or 1, so every weight `(1 − η)^{L}` is rational.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::{HarnessError, Result};

pub const MAX_HORIZON: usize = 4;
pub const MAX_EXPERTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditParams {
    pub eta: f64,
    pub p: f64,
    /// Switching budget with the same convention as the learner (the
    /// initial draw counts as the first of `K`).
    pub k_budget: u64,
}

/// One observable trajectory: `x_1` followed by `(z_t, x_t)` for `t ≥ 2`.
pub type Trajectory = Vec<(bool, usize)>;

/// Rows of {0,1}-valued losses, one per round.
pub type LossSequence = Vec<Vec<f64>>;

fn rational(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| HarnessError::validation(format!("{v} is not finite")))
}

fn check_losses(losses: &[Vec<f64>], d: usize) -> Result<()> {
    if losses.is_empty() || losses.len() > MAX_HORIZON || d == 0 || d > MAX_EXPERTS {
        return Err(HarnessError::validation(format!(
            "exact audit supports 1 ≤ T ≤ {MAX_HORIZON} and 1 ≤ d ≤ {MAX_EXPERTS}"
        )));
    }
    for row in losses {
        if row.len() != d || row.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(HarnessError::validation("exact audit needs {0,1}-valued rows of width d"));
        }
    }
    Ok(())
}

/// Full distribution over trajectories for one loss sequence.
pub fn output_distribution(params: &AuditParams, losses: &[Vec<f64>]) -> Result<BTreeMap<Trajectory, BigRational>> {
    let d = losses.first().map_or(0, Vec::len);
    check_losses(losses, d)?;
    if !(0.0..1.0).contains(&params.eta) || !(0.0..=1.0).contains(&params.p) || params.k_budget == 0 {
        return Err(HarnessError::validation("need η ∈ [0, 1), p ∈ [0, 1] and K ≥ 1"));
    }
    let decay = BigRational::one() - rational(params.eta)?;
    let keep_base = BigRational::one() - rational(params.p)?;
    let power = |n: usize| (0..n).fold(BigRational::one(), |acc, _| acc * &decay);

    // (trajectory, switch counter, probability); the counter is implied by
    // the trajectory but kept for clarity.
    let uniform = BigRational::new(BigInt::one(), BigInt::from(d));
    let mut frontier: Vec<(Trajectory, u64, BigRational)> =
        (0..d).map(|x| (vec![(false, x)], 0, uniform.clone())).collect();
    let mut cum = vec![0usize; d];
    for t in 1..losses.len() {
        let prev = &losses[t - 1];
        for (c, &l) in cum.iter_mut().zip(prev) {
            *c += l as usize;
        }
        let weights: Vec<BigRational> = cum.iter().map(|&c| power(c)).collect();
        let total: BigRational = weights.iter().fold(BigRational::zero(), |a, w| a + w);
        let mut next = Vec::with_capacity(frontier.len() * (d + 1));
        for (traj, k, prob) in frontier {
            let x = traj.last().expect("non-empty").1;
            let keep = &keep_base * power(prev[x] as usize);
            let leave = BigRational::one() - &keep;
            if k + 1 < params.k_budget {
                let mut stay = traj.clone();
                stay.push((false, x));
                next.push((stay, k, &prob * &keep));
                for (y, w) in weights.iter().enumerate() {
                    let mut moved = traj.clone();
                    moved.push((true, y));
                    next.push((moved, k + 1, &prob * &leave * w / &total));
                }
            } else {
                let mut stay = traj;
                stay.push((false, x));
                next.push((stay, k, prob));
            }
        }
        frontier = next;
    }
    let mut out = BTreeMap::new();
    for (traj, _, prob) in frontier {
        if !prob.is_zero() {
            *out.entry(traj).or_insert_with(BigRational::zero) += prob;
        }
    }
    Ok(out)
}

fn ln_big(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    (n >> shift).to_f64().expect("64 bits").ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln(a/b)` for positive rationals without overflowing `f64`.
pub fn ln_ratio(a: &BigRational, b: &BigRational) -> f64 {
    let r = a / b;
    ln_big(r.numer()) - ln_big(r.denom())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub max_log_ratio: f64,
    /// Trajectory attaining the maximum.
    pub worst: Option<Trajectory>,
    pub claimed_epsilon: f64,
    pub passed: bool,
    /// Both distributions sum to exactly 1.
    pub normalized: bool,
}

pub fn audit_privacy_exact(params: &AuditParams, a: &[Vec<f64>], b: &[Vec<f64>], claimed_epsilon: f64) -> Result<AuditReport> {
    if a.len() != b.len() {
        return Err(HarnessError::validation("neighbouring sequences must have the same length"));
    }
    let pa = output_distribution(params, a)?;
    let pb = output_distribution(params, b)?;
    let sum = |m: &BTreeMap<Trajectory, BigRational>| m.values().fold(BigRational::zero(), |acc, v| acc + v);
    let normalized = sum(&pa).is_one() && sum(&pb).is_one();
    let mut max_log_ratio = 0.0f64;
    let mut worst = None;
    for key in pa.keys().chain(pb.keys()) {
        let r = match (pa.get(key), pb.get(key)) {
            (Some(x), Some(y)) => ln_ratio(x, y).abs(),
            _ => f64::INFINITY,
        };
        if r > max_log_ratio {
            max_log_ratio = r;
            worst = Some(key.clone());
        }
    }
    let passed = normalized && max_log_ratio <= claimed_epsilon * (1.0 + 1e-12);
    Ok(AuditReport { max_log_ratio, worst, claimed_epsilon, passed, normalized })
}

/// `η/p + 16Tpη`.
pub fn pure_claim(params: &AuditParams, horizon: usize) -> f64 {
    params.eta / params.p + 16.0 * horizon as f64 * params.p * params.eta
}

/// Every `{0,1}^{T×d}` sequence, row-major.
pub fn binary_sequences(horizon: usize, d: usize) -> Vec<Vec<Vec<f64>>> {
    let cells = horizon * d;
    (0u32..1 << cells)
        .map(|mask| {
            (0..horizon)
                .map(|t| (0..d).map(|x| ((mask >> (t * d + x)) & 1) as f64).collect())
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighbourAudit {
    pub pairs: usize,
    pub max_log_ratio: f64,
    pub worst_pair: Option<(LossSequence, LossSequence)>,
    pub claimed_epsilon: f64,
    pub all_normalized: bool,
    pub passed: bool,
}

/// Audits every unordered pair of binary sequences that differ only in
/// round `diff_round` (1-based), or in any single round when `None`.
pub fn audit_all_neighbours(
    params: &AuditParams,
    horizon: usize,
    d: usize,
    diff_round: Option<usize>,
    claimed_epsilon: f64,
) -> Result<NeighbourAudit> {
    if let Some(r) = diff_round {
        if r == 0 || r > horizon {
            return Err(HarnessError::validation(format!("diff round {r} outside 1..={horizon}")));
        }
    }
    let seqs = binary_sequences(horizon, d);
    let dists = seqs.iter().map(|s| output_distribution(params, s)).collect::<Result<Vec<_>>>()?;
    let one = BigRational::one();
    let all_normalized = dists.iter().all(|m| m.values().fold(BigRational::zero(), |a, v| a + v) == one);
    let mut out = NeighbourAudit {
        pairs: 0,
        max_log_ratio: 0.0,
        worst_pair: None,
        claimed_epsilon,
        all_normalized,
        passed: false,
    };
    for i in 0..seqs.len() {
        for j in i + 1..seqs.len() {
            let differing: Vec<usize> = (0..horizon).filter(|&t| seqs[i][t] != seqs[j][t]).collect();
            let ok = differing.len() == 1 && diff_round.is_none_or(|r| differing[0] == r - 1);
            if !ok {
                continue;
            }
            out.pairs += 1;
            let (pa, pb) = (&dists[i], &dists[j]);
            for key in pa.keys().chain(pb.keys()) {
                let r = match (pa.get(key), pb.get(key)) {
                    (Some(x), Some(y)) => ln_ratio(x, y).abs(),
                    _ => f64::INFINITY,
                };
                if r > out.max_log_ratio {
                    out.max_log_ratio = r;
                    out.worst_pair = Some((seqs[i].clone(), seqs[j].clone()));
                }
            }
        }
    }
    out.passed = all_normalized && out.max_log_ratio <= claimed_epsilon * (1.0 + 1e-12);
    Ok(out)
}

impl NeighbourAudit {
    pub fn report_text(&self) -> String {
        let mut s = String::from(crate::io::SCHEMA_HEADER);
        s.push('\n');
        s.push_str(&format!("pairs={}\n", self.pairs));
        s.push_str(&format!("max_log_ratio={}\n", crate::io::fmt_f64(self.max_log_ratio)));
        s.push_str(&format!("claimed_epsilon={}\n", crate::io::fmt_f64(self.claimed_epsilon)));
        s.push_str(&format!("normalized={}\n", self.all_normalized));
        s.push_str(&format!("passed={}\n", self.passed));
        if let Some((a, b)) = &self.worst_pair {
            let fmt = |m: &Vec<Vec<f64>>| m.iter().map(|r| r.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ")).collect::<Vec<_>>().join(";");
            s.push_str(&format!("worst_a={}\nworst_b={}\n", fmt(a), fmt(b)));
        }
        s
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    const P: AuditParams = AuditParams { eta: 0.05, p: 0.4, k_budget: 100 };

    #[test]
    fn distribution_sums_to_one_exactly() {
        let seq = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0]];
        let dist = output_distribution(&P, &seq).unwrap();
        let total = dist.values().fold(BigRational::zero(), |a, v| a + v);
        assert!(total.is_one());
        // x_1, then per round: stay or one of d resampled experts.
        assert_eq!(dist.len(), 2 * 3 * 3 * 3);
    }

    #[test]
    fn identical_sequences_have_zero_ratio() {
        let seq = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let r = audit_privacy_exact(&P, &seq, &seq, 0.0).unwrap();
        assert_eq!(r.max_log_ratio, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn zero_eta_is_data_independent() {
        let params = AuditParams { eta: 0.0, ..P };
        let a = vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0]];
        let b = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        assert_eq!(audit_privacy_exact(&params, &a, &b, 0.0).unwrap().max_log_ratio, 0.0);
    }

    #[test]
    fn one_round_example_below_claim() {
        let a = vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0]];
        let b = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 0.0]];
        let claim = pure_claim(&P, 3);
        assert!((claim - 1.085).abs() < 1e-12);
        let r = audit_privacy_exact(&P, &a, &b, claim).unwrap();
        assert!(r.passed && r.normalized, "{r:?}");
    }

    #[test]
    fn budget_one_freezes() {
        let params = AuditParams { k_budget: 1, ..P };
        let seq = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        let dist = output_distribution(&params, &seq).unwrap();
        assert_eq!(dist.len(), 2);
        assert!(dist.keys().all(|t| !t[1].0));
    }

    #[test]
    fn big_logs() {
        let big = BigRational::new(BigInt::one() << 3000u32, BigInt::one());
        let r = ln_ratio(&big, &BigRational::one());
        assert!((r - 3000.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn rejects_large_instances() {
        let seq = vec![vec![0.0; 4]; 2];
        assert!(output_distribution(&P, &seq).is_err());
        assert!(output_distribution(&P, &[vec![0.5, 0.0]]).is_err());
    }
}
