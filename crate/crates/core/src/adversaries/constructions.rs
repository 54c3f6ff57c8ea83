use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{AdversarySpec, LossVector};
use crate::math::{ceil, ceil_log2, ln};
use crate::rng::derive;
use crate::{Error, Result};

/// Tail length `k = ⌈ln d / (2ε)⌉` of the hidden-expert instance.
pub fn hide_expert_k(d: usize, epsilon: f64) -> Result<u64> {
    if d == 0 || !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::parameter("hidden-expert instance needs d ≥ 1 and ε > 0"));
    }
    Ok(ceil(ln(d as f64) / (2.0 * epsilon)) as u64)
}

/// Oblivious lower-bound instance: `T − k` all-zero rounds followed by `k`
/// copies of the loss that is 0 only at expert `j`.
pub fn realizable_hide_expert(d: usize, epsilon: f64, horizon: u64, j: usize) -> Result<AdversarySpec> {
    let k = hide_expert_k(d, epsilon)?;
    if k > horizon {
        return Err(Error::parameter(alloc::format!("tail length k = {k} exceeds T = {horizon}")));
    }
    if j >= d {
        return Err(Error::parameter("hidden expert index must be < d"));
    }
    let mut rows = vec![LossVector::zeros(d); (horizon - k) as usize];
    rows.extend((0..k).map(|_| LossVector::indicator_except(d, j)));
    AdversarySpec::oblivious(rows)
}

/// A drifting-good-set instance together with its ground truth.
#[derive(Debug, Clone)]
pub struct DriftingGoodSet {
    pub spec: AdversarySpec,
    /// The expert that never incurs loss.
    pub good: usize,
    /// First round (1-based) of each epoch that eliminated at least one expert.
    pub epoch_starts: Vec<u64>,
    /// Round from which each expert pays loss 1, `None` for never.
    pub eliminated_at: Vec<Option<u64>>,
}

/// Stress instance for the realizable algorithms.
///
/// One hidden expert has loss 0 throughout. The horizon is cut into
/// `E + 1` equal epochs, `E = max(⌈log2 d⌉, ⌈(d − 1)/e⌉)` (capped by `d − 1`
/// and `T − 1`), where `e = eliminations_per_epoch`. At the start of
/// epochs `2..=E+1`, up to `e` randomly chosen experts that still have zero
/// loss become permanently bad (loss 1 every round). Every such epoch
/// eliminates at least one expert, and with `e = 0` the matrix is all zeros.
pub fn drifting_good_set(d: usize, horizon: u64, eliminations_per_epoch: usize, seed: u64) -> Result<DriftingGoodSet> {
    if d < 2 {
        return Err(Error::parameter("drifting good set needs d ≥ 2"));
    }
    if horizon == 0 {
        return Err(Error::parameter("drifting good set needs T ≥ 1"));
    }
    let mut rng = derive(seed, 0);
    let good = rng.gen_range(0..d);
    let mut eliminated_at = vec![None; d];
    let mut epoch_starts = Vec::new();

    let e = eliminations_per_epoch;
    if e > 0 {
        let epochs = (ceil_log2(d as u64) as usize)
            .max((d - 1).div_ceil(e))
            .min(d - 1)
            .min(horizon.saturating_sub(1) as usize);
        let len = horizon / (epochs as u64 + 1);
        let mut alive: Vec<usize> = (0..d).filter(|&x| x != good).collect();
        for i in 1..=epochs {
            // Leave at least one victim for each later epoch.
            let later = epochs - i;
            let n = e.min(alive.len() - later);
            let start = 1 + i as u64 * len;
            let (victims, rest) = alive.partial_shuffle(&mut rng, n);
            for &v in victims.iter() {
                eliminated_at[v] = Some(start);
            }
            alive = rest.to_vec();
            epoch_starts.push(start);
        }
    }

    let rows = (1..=horizon)
        .map(|t| {
            let row = eliminated_at.iter().map(|s| match s {
                Some(s) if t >= *s => 1.0,
                _ => 0.0,
            });
            LossVector::new(row.collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DriftingGoodSet { spec: AdversarySpec::oblivious(rows)?, good, epoch_starts, eliminated_at })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_sums(spec: &AdversarySpec) -> Vec<f64> {
        let m = spec.matrix().unwrap();
        (0..spec.d()).map(|x| m.iter().map(|r| r[x]).sum()).collect()
    }

    #[test]
    fn hide_expert_small() {
        let spec = realizable_hide_expert(2, 1.0, 10, 1).unwrap();
        let m = spec.matrix().unwrap();
        assert_eq!(m.len(), 10);
        assert!(m[..9].iter().all(|r| r.iter().all(|&v| v == 0.0)));
        assert_eq!(&m[9][..], &[1.0, 0.0]);
    }

    #[test]
    fn hide_expert_tail_length() {
        assert_eq!(hide_expert_k(2, 1.0).unwrap(), 1);
        assert_eq!(hide_expert_k(1024, 0.1).unwrap(), 35);
        assert!(realizable_hide_expert(1024, 0.1, 34, 0).is_err());
    }

    #[test]
    fn hide_expert_column_sums() {
        let spec = realizable_hide_expert(1024, 0.1, 1000, 17).unwrap();
        for (x, s) in column_sums(&spec).into_iter().enumerate() {
            assert_eq!(s, if x == 17 { 0.0 } else { 35.0 });
        }
    }

    #[test]
    fn drifting_without_eliminations_is_zero() {
        let g = drifting_good_set(2, 50, 0, 3).unwrap();
        assert!(column_sums(&g.spec).iter().all(|&s| s == 0.0));
        assert!(g.epoch_starts.is_empty());
    }

    #[test]
    fn drifting_has_one_zero_column_and_enough_epochs() {
        for (d, e, seed) in [(2, 1, 0), (64, 11, 1), (64, 1, 2), (10, 100, 3), (33, 4, 4)] {
            let g = drifting_good_set(d, 5000, e, seed).unwrap();
            let sums = column_sums(&g.spec);
            assert_eq!(sums.iter().filter(|&&s| s == 0.0).count(), 1);
            assert_eq!(sums[g.good], 0.0);
            assert!(g.epoch_starts.len() >= ceil_log2(d as u64) as usize);
            for w in g.epoch_starts.iter() {
                assert!(g.eliminated_at.iter().any(|s| s == &Some(*w)));
            }
        }
    }

    #[test]
    fn drifting_is_deterministic_in_seed() {
        let a = drifting_good_set(64, 5000, 11, 7).unwrap();
        let b = drifting_good_set(64, 5000, 11, 7).unwrap();
        assert_eq!(a.spec, b.spec);
        assert_ne!(a.eliminated_at, drifting_good_set(64, 5000, 11, 8).unwrap().eliminated_at);
    }
}
