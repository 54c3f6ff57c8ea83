//! Loss sequences: oblivious matrices, i.i.d. stochastic laws and a small
//! catalog of adaptive rules.
//!
//! Experts are indexed from 0 throughout.

mod constructions;
mod parse;

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;
use rand::Rng;

use crate::dp::sample_bernoulli;
use crate::rng::{split, StreamRng};
use crate::{Error, Result};

pub use constructions::{drifting_good_set, hide_expert_k, realizable_hide_expert, DriftingGoodSet};
pub use parse::parse_loss_matrix;

/// Stream-splitting tag for adversary randomness.
const ADVERSARY_STREAM: u64 = 0xAD;

/// One round's losses over `d` experts, every entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossVector(Vec<f64>);

impl LossVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::parameter(alloc::format!(
                "loss entry {} at expert {i} is outside [0, 1]",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    /// `ℓ(x) = 0` at `good`, 1 elsewhere.
    pub fn indicator_except(d: usize, good: usize) -> Self {
        Self((0..d).map(|x| if x == good { 0.0 } else { 1.0 }).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for LossVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for LossVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Distributions for i.i.d. loss vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum StochasticLaw {
    /// Independent `Ber(q_i)` per coordinate.
    Bernoulli(Vec<f64>),
    /// Independent `Uniform[0, 1]` per coordinate.
    Uniform,
    /// Bernoulli losses with mean `low` at expert `good` and `high` elsewhere.
    OneLowMean { good: usize, low: f64, high: f64 },
}

impl StochasticLaw {
    /// Expected loss of every expert.
    pub fn means(&self, d: usize) -> Vec<f64> {
        match self {
            StochasticLaw::Bernoulli(q) => q.clone(),
            StochasticLaw::Uniform => vec![0.5; d],
            StochasticLaw::OneLowMean { good, low, high } => {
                (0..d).map(|x| if x == *good { *low } else { *high }).collect()
            }
        }
    }
}

/// Closed catalog of adaptive rules. Rules only see `x_{1:t−1}`.
#[derive(Debug, Clone, PartialEq)]
pub enum AdaptiveRule {
    /// `ℓ_t(x_{t−1}) = 1`, every other entry 0; round 1 is all zeros.
    PunishLast,
    /// Loss 1 on the expert played most often so far (lowest index on ties).
    PunishFrequent,
    /// History-independent fallback driven by a fixed matrix.
    Matrix(Vec<LossVector>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Oblivious(Vec<LossVector>),
    Stochastic(StochasticLaw),
    Adaptive(AdaptiveRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryKind {
    Oblivious,
    Stochastic,
    Adaptive,
}

/// Immutable description of a loss source over `d` experts and `T` rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarySpec {
    d: usize,
    horizon: u64,
    payload: Payload,
    seed: u64,
}

impl AdversarySpec {
    pub fn oblivious(rows: Vec<LossVector>) -> Result<Self> {
        let d = check_matrix(&rows)?;
        Ok(Self { d, horizon: rows.len() as u64, payload: Payload::Oblivious(rows), seed: 0 })
    }

    pub fn stochastic(d: usize, horizon: u64, law: StochasticLaw, seed: u64) -> Result<Self> {
        check_shape(d, horizon)?;
        let check_mean = |q: f64| (0.0..=1.0).contains(&q);
        match &law {
            StochasticLaw::Bernoulli(q) => {
                if q.len() != d || !q.iter().all(|&q| check_mean(q)) {
                    return Err(Error::parameter("Bernoulli law needs d means in [0, 1]"));
                }
            }
            StochasticLaw::Uniform => {}
            StochasticLaw::OneLowMean { good, low, high } => {
                if *good >= d || !check_mean(*low) || !check_mean(*high) || low >= high {
                    return Err(Error::parameter("one-low-mean law needs good < d and 0 ≤ low < high ≤ 1"));
                }
            }
        }
        Ok(Self { d, horizon, payload: Payload::Stochastic(law), seed })
    }

    pub fn adaptive(d: usize, horizon: u64, rule: AdaptiveRule) -> Result<Self> {
        check_shape(d, horizon)?;
        if let AdaptiveRule::Matrix(rows) = &rule {
            if check_matrix(rows)? != d || rows.len() as u64 != horizon {
                return Err(Error::parameter("adaptive fallback matrix must be T × d"));
            }
        }
        Ok(Self { d, horizon, payload: Payload::Adaptive(rule), seed: 0 })
    }

    pub fn zeros(d: usize, horizon: u64) -> Result<Self> {
        check_shape(d, horizon)?;
        Self::oblivious(vec![LossVector::zeros(d); horizon as usize])
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn kind(&self) -> AdversaryKind {
        match self.payload {
            Payload::Oblivious(_) => AdversaryKind::Oblivious,
            Payload::Stochastic(_) => AdversaryKind::Stochastic,
            Payload::Adaptive(_) => AdversaryKind::Adaptive,
        }
    }

    /// The loss matrix when the sequence is fixed in advance.
    pub fn matrix(&self) -> Option<&[LossVector]> {
        match &self.payload {
            Payload::Oblivious(rows) => Some(rows),
            _ => None,
        }
    }

    /// Per-run generator; run `i` draws from `split(seed, i, ·)`.
    pub fn source(&self, run: u64) -> LossSource<'_> {
        LossSource { spec: self, rng: split(self.seed, run, ADVERSARY_STREAM), counts: vec![0; self.d], seen: 0 }
    }
}

fn check_shape(d: usize, horizon: u64) -> Result<()> {
    if d == 0 || horizon == 0 {
        return Err(Error::parameter("adversary needs d ≥ 1 and T ≥ 1"));
    }
    Ok(())
}

fn check_matrix(rows: &[LossVector]) -> Result<usize> {
    let d = rows.first().map(|r| r.len()).ok_or_else(|| Error::parameter("loss matrix is empty"))?;
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::parameter("loss matrix rows must share a nonzero width"));
    }
    Ok(d)
}

/// Stateful view of an [`AdversarySpec`] for one run.
#[derive(Debug, Clone)]
pub struct LossSource<'a> {
    spec: &'a AdversarySpec,
    rng: StreamRng,
    counts: Vec<u64>,
    seen: usize,
}

impl LossSource<'_> {
    pub fn spec(&self) -> &AdversarySpec {
        self.spec
    }

    /// Loss for round `t` (1-based) given the plays `x_{1:t−1}`.
    pub fn next_loss(&mut self, t: u64, history: &[usize]) -> Result<LossVector> {
        if t == 0 || t > self.spec.horizon {
            return Err(Error::usage("round outside [1, T]"));
        }
        if history.len() as u64 != t - 1 {
            return Err(Error::usage("history must hold exactly t − 1 plays"));
        }
        let d = self.spec.d;
        if history.last().is_some_and(|&x| x >= d) {
            return Err(Error::usage("history holds an expert index ≥ d"));
        }
        if matches!(self.spec.payload, Payload::Adaptive(AdaptiveRule::PunishFrequent)) {
            if history.len() < self.seen {
                self.counts.iter_mut().for_each(|c| *c = 0);
                self.seen = 0;
            }
            for &x in &history[self.seen..] {
                self.counts[x] += 1;
            }
            self.seen = history.len();
        }
        match &self.spec.payload {
            Payload::Oblivious(rows) => Ok(rows[(t - 1) as usize].clone()),
            Payload::Stochastic(law) => draw(law, d, &mut self.rng),
            Payload::Adaptive(AdaptiveRule::PunishLast) => Ok(match history.last() {
                Some(&x) => unit(d, x),
                None => LossVector::zeros(d),
            }),
            Payload::Adaptive(AdaptiveRule::PunishFrequent) => Ok(if history.is_empty() {
                LossVector::zeros(d)
            } else {
                let max = *self.counts.iter().max().unwrap_or(&0);
                unit(d, self.counts.iter().position(|&c| c == max).unwrap_or(0))
            }),
            Payload::Adaptive(AdaptiveRule::Matrix(rows)) => Ok(rows[(t - 1) as usize].clone()),
        }
    }
}

fn unit(d: usize, x: usize) -> LossVector {
    let mut v = vec![0.0; d];
    v[x] = 1.0;
    LossVector(v)
}

fn draw<R: Rng + ?Sized>(law: &StochasticLaw, d: usize, rng: &mut R) -> Result<LossVector> {
    let mut v = Vec::with_capacity(d);
    match law {
        StochasticLaw::Bernoulli(q) => {
            for &qi in q {
                v.push(if sample_bernoulli(qi, rng)? { 1.0 } else { 0.0 });
            }
        }
        StochasticLaw::Uniform => v.extend((0..d).map(|_| rng.gen::<f64>())),
        StochasticLaw::OneLowMean { good, low, high } => {
            for x in 0..d {
                let q = if x == *good { *low } else { *high };
                v.push(if sample_bernoulli(q, rng)? { 1.0 } else { 0.0 });
            }
        }
    }
    Ok(LossVector(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(v: &[f64]) -> LossVector {
        LossVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn loss_vector_range() {
        assert!(LossVector::new(vec![0.0, 1.0, 0.3]).is_ok());
        assert!(LossVector::new(vec![1.5]).is_err());
        assert!(LossVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn oblivious_zeros() {
        let spec = AdversarySpec::zeros(3, 5).unwrap();
        let mut src = spec.source(0);
        let mut h = Vec::new();
        for t in 1..=5 {
            assert_eq!(src.next_loss(t, &h).unwrap(), LossVector::zeros(3));
            h.push(1);
        }
        assert!(src.next_loss(6, &h).is_err());
    }

    #[test]
    fn history_length_checked() {
        let spec = AdversarySpec::zeros(2, 3).unwrap();
        assert!(matches!(spec.source(0).next_loss(2, &[]), Err(Error::Usage(_))));
    }

    #[test]
    fn bernoulli_means() {
        let spec = AdversarySpec::stochastic(4, 100_000, StochasticLaw::Bernoulli(vec![0.5; 4]), 9).unwrap();
        let mut src = spec.source(0);
        let mut sums = [0.0; 4];
        let mut h = Vec::new();
        for t in 1..=100_000 {
            let l = src.next_loss(t, &h).unwrap();
            for i in 0..4 {
                sums[i] += l[i];
            }
            h.push(0);
        }
        for s in sums {
            assert!((s / 1e5 - 0.5).abs() < 0.005);
        }
    }

    #[test]
    fn stochastic_replays_with_seed() {
        let spec = AdversarySpec::stochastic(3, 20, StochasticLaw::Uniform, 4).unwrap();
        let run = |i| {
            let mut src = spec.source(i);
            let mut h = Vec::new();
            (1..=20)
                .map(|t| {
                    let l = src.next_loss(t, &h).unwrap();
                    h.push(0);
                    l
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(0), run(0));
        assert_ne!(run(0), run(1));
    }

    #[test]
    fn punish_last_choice() {
        let spec = AdversarySpec::adaptive(4, 3, AdaptiveRule::PunishLast).unwrap();
        let mut src = spec.source(0);
        assert_eq!(src.next_loss(1, &[]).unwrap(), LossVector::zeros(4));
        assert_eq!(src.next_loss(2, &[2]).unwrap(), lv(&[0.0, 0.0, 1.0, 0.0]));
    }

    #[test]
    fn punish_frequent_choice() {
        let spec = AdversarySpec::adaptive(3, 4, AdaptiveRule::PunishFrequent).unwrap();
        let mut src = spec.source(0);
        src.next_loss(1, &[]).unwrap();
        assert_eq!(src.next_loss(2, &[2]).unwrap(), lv(&[0.0, 0.0, 1.0]));
        assert_eq!(src.next_loss(3, &[2, 1]).unwrap(), lv(&[0.0, 1.0, 0.0]));
        assert_eq!(src.next_loss(4, &[2, 1, 1]).unwrap(), lv(&[0.0, 1.0, 0.0]));
    }

    #[test]
    fn rejects_bad_laws() {
        assert!(AdversarySpec::stochastic(2, 5, StochasticLaw::Bernoulli(vec![0.5]), 0).is_err());
        let bad = StochasticLaw::OneLowMean { good: 3, low: 0.1, high: 0.5 };
        assert!(AdversarySpec::stochastic(2, 5, bad, 0).is_err());
    }
}
