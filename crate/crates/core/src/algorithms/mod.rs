//! Online learners over `d` experts and the game loop that drives them.

mod dartboard;
mod limited;
mod mw;
mod svt;

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::adversaries::{AdversarySpec, LossVector};
use crate::dp::{sample_from_log_weights, PrivacyLedger};
use crate::math::{exp, ln_1p};
use crate::{Error, Result};

pub use dartboard::{batch_losses, run_shrinking_dartboard, sd_step, SDConfig, ShrinkingDartboard};
pub use limited::{dp_select_expert, run_limited_updates, LimitedUpdates};
pub use mw::{run_multiplicative_weights, MultiplicativeWeights};
pub use svt::{
    run_svt_adaptive, run_svt_realizable, svt_params, AdaptiveParams, AdaptiveState, SVTRealizableConfig,
    SvtAdaptive, SvtEpoch, SvtRealizable,
};

/// Multiplicative-weights state in the log domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertState {
    pub log_weights: Vec<f64>,
    pub current_expert: usize,
    pub switch_count: u64,
    pub round: u64,
}

impl ExpertState {
    /// Uniform weights `w^1 = 1`; the current expert is a placeholder until
    /// the learner samples `x_1`.
    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::parameter("need at least one expert"));
        }
        Ok(Self { log_weights: vec![0.0; d], current_expert: 0, switch_count: 0, round: 1 })
    }

    pub fn d(&self) -> usize {
        self.log_weights.len()
    }

    /// Normalized distribution `P^t`.
    pub fn probabilities(&self) -> Vec<f64> {
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = self.log_weights.iter().map(|l| exp(l - max)).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        sample_from_log_weights(&self.log_weights, rng)
    }
}

/// `w_i ← w_i (1 − η)^{ℓ(i)}`, applied as `log w_i += ℓ(i) ln(1 − η)`.
pub fn mw_update(state: &mut ExpertState, loss: &[f64], eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::parameter("eta must lie in (0, 1)"));
    }
    if loss.len() != state.d() {
        return Err(Error::usage("loss vector length differs from the number of experts"));
    }
    let step = ln_1p(-eta);
    for (w, l) in state.log_weights.iter_mut().zip(loss) {
        *w += l * step;
    }
    Ok(())
}

/// Which rule produced a round's decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    /// First-round draw.
    Initial,
    /// Previous expert kept.
    Keep,
    /// Shrinking-dartboard resample from `P^t`.
    Resample,
    /// Switching budget exhausted; expert frozen.
    Frozen,
    /// Exponential-mechanism selection.
    Exponential,
    /// Fresh non-private draw from `P^t` (multiplicative weights).
    Sample,
    /// Limited-updates selection at a power of two.
    Update,
}

impl Mechanism {
    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::Initial => "initial",
            Mechanism::Keep => "keep",
            Mechanism::Resample => "resample",
            Mechanism::Frozen => "frozen",
            Mechanism::Exponential => "exponential",
            Mechanism::Sample => "sample",
            Mechanism::Update => "update",
        }
    }
}

/// A learner's play for one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub expert: usize,
    pub switched: bool,
    pub mechanism: Mechanism,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: u64,
    pub expert: usize,
    pub loss: f64,
    pub switched: bool,
    pub mechanism: Mechanism,
}

/// Per-round record of one game plus summary state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GameTrace {
    pub rounds: Vec<RoundRecord>,
    /// Cumulative loss of every expert over the recorded rounds.
    pub cumulative: Vec<f64>,
    pub ledger: PrivacyLedger,
    /// Epoch records of the sparse-vector learners.
    pub svt_epochs: Vec<SvtEpoch>,
    /// `L̄*` at the start of each adaptive epoch.
    pub l_bar: Vec<f64>,
}

impl GameTrace {
    pub fn incurred(&self) -> f64 {
        self.rounds.iter().map(|r| r.loss).sum()
    }

    pub fn best_loss(&self) -> f64 {
        self.cumulative.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn switches(&self) -> u64 {
        self.rounds.iter().filter(|r| r.switched).count() as u64
    }

    pub fn plays(&self) -> Vec<usize> {
        self.rounds.iter().map(|r| r.expert).collect()
    }
}

/// `Σ ℓ_t(x_t) − min_x Σ ℓ_t(x)`.
pub fn regret(trace: &GameTrace) -> f64 {
    if trace.rounds.is_empty() {
        return 0.0;
    }
    trace.incurred() - trace.best_loss()
}

/// An online learner: picks `x_t` from `ℓ_{1:t−1}` and then sees `ℓ_t`.
pub trait Learner {
    fn d(&self) -> usize;

    fn choose<R: Rng + ?Sized>(&mut self, t: u64, rng: &mut R) -> Result<Decision>;

    fn observe<R: Rng + ?Sized>(&mut self, t: u64, loss: &LossVector, rng: &mut R) -> Result<()>;

    fn ledger(&self) -> &PrivacyLedger;

    /// Learner-specific diagnostics copied into the finished trace.
    fn finish(&self, _trace: &mut GameTrace) {}
}

/// Play `learner` against run `run` of `adversary` for its full horizon.
pub fn play<L: Learner, R: Rng + ?Sized>(
    learner: &mut L,
    adversary: &AdversarySpec,
    run: u64,
    rng: &mut R,
) -> Result<GameTrace> {
    let d = adversary.d();
    if learner.d() != d {
        return Err(Error::parameter("learner and adversary disagree on the number of experts"));
    }
    let horizon = adversary.horizon();
    let mut source = adversary.source(run);
    let mut history = Vec::with_capacity(horizon as usize);
    let mut trace = GameTrace { cumulative: vec![0.0; d], ..GameTrace::default() };
    trace.rounds.reserve(horizon as usize);
    for t in 1..=horizon {
        let decision = learner.choose(t, rng)?;
        if decision.expert >= d {
            return Err(Error::usage("learner chose an expert index ≥ d"));
        }
        let loss = source.next_loss(t, &history)?;
        for (c, l) in trace.cumulative.iter_mut().zip(loss.iter()) {
            *c += l;
        }
        trace.rounds.push(RoundRecord {
            t,
            expert: decision.expert,
            loss: loss[decision.expert],
            switched: decision.switched,
            mechanism: decision.mechanism,
        });
        learner.observe(t, &loss, rng)?;
        history.push(decision.expert);
    }
    trace.ledger = learner.ledger().clone();
    learner.finish(&mut trace);
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mw_update_examples() {
        let mut s = ExpertState::uniform(2).unwrap();
        mw_update(&mut s, &[1.0, 0.0], 0.5).unwrap();
        assert!((exp(s.log_weights[0]) - 0.5).abs() < 1e-15);
        let p = s.probabilities();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-12 && (p[1] - 2.0 / 3.0).abs() < 1e-12);

        let before = s.clone();
        mw_update(&mut s, &[0.0, 0.0], 0.5).unwrap();
        assert_eq!(s, before);

        let mut s = ExpertState::uniform(3).unwrap();
        mw_update(&mut s, &[1.0, 1.0, 1.0], 0.1).unwrap();
        for p in s.probabilities() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(mw_update(&mut s, &[1.0], 0.1).is_err());
        assert!(mw_update(&mut s, &[1.0, 1.0, 1.0], 1.0).is_err());
    }

    fn record(t: u64, expert: usize, loss: f64) -> RoundRecord {
        RoundRecord { t, expert, loss, switched: false, mechanism: Mechanism::Keep }
    }

    #[test]
    fn regret_examples() {
        // d = 2, losses (1,0), (0,1), always expert 0.
        let trace = GameTrace {
            rounds: vec![record(1, 0, 1.0), record(2, 0, 0.0)],
            cumulative: vec![1.0, 1.0],
            ..GameTrace::default()
        };
        assert_eq!(regret(&trace), 0.0);
        let zero = GameTrace { rounds: vec![record(1, 1, 0.0)], cumulative: vec![0.0, 0.0], ..GameTrace::default() };
        assert_eq!(regret(&zero), 0.0);
        assert_eq!(regret(&GameTrace::default()), 0.0);
    }
}
