use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::{play, Decision, GameTrace, Learner, Mechanism};
use crate::adversaries::{AdversarySpec, LossVector};
use crate::dp::{exponential_mechanism, PrivacyLedger, PrivacyParams};
use crate::{Error, Result};

/// Private selection from `n` samples: the exponential mechanism over the
/// cumulative losses (1-sensitive) with `η = ε`.
pub fn dp_select_expert<R: Rng + ?Sized>(cumulative: &[f64], n: u64, epsilon: f64, rng: &mut R) -> Result<usize> {
    if n == 0 {
        return Err(Error::parameter("selection needs at least one sample"));
    }
    exponential_mechanism(cumulative, epsilon, rng)
}

/// Limited updates for stochastic adversaries: the expert changes only at
/// `t = 2, 4, 8, …`, each time selected privately from the losses of rounds
/// `t/2 .. t−1`.
#[derive(Debug, Clone)]
pub struct LimitedUpdates {
    params: PrivacyParams,
    current: usize,
    window: Vec<f64>,
    window_len: u64,
    ledger: PrivacyLedger,
}

impl LimitedUpdates {
    pub fn new(d: usize, params: PrivacyParams) -> Result<Self> {
        if d == 0 {
            return Err(Error::parameter("need at least one expert"));
        }
        Ok(Self { params, current: 0, window: vec![0.0; d], window_len: 0, ledger: PrivacyLedger::new() })
    }
}

impl Learner for LimitedUpdates {
    fn d(&self) -> usize {
        self.window.len()
    }

    fn choose<R: Rng + ?Sized>(&mut self, t: u64, rng: &mut R) -> Result<Decision> {
        if t == 1 {
            self.current = rng.gen_range(0..self.window.len());
            return Ok(Decision { expert: self.current, switched: false, mechanism: Mechanism::Initial });
        }
        if !t.is_power_of_two() {
            return Ok(Decision { expert: self.current, switched: false, mechanism: Mechanism::Keep });
        }
        self.current = dp_select_expert(&self.window, self.window_len, self.params.epsilon(), rng)?;
        // Windows are disjoint, so parallel composition charges the budget once.
        if self.ledger.is_empty() {
            self.ledger.charge(self.params.epsilon(), self.params.delta())?;
        }
        self.window.iter_mut().for_each(|w| *w = 0.0);
        self.window_len = 0;
        Ok(Decision { expert: self.current, switched: true, mechanism: Mechanism::Update })
    }

    fn observe<R: Rng + ?Sized>(&mut self, _t: u64, loss: &LossVector, _rng: &mut R) -> Result<()> {
        for (w, l) in self.window.iter_mut().zip(loss.iter()) {
            *w += l;
        }
        self.window_len += 1;
        Ok(())
    }

    fn ledger(&self) -> &PrivacyLedger {
        &self.ledger
    }
}

pub fn run_limited_updates<R: Rng + ?Sized>(
    adversary: &AdversarySpec,
    params: PrivacyParams,
    run: u64,
    rng: &mut R,
) -> Result<GameTrace> {
    let mut learner = LimitedUpdates::new(adversary.d(), params)?;
    play(&mut learner, adversary, run, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::StochasticLaw;
    use crate::math::ln;
    use crate::rng::derive;

    #[test]
    fn doubling_schedule() {
        let adv = AdversarySpec::stochastic(3, 8, StochasticLaw::Uniform, 2).unwrap();
        let trace = run_limited_updates(&adv, PrivacyParams::pure(1.0).unwrap(), 0, &mut derive(50, 0)).unwrap();
        let updates: Vec<u64> = trace.rounds.iter().filter(|r| r.switched).map(|r| r.t).collect();
        assert_eq!(updates, vec![2, 4, 8]);
        assert_eq!(trace.ledger.len(), 1);
    }

    #[test]
    fn single_round_has_no_update() {
        let adv = AdversarySpec::zeros(5, 1).unwrap();
        let trace = run_limited_updates(&adv, PrivacyParams::pure(1.0).unwrap(), 0, &mut derive(51, 0)).unwrap();
        assert_eq!(trace.switches(), 0);
        assert_eq!(trace.rounds[0].mechanism, Mechanism::Initial);
    }

    #[test]
    fn selection_examples() {
        let mut rng = derive(52, 0);
        assert!((0..100).all(|_| dp_select_expert(&[3.0], 10, 1.0, &mut rng).unwrap() == 0));
        let d = 10;
        let eps = 0.5;
        let mut cum = vec![100.0; d];
        cum[4] -= 2.0 * ln(d as f64 * 1e3) / eps;
        let hits = (0..10_000).filter(|_| dp_select_expert(&cum, 100, eps, &mut rng).unwrap() == 4).count();
        assert!(hits as f64 / 1e4 >= 0.99);
        assert!(dp_select_expert(&cum, 0, eps, &mut rng).is_err());
    }
}
