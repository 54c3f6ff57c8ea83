use rand::Rng;

use super::{mw_update, play, Decision, ExpertState, GameTrace, Learner, Mechanism};
use crate::adversaries::{AdversarySpec, LossVector};
use crate::dp::PrivacyLedger;
use crate::{Error, Result};

/// Non-private multiplicative weights: `x_t` is a fresh draw from `P^t`
/// every round.
#[derive(Debug, Clone)]
pub struct MultiplicativeWeights {
    state: ExpertState,
    eta: f64,
    ledger: PrivacyLedger,
}

impl MultiplicativeWeights {
    pub fn new(d: usize, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::parameter("eta must lie in (0, 1)"));
        }
        Ok(Self { state: ExpertState::uniform(d)?, eta, ledger: PrivacyLedger::new() })
    }

    pub fn state(&self) -> &ExpertState {
        &self.state
    }
}

impl Learner for MultiplicativeWeights {
    fn d(&self) -> usize {
        self.state.d()
    }

    fn choose<R: Rng + ?Sized>(&mut self, t: u64, rng: &mut R) -> Result<Decision> {
        let expert = self.state.sample(rng)?;
        let switched = t > 1 && expert != self.state.current_expert;
        self.state.current_expert = expert;
        self.state.round = t;
        let mechanism = if t == 1 { Mechanism::Initial } else { Mechanism::Sample };
        Ok(Decision { expert, switched, mechanism })
    }

    fn observe<R: Rng + ?Sized>(&mut self, _t: u64, loss: &LossVector, _rng: &mut R) -> Result<()> {
        mw_update(&mut self.state, loss, self.eta)
    }

    fn ledger(&self) -> &PrivacyLedger {
        &self.ledger
    }
}

pub fn run_multiplicative_weights<R: Rng + ?Sized>(
    eta: f64,
    adversary: &AdversarySpec,
    run: u64,
    rng: &mut R,
) -> Result<GameTrace> {
    let mut mw = MultiplicativeWeights::new(adversary.d(), eta)?;
    play(&mut mw, adversary, run, rng)
}
