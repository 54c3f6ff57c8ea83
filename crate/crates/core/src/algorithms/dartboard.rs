use alloc::vec::Vec;
use rand::Rng;

use super::{mw_update, play, Decision, ExpertState, GameTrace, Learner, Mechanism};
use crate::adversaries::{AdversarySpec, LossVector};
use crate::dp::{sample_bernoulli, PrivacyLedger, PrivacyParams};
use crate::math::{cbrt, ceil, exp, ln, ln_1p, powf, round, sqrt};
use crate::{Error, Result};

/// Parameters of the private shrinking dartboard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SDConfig {
    eta: f64,
    p_switch: f64,
    k_budget: u64,
    batch_size: u64,
    params: PrivacyParams,
    epsilon0: f64,
}

/// `⌈x⌉` that ignores float noise just above an integer.
fn ceil_count(x: f64) -> u64 {
    ceil(x - 1e-9).max(1.0) as u64
}

impl SDConfig {
    /// Checks `0 < η < 1/2`, `0 < p < 1/2`, `K ≥ 1`, `B ≥ 1` and
    /// `η ≤ B·p·ε`, which for `B = 1` is the usual `η ≤ pε`.
    pub fn new(
        eta: f64,
        p_switch: f64,
        k_budget: u64,
        batch_size: u64,
        params: PrivacyParams,
        epsilon0: f64,
    ) -> Result<Self> {
        if !(eta > 0.0 && eta < 0.5) {
            return Err(Error::parameter(alloc::format!("eta = {eta} must lie in (0, 1/2)")));
        }
        if !(p_switch > 0.0 && p_switch < 0.5) {
            return Err(Error::parameter(alloc::format!("p = {p_switch} must lie in (0, 1/2)")));
        }
        if k_budget == 0 || batch_size == 0 {
            return Err(Error::parameter("switching budget K and batch size B must be at least 1"));
        }
        let cap = batch_size as f64 * p_switch * params.epsilon();
        if eta > cap * (1.0 + 1e-12) {
            return Err(Error::parameter(alloc::format!("eta = {eta} exceeds B·p·ε = {cap}")));
        }
        Ok(Self { eta, p_switch, k_budget, batch_size, params, epsilon0 })
    }

    /// Pure-DP corollary: `p = 1/√T`, `η = pε/20`, `K = 4√T`.
    pub fn pure(horizon: u64, d: usize, epsilon: f64) -> Result<Self> {
        check_common(horizon, d, epsilon)?;
        let t = horizon as f64;
        let p = 1.0 / sqrt(t);
        Self::new(p * epsilon / 20.0, p, ceil_count(4.0 * t * p), 1, PrivacyParams::pure(epsilon)?, epsilon)
    }

    /// Approximate-DP corollary: `p = (T ln(1/δ))^{−1/3}`,
    /// `ε0 = min(ε/2, ln^{1/3}(1/δ) √(ln d) / T^{1/6})`, `η = p ε0 / 20`.
    pub fn approx(horizon: u64, d: usize, epsilon: f64, delta: f64) -> Result<Self> {
        check_common(horizon, d, epsilon)?;
        let params = approx_params(epsilon, delta)?;
        if d < 2 {
            return Err(Error::parameter("approximate-DP parameters need d ≥ 2"));
        }
        let t = horizon as f64;
        let li = ln(1.0 / delta);
        if t < 10.0 * li {
            return Err(Error::parameter(alloc::format!("need T ≥ 10 ln(1/δ) = {}", 10.0 * li)));
        }
        let p = 1.0 / cbrt(t * li);
        let eps0 = (epsilon / 2.0).min(cbrt(li) * sqrt(ln(d as f64)) / powf(t, 1.0 / 6.0));
        Self::new(p * eps0 / 20.0, p, ceil_count(4.0 * t * p), 1, params, eps0)
    }

    /// Validity window of the batched corollary:
    /// `ln^{2/3}(1/δ) ln d / T ≤ ε ≤ ln^{2/3}(1/δ) ln d / T^{1/3}`.
    pub fn batched_window(horizon: u64, d: usize, delta: f64) -> (f64, f64) {
        let li = ln(1.0 / delta);
        let base = powf(li, 2.0 / 3.0) * ln(d as f64);
        let t = horizon as f64;
        (base / t, base / cbrt(t))
    }

    /// Batched corollary: `B = ln^{2/5}(1/δ) ln^{3/5}(d) / (T^{1/5} ε^{3/5})`
    /// rounded and clamped to `B ≥ 1`, `p = (B / (T ln(1/δ)))^{1/3}`,
    /// `η = B p ε / 40`, `K = ⌈4Tp/B⌉`.
    pub fn batched(horizon: u64, d: usize, epsilon: f64, delta: f64) -> Result<Self> {
        if horizon == 0 || d < 2 {
            return Err(Error::parameter("batched parameters need T ≥ 1 and d ≥ 2"));
        }
        let params = approx_params(epsilon, delta)?;
        let (lo, hi) = Self::batched_window(horizon, d, delta);
        if !(lo..=hi).contains(&epsilon) {
            return Err(Error::parameter(alloc::format!("epsilon = {epsilon} outside the batched window [{lo}, {hi}]")));
        }
        let t = horizon as f64;
        let li = ln(1.0 / delta);
        let b_raw = powf(li, 0.4) * powf(ln(d as f64), 0.6) / (powf(t, 0.2) * powf(epsilon, 0.6));
        let b = round(b_raw).max(1.0).min(t);
        let p = cbrt(b / (t * li));
        Self::new(b * p * epsilon / 40.0, p, ceil_count(4.0 * t * p / b), b as u64, params, epsilon)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn p_switch(&self) -> f64 {
        self.p_switch
    }

    pub fn k_budget(&self) -> u64 {
        self.k_budget
    }

    pub fn batch_size(&self) -> u64 {
        self.batch_size
    }

    pub fn params(&self) -> PrivacyParams {
        self.params
    }

    pub fn epsilon0(&self) -> f64 {
        self.epsilon0
    }

    pub fn with_k_budget(mut self, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::parameter("switching budget K must be at least 1"));
        }
        self.k_budget = k;
        Ok(self)
    }

    /// Closed-form privacy of the run over `T` rounds: `η/p + 16Tpη` for
    /// `δ = 0`; `5η/p + 100Tpη² + 20η√(Tp ln(1/δ))` otherwise, with the
    /// batched variant `5η/(Bp) + 100Tpη²/B³ + (20η/B)√(12Tp/B · ln(1/δ))`.
    pub fn theorem_epsilon(&self, horizon: u64) -> f64 {
        let (eta, p, t) = (self.eta, self.p_switch, horizon as f64);
        let b = self.batch_size as f64;
        if self.params.is_pure() {
            return eta / p + 16.0 * t * p * eta;
        }
        let li = ln(1.0 / self.params.delta());
        if self.batch_size == 1 {
            5.0 * eta / p + 100.0 * t * p * eta * eta + 20.0 * eta * sqrt(t * p * li)
        } else {
            5.0 * eta / (b * p) + 100.0 * t * p * eta * eta / (b * b * b) + 20.0 * eta / b * sqrt(12.0 * t * p / b * li)
        }
    }
}

fn check_common(horizon: u64, d: usize, epsilon: f64) -> Result<()> {
    if horizon == 0 || d == 0 {
        return Err(Error::parameter("need T ≥ 1 and d ≥ 1"));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::parameter("the corollary parameters need 0 < ε ≤ 1"));
    }
    Ok(())
}

fn approx_params(epsilon: f64, delta: f64) -> Result<PrivacyParams> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::parameter("delta must lie in (0, 1) so that ln(1/δ) > 0"));
    }
    PrivacyParams::new(epsilon, delta)
}

/// One shrinking-dartboard round for `t ≥ 2`. Applies the weight update
/// with `ℓ_{t−1}`, keeps `x_{t−1}` with probability
/// `(1 − p)(1 − η)^{ℓ_{t−1}(x_{t−1})}` and otherwise resamples from `P^t`
/// while the budget allows. Returns the mechanism that decided the round.
pub fn sd_step<R: Rng + ?Sized>(
    state: &mut ExpertState,
    config: &SDConfig,
    prev_loss: &[f64],
    rng: &mut R,
) -> Result<Mechanism> {
    let x = state.current_expert;
    mw_update(state, prev_loss, config.eta)?;
    state.round += 1;
    let mut keep = sample_bernoulli(1.0 - config.p_switch, rng)?;
    if keep {
        // w^t_x / w^{t−1}_x = (1 − η)^{ℓ(x)}.
        keep = sample_bernoulli(exp(prev_loss[x] * ln_1p(-config.eta)), rng)?;
    }
    if keep {
        Ok(Mechanism::Keep)
    } else if state.switch_count + 1 < config.k_budget {
        // The budget counter starts at 1 with the initial draw.
        state.switch_count += 1;
        state.current_expert = state.sample(rng)?;
        Ok(Mechanism::Resample)
    } else {
        Ok(Mechanism::Frozen)
    }
}

/// Averages consecutive half-open blocks of `B` rounds; the last block may
/// be shorter and is averaged over its own length.
pub fn batch_losses(losses: &[LossVector], batch: usize) -> Result<Vec<LossVector>> {
    if batch == 0 {
        return Err(Error::parameter("batch size must be at least 1"));
    }
    losses
        .chunks(batch)
        .map(|chunk| {
            let d = chunk[0].len();
            let n = chunk.len() as f64;
            let mean = (0..d).map(|i| chunk.iter().map(|l| l[i]).sum::<f64>() / n).collect();
            LossVector::new(mean)
        })
        .collect()
}

/// Private shrinking dartboard as an online learner. With `B > 1` each
/// decision is replayed for `B` rounds and the weights see batch averages.
#[derive(Debug, Clone)]
pub struct ShrinkingDartboard {
    config: SDConfig,
    state: ExpertState,
    batch_sum: Vec<f64>,
    batch_len: u64,
    ledger: PrivacyLedger,
}

impl ShrinkingDartboard {
    pub fn new(d: usize, config: SDConfig) -> Result<Self> {
        Ok(Self {
            config,
            state: ExpertState::uniform(d)?,
            batch_sum: alloc::vec![0.0; d],
            batch_len: 0,
            ledger: PrivacyLedger::new(),
        })
    }

    pub fn state(&self) -> &ExpertState {
        &self.state
    }
}

impl Learner for ShrinkingDartboard {
    fn d(&self) -> usize {
        self.state.d()
    }

    fn choose<R: Rng + ?Sized>(&mut self, t: u64, rng: &mut R) -> Result<Decision> {
        let b = self.config.batch_size;
        let bf = b as f64;
        if t == 1 {
            self.state.current_expert = self.state.sample(rng)?;
            self.ledger.charge(self.config.eta / (bf * self.config.p_switch), 0.0)?;
            return Ok(Decision { expert: self.state.current_expert, switched: false, mechanism: Mechanism::Initial });
        }
        if !(t - 1).is_multiple_of(b) {
            return Ok(Decision { expert: self.state.current_expert, switched: false, mechanism: Mechanism::Keep });
        }
        let n = self.batch_len as f64;
        let prev: Vec<f64> = self.batch_sum.iter().map(|s| s / n).collect();
        self.batch_sum.iter_mut().for_each(|s| *s = 0.0);
        self.batch_len = 0;
        let mechanism = sd_step(&mut self.state, &self.config, &prev, rng)?;
        let switched = mechanism == Mechanism::Resample;
        if switched {
            self.ledger.charge(4.0 * self.config.eta / bf, 0.0)?;
        }
        Ok(Decision { expert: self.state.current_expert, switched, mechanism })
    }

    fn observe<R: Rng + ?Sized>(&mut self, _t: u64, loss: &LossVector, _rng: &mut R) -> Result<()> {
        for (s, l) in self.batch_sum.iter_mut().zip(loss.iter()) {
            *s += l;
        }
        self.batch_len += 1;
        Ok(())
    }

    fn ledger(&self) -> &PrivacyLedger {
        &self.ledger
    }
}

pub fn run_shrinking_dartboard<R: Rng + ?Sized>(
    config: &SDConfig,
    adversary: &AdversarySpec,
    run: u64,
    rng: &mut R,
) -> Result<GameTrace> {
    let mut sd = ShrinkingDartboard::new(adversary.d(), *config)?;
    play(&mut sd, adversary, run, rng)
}
