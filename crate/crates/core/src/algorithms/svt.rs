use alloc::vec::Vec;
use rand::Rng;

use super::{play, Decision, GameTrace, Learner, Mechanism};
use crate::adversaries::{AdversarySpec, LossVector};
use crate::dp::{exponential_mechanism, sample_laplace, AboveThreshold, NoiseMode, PrivacyLedger, PrivacyParams, SvtOutcome};
use crate::math::{ceil, ceil_log2, ln, log2, sqrt};
use crate::{Error, Result};

/// Parameters of the sparse-vector learner for (near-)realizable losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SVTRealizableConfig {
    pub k_switches: u64,
    pub eta: f64,
    pub l_star: f64,
    pub threshold: f64,
    pub beta: f64,
    /// `B = ln(2T²/β)`.
    pub svt_log_term: f64,
    pub params: PrivacyParams,
}

impl SVTRealizableConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_switches == 0 {
            return Err(Error::parameter("switching bound K must be at least 1"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::parameter("eta must be positive"));
        }
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return Err(Error::parameter("beta must lie in (0, 1/2)"));
        }
        if !(self.l_star >= 0.0 && self.threshold.is_finite()) {
            return Err(Error::parameter("L* must be nonnegative and L finite"));
        }
        Ok(())
    }
}

/// `B = ln(2T²/β)`, `K = ⌈6⌈log2 d⌉ + 24 ln(1/β)⌉`, `η = ε/2K` (pure) or
/// `ε / (4√(2K ln(1/δ)))`, and `L = L* + 4/η + 8B/ε`.
pub fn svt_params(horizon: u64, d: usize, epsilon: f64, delta: f64, beta: f64, l_star: f64) -> Result<SVTRealizableConfig> {
    if horizon == 0 || d == 0 {
        return Err(Error::parameter("need T ≥ 1 and d ≥ 1"));
    }
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::parameter("beta must lie in (0, 1/2)"));
    }
    let params = PrivacyParams::new(epsilon, delta)?;
    let t = horizon as f64;
    let log_term = ln(2.0 * t * t / beta);
    let k = ceil(6.0 * ceil_log2(d as u64) as f64 + 24.0 * ln(1.0 / beta)) as u64;
    let kf = k as f64;
    let eta = if params.is_pure() { epsilon / (2.0 * kf) } else { epsilon / (4.0 * sqrt(2.0 * kf * ln(1.0 / delta))) };
    let config = SVTRealizableConfig {
        k_switches: k,
        eta,
        l_star,
        threshold: l_star + 4.0 / eta + 8.0 * log_term / epsilon,
        beta,
        svt_log_term: log_term,
        params,
    };
    config.validate()?;
    Ok(config)
}

/// One sparse-vector epoch: the rounds played by one selected expert.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvtEpoch {
    pub start: u64,
    pub end: u64,
    /// Loss incurred by the learner over `start..=end`.
    pub loss: f64,
    /// Whether the epoch ended with AboveThreshold halting.
    pub halted: bool,
    pub threshold: f64,
}

/// Shared round logic of both sparse-vector learners.
#[derive(Debug, Clone)]
struct SvtCore {
    k_max: u64,
    eta: f64,
    l_star: f64,
    threshold: f64,
    eps_svt: f64,
    beta_svt: f64,
    horizon: u64,
    noise: NoiseMode,
    x: usize,
    k: u64,
    svt: Option<AboveThreshold>,
    halted_at: Option<u64>,
    fire_pending: bool,
    epoch_loss: f64,
    epoch_start: u64,
    epochs: Vec<SvtEpoch>,
}

impl SvtCore {
    #[allow(clippy::too_many_arguments)]
    fn new(k_max: u64, eta: f64, l_star: f64, threshold: f64, eps_svt: f64, beta: f64, horizon: u64, noise: NoiseMode) -> Self {
        Self {
            k_max,
            eta,
            l_star,
            threshold,
            eps_svt,
            beta_svt: beta / horizon as f64,
            horizon,
            noise,
            x: 0,
            k: 0,
            svt: None,
            halted_at: None,
            fire_pending: false,
            epoch_loss: 0.0,
            epoch_start: 1,
            epochs: Vec::new(),
        }
    }

    /// Start over with a new `L*` and threshold, keeping the current expert.
    fn restart(&mut self, t: u64, l_star: f64, threshold: f64) {
        self.l_star = l_star;
        self.threshold = threshold;
        self.k = 0;
        self.svt = None;
        self.epoch_start = t;
        self.epoch_loss = 0.0;
    }

    fn step<R: Rng + ?Sized>(&mut self, t: u64, cumulative: &[f64], rng: &mut R) -> Result<Decision> {
        let mut mechanism = Mechanism::Keep;
        if t == 1 {
            self.x = rng.gen_range(0..cumulative.len());
            mechanism = Mechanism::Initial;
        }
        if self.fire_pending {
            self.fire_pending = false;
            let scores: Vec<f64> = cumulative.iter().map(|c| c.max(self.l_star)).collect();
            self.x = exponential_mechanism(&scores, self.eta, rng)?;
            self.k += 1;
            self.epoch_start = t;
            self.epoch_loss = 0.0;
            return Ok(Decision { expert: self.x, switched: true, mechanism: Mechanism::Exponential });
        }
        if self.k < self.k_max {
            if self.svt.is_none() {
                let p = PrivacyParams::pure(self.eps_svt)?;
                self.svt = Some(AboveThreshold::with_noise(
                    p,
                    self.threshold,
                    self.horizon,
                    self.beta_svt,
                    self.noise.clone(),
                    rng,
                )?);
            }
            let svt = self.svt.as_mut().expect("initialized above");
            // The query is the current expert's loss since the epoch began.
            if svt.query(self.epoch_loss, rng)? == SvtOutcome::Halt {
                self.svt = None;
                self.halted_at = Some(t);
            }
        } else if mechanism == Mechanism::Keep {
            mechanism = Mechanism::Frozen;
        }
        Ok(Decision { expert: self.x, switched: false, mechanism })
    }

    fn observe(&mut self, t: u64, loss: &LossVector) {
        self.epoch_loss += loss[self.x];
        if self.halted_at == Some(t) {
            self.halted_at = None;
            self.fire_pending = true;
            self.push_epoch(t, true);
        }
    }

    fn push_epoch(&mut self, end: u64, halted: bool) {
        self.epochs.push(SvtEpoch {
            start: self.epoch_start,
            end,
            loss: self.epoch_loss,
            halted,
            threshold: self.threshold,
        });
    }

    /// Close the running epoch if it was interrupted by a restart or the horizon.
    fn close_open_epoch(&mut self, end: u64) {
        if !self.fire_pending && end >= self.epoch_start {
            self.push_epoch(end, false);
        }
    }
}

/// Sparse-vector learner for loss sequences with a known bound `L*` on the
/// best expert's total loss.
#[derive(Debug, Clone)]
pub struct SvtRealizable {
    config: SVTRealizableConfig,
    core: SvtCore,
    cumulative: Vec<f64>,
    last_round: u64,
    ledger: PrivacyLedger,
}

impl SvtRealizable {
    pub fn new(d: usize, horizon: u64, config: SVTRealizableConfig) -> Result<Self> {
        Self::with_noise(d, horizon, config, NoiseMode::Calibrated)
    }

    /// `noise` drives every AboveThreshold instance (each gets its own copy);
    /// the exponential mechanism always samples.
    pub fn with_noise(d: usize, horizon: u64, config: SVTRealizableConfig, noise: NoiseMode) -> Result<Self> {
        config.validate()?;
        if d == 0 || horizon == 0 {
            return Err(Error::parameter("need d ≥ 1 and T ≥ 1"));
        }
        let eps_svt = config.params.epsilon() / 2.0;
        let core = SvtCore::new(config.k_switches, config.eta, config.l_star, config.threshold, eps_svt, config.beta, horizon, noise);
        let mut ledger = PrivacyLedger::new();
        // Every AboveThreshold instance reads disjoint rounds: ε/2 in total.
        ledger.charge(eps_svt, 0.0)?;
        Ok(Self { config, core, cumulative: alloc::vec![0.0; d], last_round: 0, ledger })
    }

    pub fn switch_count(&self) -> u64 {
        self.core.k
    }

    /// SVT accuracy radius `8(ln T + ln(2T/β)) / (ε/2)` of each instance.
    pub fn alpha(&self) -> f64 {
        let t = self.core.horizon as f64;
        8.0 * (ln(t) + ln(2.0 / self.core.beta_svt)) / self.core.eps_svt
    }

    pub fn config(&self) -> &SVTRealizableConfig {
        &self.config
    }
}

impl Learner for SvtRealizable {
    fn d(&self) -> usize {
        self.cumulative.len()
    }

    fn choose<R: Rng + ?Sized>(&mut self, t: u64, rng: &mut R) -> Result<Decision> {
        let decision = self.core.step(t, &self.cumulative, rng)?;
        if decision.mechanism == Mechanism::Exponential {
            self.ledger.charge(self.config.eta, 0.0)?;
        }
        Ok(decision)
    }

    fn observe<R: Rng + ?Sized>(&mut self, t: u64, loss: &LossVector, _rng: &mut R) -> Result<()> {
        for (c, l) in self.cumulative.iter_mut().zip(loss.iter()) {
            *c += l;
        }
        self.core.observe(t, loss);
        self.last_round = t;
        Ok(())
    }

    fn ledger(&self) -> &PrivacyLedger {
        &self.ledger
    }

    fn finish(&self, trace: &mut GameTrace) {
        let mut core = self.core.clone();
        core.close_open_epoch(self.last_round);
        trace.svt_epochs = core.epochs;
    }
}

pub fn run_svt_realizable<R: Rng + ?Sized>(
    config: &SVTRealizableConfig,
    adversary: &AdversarySpec,
    run: u64,
    rng: &mut R,
) -> Result<GameTrace> {
    let mut learner = SvtRealizable::new(adversary.d(), adversary.horizon(), *config)?;
    play(&mut learner, adversary, run, rng)
}

/// Derived constants of the adaptive learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveParams {
    pub epsilon: f64,
    /// `ε0 = ε / (2 max(log2 T, 1))`.
    pub epsilon0: f64,
    /// `K = ⌈⌈log2 d⌉ + 2 ln(T/β)⌉`.
    pub k_switches: u64,
    /// `η = ε0 / 2K`.
    pub eta: f64,
    /// `B = ln T + ln(2T/β)`.
    pub log_term: f64,
    pub beta: f64,
    /// Doubling margin `5K ln(T/β) / ε0`.
    pub doubling_margin: f64,
    /// `⌈log2 T⌉ + 1`.
    pub max_epochs: u64,
}

impl AdaptiveParams {
    pub fn new(horizon: u64, d: usize, epsilon: f64, beta: f64) -> Result<Self> {
        if horizon == 0 || d == 0 {
            return Err(Error::parameter("need T ≥ 1 and d ≥ 1"));
        }
        if !(beta > 0.0 && beta < 0.5) {
            return Err(Error::parameter("beta must lie in (0, 1/2)"));
        }
        PrivacyParams::pure(epsilon)?;
        let t = horizon as f64;
        let epsilon0 = epsilon / (2.0 * log2(t).max(1.0));
        let k = ceil(ceil_log2(d as u64) as f64 + 2.0 * ln(t / beta)).max(1.0) as u64;
        let kf = k as f64;
        Ok(Self {
            epsilon,
            epsilon0,
            k_switches: k,
            eta: epsilon0 / (2.0 * kf),
            log_term: ln(t) + ln(2.0 * t / beta),
            beta,
            doubling_margin: 5.0 * kf * ln(t / beta) / epsilon0,
            max_epochs: ceil_log2(horizon) as u64 + 1,
        })
    }

    /// `L = L̄* + 4/η + 8B/ε0`.
    pub fn threshold(&self, l_bar: f64) -> f64 {
        l_bar + 4.0 / self.eta + 8.0 * self.log_term / self.epsilon0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveState {
    pub l_bar: f64,
    pub epoch: u64,
    pub epsilon0: f64,
    pub laplace_scale: f64,
}

/// Doubling-trick wrapper around the sparse-vector learner that does not
/// need `L*`. Each time the exponential mechanism fires, a Laplace estimate
/// of the new expert's loss is compared with the current guess `L̄*`; a
/// clearly larger loss doubles `L̄*` and restarts the inner learner.
#[derive(Debug, Clone)]
pub struct SvtAdaptive {
    params: AdaptiveParams,
    state: AdaptiveState,
    core: SvtCore,
    cumulative: Vec<f64>,
    l_bar_history: Vec<f64>,
    last_round: u64,
    ledger: PrivacyLedger,
    noise: NoiseMode,
}

impl SvtAdaptive {
    pub fn new(d: usize, horizon: u64, params: AdaptiveParams) -> Result<Self> {
        Self::with_noise(d, horizon, params, NoiseMode::Calibrated, NoiseMode::Calibrated)
    }

    /// `svt_noise` drives every AboveThreshold instance (each gets its own
    /// copy) and `check_noise` the Laplace checks on `L̄*`.
    pub fn with_noise(
        d: usize,
        horizon: u64,
        params: AdaptiveParams,
        svt_noise: NoiseMode,
        check_noise: NoiseMode,
    ) -> Result<Self> {
        if d == 0 || horizon == 0 {
            return Err(Error::parameter("need d ≥ 1 and T ≥ 1"));
        }
        let l_bar = 1.0;
        let core = SvtCore::new(
            params.k_switches,
            params.eta,
            l_bar,
            params.threshold(l_bar),
            params.epsilon0 / 2.0,
            params.beta,
            horizon,
            svt_noise,
        );
        let mut ledger = PrivacyLedger::new();
        ledger.charge(params.epsilon0 / 2.0, 0.0)?;
        Ok(Self {
            params,
            state: AdaptiveState {
                l_bar,
                epoch: 1,
                epsilon0: params.epsilon0,
                laplace_scale: params.k_switches as f64 / params.epsilon0,
            },
            core,
            cumulative: alloc::vec![0.0; d],
            l_bar_history: alloc::vec![l_bar],
            last_round: 0,
            ledger,
            noise: check_noise,
        })
    }

    pub fn state(&self) -> &AdaptiveState {
        &self.state
    }

    pub fn params(&self) -> &AdaptiveParams {
        &self.params
    }
}

impl Learner for SvtAdaptive {
    fn d(&self) -> usize {
        self.cumulative.len()
    }

    fn choose<R: Rng + ?Sized>(&mut self, t: u64, rng: &mut R) -> Result<Decision> {
        let decision = self.core.step(t, &self.cumulative, rng)?;
        if decision.mechanism != Mechanism::Exponential {
            return Ok(decision);
        }
        self.ledger.charge(self.params.eta, 0.0)?;
        self.ledger.charge(self.params.epsilon0 / self.params.k_switches as f64, 0.0)?;
        let zeta = match self.noise.override_draw() {
            Some(v) => v,
            None => sample_laplace(self.state.laplace_scale, rng)?,
        };
        let estimate = self.cumulative[decision.expert] + zeta;
        if estimate > self.state.l_bar + self.params.doubling_margin && self.state.epoch < self.params.max_epochs {
            self.state.l_bar *= 2.0;
            self.state.epoch += 1;
            self.l_bar_history.push(self.state.l_bar);
            self.core.restart(t, self.state.l_bar, self.params.threshold(self.state.l_bar));
            self.ledger.charge(self.params.epsilon0 / 2.0, 0.0)?;
        }
        Ok(decision)
    }

    fn observe<R: Rng + ?Sized>(&mut self, t: u64, loss: &LossVector, _rng: &mut R) -> Result<()> {
        for (c, l) in self.cumulative.iter_mut().zip(loss.iter()) {
            *c += l;
        }
        self.core.observe(t, loss);
        self.last_round = t;
        Ok(())
    }

    fn ledger(&self) -> &PrivacyLedger {
        &self.ledger
    }

    fn finish(&self, trace: &mut GameTrace) {
        let mut core = self.core.clone();
        core.close_open_epoch(self.last_round);
        trace.svt_epochs = core.epochs;
        trace.l_bar = self.l_bar_history.clone();
    }
}

pub fn run_svt_adaptive<R: Rng + ?Sized>(
    horizon: u64,
    d: usize,
    epsilon: f64,
    beta: f64,
    adversary: &AdversarySpec,
    run: u64,
    rng: &mut R,
) -> Result<GameTrace> {
    if adversary.horizon() != horizon || adversary.d() != d {
        return Err(Error::parameter("adversary shape differs from (T, d)"));
    }
    let params = AdaptiveParams::new(horizon, d, epsilon, beta)?;
    let mut learner = SvtAdaptive::new(d, horizon, params)?;
    play(&mut learner, adversary, run, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::drifting_good_set;
    use crate::dp::compose_basic;
    use crate::rng::derive;

    #[test]
    fn parameter_example() {
        let c = svt_params(10_000, 16, 1.0, 0.0, 0.05, 0.0).unwrap();
        // Frozen from an independent evaluation: K = ⌈24 + 24 ln 20⌉.
        assert_eq!(c.k_switches, 96);
        assert!((c.eta - 1.0 / 192.0).abs() < 1e-15);
        assert!((c.svt_log_term - 22.109_560_3).abs() < 1e-6, "{}", c.svt_log_term);
        assert!((c.threshold - 944.876_482).abs() < 1e-5, "{}", c.threshold);
        let with_l = svt_params(10_000, 16, 1.0, 0.0, 0.05, 7.0).unwrap();
        assert!((with_l.threshold - c.threshold - 7.0).abs() < 1e-9);
        assert!(svt_params(10, 2, 1.0, 0.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn approximate_branch_eta() {
        for (d, delta) in [(16usize, 1e-6), (2, 0.3), (1024, 1e-12), (3, 0.9)] {
            let pure = svt_params(1000, d, 1.0, 0.0, 0.05, 0.0).unwrap();
            let approx = svt_params(1000, d, 1.0, delta, 0.05, 0.0).unwrap();
            let k = pure.k_switches as f64;
            let smaller = 4.0 * sqrt(2.0 * k * ln(1.0 / delta)) > 2.0 * k;
            assert_eq!(approx.eta < pure.eta, smaller);
        }
    }

    #[test]
    fn zero_losses_never_halt() {
        let c = svt_params(2000, 8, 1.0, 0.0, 0.05, 0.0).unwrap();
        let adv = AdversarySpec::zeros(8, 2000).unwrap();
        for run in 0..20 {
            let trace = run_svt_realizable(&c, &adv, run, &mut derive(60, run)).unwrap();
            assert_eq!(trace.incurred(), 0.0);
            assert_eq!(trace.switches(), 0);
            assert_eq!(trace.ledger.len(), 1);
        }
    }

    #[test]
    fn noiseless_halts_exactly_at_threshold() {
        // Expert 0 always loses; with L = 3 the query (loss since epoch
        // start) reaches 3 at round 4, and the mechanism fires at round 5.
        let config = SVTRealizableConfig {
            k_switches: 10,
            eta: 1.0,
            l_star: 0.0,
            threshold: 3.0,
            beta: 0.1,
            svt_log_term: 1.0,
            params: PrivacyParams::pure(1.0).unwrap(),
        };
        let rows = (0..7).map(|_| LossVector::new(alloc::vec![1.0]).unwrap()).collect();
        let adv = AdversarySpec::oblivious(rows).unwrap();
        let mut learner = SvtRealizable::with_noise(1, 7, config, NoiseMode::Noiseless).unwrap();
        let trace = play(&mut learner, &adv, 0, &mut derive(61, 0)).unwrap();
        let fires: Vec<u64> = trace.rounds.iter().filter(|r| r.switched).map(|r| r.t).collect();
        // The second epoch starts at round 5 and its queries at rounds 6
        // and 7 are 1 and 2, below the threshold.
        assert_eq!(fires, alloc::vec![5]);
        assert_eq!(trace.svt_epochs.len(), 2);
        assert_eq!(trace.svt_epochs[0], SvtEpoch { start: 1, end: 4, loss: 4.0, halted: true, threshold: 3.0 });
        assert!(!trace.svt_epochs[1].halted);
    }

    #[test]
    fn budget_caps_switches() {
        let g = drifting_good_set(16, 3000, 3, 5).unwrap();
        let mut c = svt_params(3000, 16, 1.0, 0.0, 0.05, 0.0).unwrap();
        c.k_switches = 2;
        c.threshold = 5.0;
        let trace = run_svt_realizable(&c, &g.spec, 0, &mut derive(62, 0)).unwrap();
        assert!(trace.switches() <= 2);
        let composed = compose_basic(&trace.ledger);
        assert!(composed.epsilon <= 0.5 + 2.0 * c.eta + 1e-12);
    }

    #[test]
    fn adaptive_parameters() {
        let p = AdaptiveParams::new(1024, 64, 1.0, 0.05).unwrap();
        assert!((p.epsilon0 - 0.05).abs() < 1e-15);
        // ⌈6 + 2 ln(1024/0.05)⌉ = ⌈25.85⌉.
        assert_eq!(p.k_switches, 26);
        assert!((p.eta - 0.05 / 52.0).abs() < 1e-15);
        assert_eq!(p.max_epochs, 11);
        assert!((p.threshold(1.0) - (1.0 + 4.0 / p.eta + 8.0 * p.log_term / 0.05)).abs() < 1e-9);
        let one = AdaptiveParams::new(1, 2, 1.0, 0.05).unwrap();
        assert_eq!(one.max_epochs, 1);
        assert!((one.epsilon0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn adaptive_single_round() {
        let adv = AdversarySpec::zeros(3, 1).unwrap();
        let trace = run_svt_adaptive(1, 3, 1.0, 0.05, &adv, 0, &mut derive(63, 0)).unwrap();
        assert_eq!(trace.l_bar, alloc::vec![1.0]);
        assert_eq!(trace.rounds.len(), 1);
    }

    #[test]
    fn adaptive_doubles_on_injected_estimates() {
        // Noiseless AboveThreshold; the second Laplace check is pushed past
        // the margin and forces exactly one doubling.
        let mut p = AdaptiveParams::new(64, 2, 1.0, 0.05).unwrap();
        p.eta = 1.0;
        p.log_term = 0.0;
        p.doubling_margin = 1e6;
        let rows = (0..64).map(|_| LossVector::new(alloc::vec![1.0, 1.0]).unwrap()).collect();
        let adv = AdversarySpec::oblivious(rows).unwrap();
        let checks = NoiseMode::injected(alloc::vec![0.0, 1e7]);
        let mut learner = SvtAdaptive::with_noise(2, 64, p, NoiseMode::Noiseless, checks).unwrap();
        let trace = play(&mut learner, &adv, 0, &mut derive(64, 0)).unwrap();
        assert_eq!(trace.l_bar, alloc::vec![1.0, 2.0]);
    }
}
