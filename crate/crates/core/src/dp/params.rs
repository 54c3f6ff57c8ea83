use alloc::vec::Vec;

use crate::math::{exp, ln, sqrt};
use crate::{Error, Result};

/// Target privacy level `(ε, δ)` with `ε > 0` and `0 ≤ δ < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::parameter("epsilon must be positive and finite"));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::parameter("delta must lie in [0, 1)"));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_pure(&self) -> bool {
        self.delta == 0.0
    }
}

/// A privacy charge or a composed privacy level. Both entries are nonnegative
/// but, unlike [`PrivacyParams`], `ε = 0` is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrivacyLoss {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyLoss {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) || !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::parameter("privacy charges must be finite and nonnegative"));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }
}

impl From<PrivacyParams> for PrivacyLoss {
    fn from(p: PrivacyParams) -> Self {
        Self { epsilon: p.epsilon, delta: p.delta }
    }
}

/// Append-only record of per-event privacy charges.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrivacyLedger {
    events: Vec<PrivacyLoss>,
}

impl PrivacyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, epsilon: f64, delta: f64) -> Result<()> {
        self.events.push(PrivacyLoss::new(epsilon, delta)?);
        Ok(())
    }

    pub fn events(&self) -> &[PrivacyLoss] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

impl FromIterator<PrivacyLoss> for PrivacyLedger {
    fn from_iter<I: IntoIterator<Item = PrivacyLoss>>(iter: I) -> Self {
        Self { events: iter.into_iter().collect() }
    }
}

/// Basic composition: `(Σ ε_t, Σ δ_t)`.
pub fn compose_basic(ledger: &PrivacyLedger) -> PrivacyLoss {
    ledger.events.iter().fold(PrivacyLoss::default(), |acc, e| PrivacyLoss {
        epsilon: acc.epsilon + e.epsilon,
        delta: acc.delta + e.delta,
    })
}

/// Advanced composition of `k` mechanisms that are each `(ε, δ)`-DP:
/// `ε' = √(2k ln(1/δ')) ε + k ε (e^ε − 1)`, `δ_total = δ' + k δ`.
pub fn compose_advanced_homogeneous(
    epsilon: f64,
    k: u64,
    delta_prime: f64,
    delta_per_mechanism: f64,
) -> Result<PrivacyLoss> {
    if !(epsilon > 0.0) {
        return Err(Error::parameter("epsilon must be positive"));
    }
    if !(delta_prime > 0.0 && delta_prime < 1.0) {
        return Err(Error::parameter("delta' must lie in (0, 1)"));
    }
    if !(delta_per_mechanism >= 0.0) {
        return Err(Error::parameter("per-mechanism delta must be nonnegative"));
    }
    if k == 0 {
        return PrivacyLoss::new(0.0, delta_prime);
    }
    let k = k as f64;
    let eps = sqrt(2.0 * k * ln(1.0 / delta_prime)) * epsilon + k * epsilon * (exp(epsilon) - 1.0);
    PrivacyLoss::new(eps, delta_prime + k * delta_per_mechanism)
}

/// Heterogeneous advanced composition over a ledger of adaptively chosen
/// `ε_t`-DP steps: `ε_f = (3/2) Σ ε_t² + √(6 Σ ε_t² · L)` where
/// `L = log_inv_delta = ln(1/δ)`; the returned δ is `Σ δ_t + e^{−L}`.
pub fn compose_advanced_heterogeneous(ledger: &PrivacyLedger, log_inv_delta: f64) -> Result<PrivacyLoss> {
    if !(log_inv_delta > 0.0) {
        return Err(Error::parameter("ln(1/delta) must be positive"));
    }
    let sum_sq: f64 = ledger.events.iter().map(|e| e.epsilon * e.epsilon).sum();
    let sum_delta: f64 = ledger.events.iter().map(|e| e.delta).sum();
    let eps = 1.5 * sum_sq + sqrt(6.0 * sum_sq * log_inv_delta);
    PrivacyLoss::new(eps, sum_delta + exp(-log_inv_delta))
}
