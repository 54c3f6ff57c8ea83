use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::losses::SmoothLoss;
use super::OCOConfig;
use crate::dp::{BinaryTree, NoiseMode, PrivacyLedger};
use crate::math::{cbrt, ln, norm};
use crate::{Error, Result};

/// `λ = 32β + (β/ε² · (L/D)² · T · d · ln T · ln(1/δ))^{1/3}`.
pub fn ftrl_lambda(smooth_beta: f64, lipschitz: f64, radius: f64, horizon: f64, dim: usize, epsilon: f64, delta: f64) -> Result<f64> {
    if !(smooth_beta > 0.0 && lipschitz > 0.0 && radius > 0.0 && horizon > 0.0 && epsilon > 0.0) || dim == 0 {
        return Err(Error::parameter("ftrl_lambda needs positive β, L, D, T, d and ε"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::parameter("ftrl_lambda needs δ in (0, 1)"));
    }
    let ratio = lipschitz / radius;
    let inner = smooth_beta / (epsilon * epsilon) * ratio * ratio * horizon * dim as f64 * ln(horizon) * ln(1.0 / delta);
    Ok(32.0 * smooth_beta + cbrt(inner.max(0.0)))
}

/// `argmin_{‖x‖ ≤ D} ⟨ḡ, x⟩ + (λ/2)‖x‖²`, i.e. `−ḡ/λ` projected radially
/// onto the ball.
pub fn dp_ftrl_step(g_estimate: &[f64], lambda: f64, radius: f64) -> Vec<f64> {
    let mut u: Vec<f64> = g_estimate.iter().map(|g| -g / lambda).collect();
    let n = norm(&u);
    if n > radius {
        let s = radius / n;
        u.iter_mut().for_each(|v| *v *= s);
    }
    u
}

/// Continuous-action game record.
#[derive(Debug, Clone, PartialEq)]
pub struct OcoTrace {
    /// `x_t`, one per round.
    pub points: Vec<Vec<f64>>,
    /// `ℓ_t(x_t)`.
    pub losses: Vec<f64>,
    pub ledger: PrivacyLedger,
    /// Rounds whose gradient exceeded `L` and was clipped before entering the tree.
    pub clip_events: u64,
}

impl OcoTrace {
    pub fn total_loss(&self) -> f64 {
        self.losses.iter().sum()
    }

    /// `Σ ℓ_t(x_t) − Σ ℓ_t(u)` for comparator `u`.
    pub fn regret_against(&self, losses: &[SmoothLoss], comparator: &[f64]) -> f64 {
        self.total_loss() - losses.iter().map(|f| f.value(comparator)).sum::<f64>()
    }
}

/// DP-FTRL: the played point is the regularized leader against the tree's
/// noisy prefix sum of past gradients.
pub fn run_dp_ftrl<R: Rng + ?Sized>(
    config: &OCOConfig,
    losses: &[SmoothLoss],
    noise: NoiseMode,
    rng: &mut R,
) -> Result<OcoTrace> {
    config.validate()?;
    if losses.is_empty() {
        return Err(Error::parameter("need at least one loss"));
    }
    if losses.iter().any(|f| f.dim() != config.dim) {
        return Err(Error::parameter("loss dimension does not match the configuration"));
    }
    let horizon = losses.len() as u64;
    let mut tree = BinaryTree::with_noise(horizon, config.dim, config.params, config.lipschitz, noise)?;
    let mut ledger = PrivacyLedger::new();
    ledger.charge(config.params.epsilon(), config.params.delta())?;

    let mut g_bar = vec![0.0; config.dim];
    let mut points = Vec::with_capacity(losses.len());
    let mut incurred = Vec::with_capacity(losses.len());
    for f in losses {
        let x = dp_ftrl_step(&g_bar, config.lambda, config.radius);
        incurred.push(f.value(&x));
        let release = tree.add(&f.gradient(&x), rng)?;
        g_bar = release.estimate;
        points.push(x);
    }
    Ok(OcoTrace { points, losses: incurred, ledger, clip_events: tree.clip_events() })
}
