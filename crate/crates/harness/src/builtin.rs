//! Named workloads for `--adversary builtin:<name>`.

use dpope_core::adversaries::{
    drifting_good_set, realizable_hide_expert, AdaptiveRule, AdversarySpec, LossVector, StochasticLaw,
};
use dpope_core::math::ceil_log2;
use dpope_core::oco::SmoothLoss;
use dpope_core::rng::derive;
use rand::Rng;

use crate::{HarnessError, Result};

pub const EXPERT_BUILTINS: &[&str] = &[
    "zeros",
    "uniform",
    "bernoulli",
    "one-low",
    "random",
    "hide-expert",
    "drifting",
    "punish-last",
    "punish-frequent",
];

pub const OCO_BUILTINS: &[&str] = &["zeros", "quadratic", "hinge", "linear-endpoint"];

/// `⌈(d − 1)/⌈log2 d⌉⌉`: spreads the eliminations over about `log2 d` epochs.
pub fn default_eliminations(d: usize) -> usize {
    let epochs = (ceil_log2(d as u64) as usize).max(1);
    d.saturating_sub(1).div_ceil(epochs).max(1)
}

fn unknown(name: &str, known: &[&str]) -> HarnessError {
    HarnessError::validation(format!("unknown builtin adversary '{name}'; expected one of {}", known.join(", ")))
}

/// Expert-game adversary. `epsilon` is only used by `hide-expert`.
pub fn expert_adversary(name: &str, d: usize, horizon: u64, epsilon: f64, seed: u64) -> Result<AdversarySpec> {
    let spec = match name {
        "zeros" => AdversarySpec::zeros(d, horizon)?,
        "uniform" => AdversarySpec::stochastic(d, horizon, StochasticLaw::Uniform, seed)?,
        "bernoulli" => AdversarySpec::stochastic(d, horizon, StochasticLaw::Bernoulli(vec![0.5; d]), seed)?,
        "one-low" => {
            let law = StochasticLaw::OneLowMean { good: 0, low: 0.1, high: 0.5 };
            AdversarySpec::stochastic(d, horizon, law, seed)?
        }
        "random" => {
            let mut rng = derive(seed, 0x0B);
            let rows = (0..horizon)
                .map(|_| LossVector::new((0..d).map(|_| rng.gen::<f64>()).collect()))
                .collect::<dpope_core::Result<Vec<_>>>()?;
            AdversarySpec::oblivious(rows)?
        }
        "hide-expert" => realizable_hide_expert(d, epsilon, horizon, 0)?,
        "drifting" => drifting_good_set(d, horizon, default_eliminations(d), seed)?.spec,
        "punish-last" => AdversarySpec::adaptive(d, horizon, AdaptiveRule::PunishLast)?,
        "punish-frequent" => AdversarySpec::adaptive(d, horizon, AdaptiveRule::PunishFrequent)?,
        _ => return Err(unknown(name, EXPERT_BUILTINS)),
    };
    Ok(spec.with_seed(seed))
}

/// Loss sequence on the unit ball with the point used as comparator.
#[derive(Debug, Clone)]
pub struct OcoWorkload {
    pub losses: Vec<SmoothLoss>,
    pub comparator: Vec<f64>,
    pub smooth_beta: f64,
    pub lipschitz: f64,
}

/// Per-round losses on the ball of radius 1 in `dim` dimensions.
pub fn oco_workload(name: &str, dim: usize, horizon: u64, seed: u64) -> Result<OcoWorkload> {
    if dim == 0 || horizon == 0 {
        return Err(HarnessError::validation("need d ≥ 1 and T ≥ 1"));
    }
    let n = horizon as usize;
    let mut e1 = vec![0.0; dim];
    e1[0] = 1.0;
    let out = match name {
        "zeros" => OcoWorkload {
            losses: vec![SmoothLoss::linear(vec![0.0; dim], 0.0)?; n],
            comparator: vec![0.0; dim],
            smooth_beta: 1.0,
            lipschitz: 1.0,
        },
        "quadratic" => {
            let center: Vec<f64> = e1.iter().map(|v| 0.5 * v).collect();
            // β = 0.8 keeps the loss at most 0.9 on the ball, so it can also
            // serve as an expert loss over a cover.
            let f = SmoothLoss::quadratic(0.8, center.clone())?;
            let lipschitz = f.lipschitz(1.0);
            OcoWorkload { losses: vec![f; n], comparator: center, smooth_beta: 0.8, lipschitz }
        }
        "hinge" => {
            let mut rng = derive(seed, 0x0C);
            let mu = 0.5;
            let losses = (0..n)
                .map(|_| {
                    let mut a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                    a.iter_mut().for_each(|v| *v /= norm);
                    SmoothLoss::smoothed_hinge(a, rng.gen_range(-0.5..0.5), mu)
                })
                .collect::<dpope_core::Result<Vec<_>>>()?;
            let comparator = best_fixed_point(&losses, dim, 1.0);
            OcoWorkload { losses, comparator, smooth_beta: 1.0 / mu, lipschitz: 1.0 }
        }
        "linear-endpoint" => {
            let g: Vec<f64> = e1.iter().map(|v| -0.5 * v).collect();
            OcoWorkload { losses: vec![SmoothLoss::linear(g, 0.5)?; n], comparator: e1, smooth_beta: 1.0, lipschitz: 0.5 }
        }
        _ => return Err(unknown(name, OCO_BUILTINS)),
    };
    Ok(out)
}

/// Offline projected gradient descent on the summed loss.
fn best_fixed_point(losses: &[SmoothLoss], dim: usize, radius: f64) -> Vec<f64> {
    let beta: f64 = losses.iter().map(|f| f.smoothness()).sum::<f64>().max(1e-12);
    let mut x = vec![0.0; dim];
    for _ in 0..500 {
        let mut g = vec![0.0; dim];
        for f in losses {
            for (a, b) in g.iter_mut().zip(f.gradient(&x)) {
                *a += b;
            }
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= gi / beta;
        }
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > radius {
            x.iter_mut().for_each(|v| *v *= radius / n);
        }
    }
    x
}
