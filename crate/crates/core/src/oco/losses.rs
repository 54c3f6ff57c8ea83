use alloc::vec::Vec;

use crate::math::norm;
use crate::{Error, Result};

/// Nonnegative convex losses on the ball with closed-form gradients.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothLoss {
    /// `(β/2)‖x − x*‖²`: realizable at `x*`.
    Quadratic { beta: f64, center: Vec<f64> },
    /// `h(⟨a, x⟩ − b)` with the smoothed hinge `h(z) = 0` for `z ≤ 0`,
    /// `z²/(2μ)` on `(0, μ]` and `z − μ/2` beyond.
    SmoothedHinge { a: Vec<f64>, b: f64, mu: f64 },
    /// `⟨g, x⟩ + c` (smoothness 0); nonnegative on the ball when `c ≥ ‖g‖D`.
    Linear { g: Vec<f64>, c: f64 },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl SmoothLoss {
    pub fn quadratic(beta: f64, center: Vec<f64>) -> Result<Self> {
        if !(beta >= 0.0) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::parameter("quadratic loss needs β ≥ 0 and a finite center"));
        }
        Ok(SmoothLoss::Quadratic { beta, center })
    }

    pub fn smoothed_hinge(a: Vec<f64>, b: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !b.is_finite() || a.iter().any(|v| !v.is_finite()) {
            return Err(Error::parameter("smoothed hinge needs μ > 0 and finite coefficients"));
        }
        Ok(SmoothLoss::SmoothedHinge { a, b, mu })
    }

    pub fn linear(g: Vec<f64>, c: f64) -> Result<Self> {
        if !c.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::parameter("linear loss needs finite coefficients"));
        }
        Ok(SmoothLoss::Linear { g, c })
    }

    pub fn dim(&self) -> usize {
        match self {
            SmoothLoss::Quadratic { center, .. } => center.len(),
            SmoothLoss::SmoothedHinge { a, .. } => a.len(),
            SmoothLoss::Linear { g, .. } => g.len(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            SmoothLoss::Quadratic { beta, center } => {
                beta / 2.0 * x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            }
            SmoothLoss::SmoothedHinge { a, b, mu } => {
                let z = dot(a, x) - b;
                if z <= 0.0 {
                    0.0
                } else if z <= *mu {
                    z * z / (2.0 * mu)
                } else {
                    z - mu / 2.0
                }
            }
            SmoothLoss::Linear { g, c } => dot(g, x) + c,
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SmoothLoss::Quadratic { beta, center } => x.iter().zip(center).map(|(a, b)| beta * (a - b)).collect(),
            SmoothLoss::SmoothedHinge { a, b, mu } => {
                let z = dot(a, x) - b;
                let slope = if z <= 0.0 { 0.0 } else if z <= *mu { z / mu } else { 1.0 };
                a.iter().map(|v| slope * v).collect()
            }
            SmoothLoss::Linear { g, .. } => g.clone(),
        }
    }

    /// Smoothness constant `β`.
    pub fn smoothness(&self) -> f64 {
        match self {
            SmoothLoss::Quadratic { beta, .. } => *beta,
            SmoothLoss::SmoothedHinge { a, mu, .. } => {
                let n = norm(a);
                n * n / mu
            }
            SmoothLoss::Linear { .. } => 0.0,
        }
    }

    /// Lipschitz constant on the ball of radius `radius`.
    pub fn lipschitz(&self, radius: f64) -> f64 {
        match self {
            SmoothLoss::Quadratic { beta, center } => beta * (radius + norm(center)),
            SmoothLoss::SmoothedHinge { a, .. } => norm(a),
            SmoothLoss::Linear { g, .. } => norm(g),
        }
    }
}
