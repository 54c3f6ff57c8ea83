//! Online convex optimization over the Euclidean ball `{‖x‖ ≤ D}`.

mod cover;
mod ftrl;
mod losses;

pub use cover::{build_cover, cover_spacing, run_oco_via_experts, ExpertsBackend, OcoExpertsRun, DEFAULT_COVER_CAP};
pub use ftrl::{dp_ftrl_step, ftrl_lambda, run_dp_ftrl, OcoTrace};
pub use losses::SmoothLoss;

use crate::dp::PrivacyParams;
use crate::{Error, Result};

/// Problem and algorithm constants for the ball of radius `D` in `dim`
/// dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OCOConfig {
    pub dim: usize,
    pub radius: f64,
    pub lipschitz: f64,
    pub smooth_beta: f64,
    pub lambda: f64,
    pub params: PrivacyParams,
    pub cover_rho: f64,
}

impl OCOConfig {
    /// DP-FTRL configuration with `λ` from [`ftrl_lambda`] and the cover
    /// radius `ρ = 1/(LT)`.
    pub fn for_horizon(dim: usize, radius: f64, lipschitz: f64, smooth_beta: f64, horizon: u64, params: PrivacyParams) -> Result<Self> {
        let lambda = ftrl_lambda(smooth_beta, lipschitz, radius, horizon as f64, dim, params.epsilon(), params.delta())?;
        let config = Self {
            dim,
            radius,
            lipschitz,
            smooth_beta,
            lambda,
            params,
            cover_rho: (1.0 / (lipschitz * horizon as f64)).min(radius),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::parameter("dimension must be at least 1"));
        }
        if !(self.radius > 0.0 && self.lipschitz > 0.0 && self.smooth_beta >= 0.0) {
            return Err(Error::parameter("need D > 0, L > 0 and β ≥ 0"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::parameter("lambda must be positive"));
        }
        if !(self.cover_rho > 0.0 && self.cover_rho <= self.radius) {
            return Err(Error::parameter("cover radius must lie in (0, D]"));
        }
        Ok(())
    }
}
