use alloc::format;
use alloc::vec::Vec;
use rand::Rng;

use super::losses::SmoothLoss;
use super::OCOConfig;
use crate::adversaries::{AdversarySpec, LossVector};
use crate::algorithms::{run_shrinking_dartboard, run_svt_realizable, svt_params, GameTrace, SDConfig};
use crate::math::{norm, sqrt};
use crate::{Error, Result};

/// Largest grid (before intersecting with the ball) `build_cover` accepts.
pub const DEFAULT_COVER_CAP: u64 = 10_000_000;

/// Grid spacing `ρ/√dim`.
///
/// With this spacing the grid corner obtained by rounding each coordinate
/// of a ball point toward zero has no larger norm, so it stays in the ball
/// and lies within `ρ` of the point.
pub fn cover_spacing(dim: usize, rho: f64) -> f64 {
    rho / sqrt(dim as f64)
}

/// Points of the grid `h·Z^dim` inside the ball of radius `D` that form a
/// `ρ`-net of the ball. For `ρ ≥ D` the origin alone suffices.
pub fn build_cover(dim: usize, radius: f64, rho: f64, cap: u64) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || !(radius > 0.0) || !(rho > 0.0) {
        return Err(Error::parameter("cover needs dim ≥ 1, D > 0 and ρ > 0"));
    }
    if rho >= radius {
        return Ok(alloc::vec![alloc::vec![0.0; dim]]);
    }
    let h = cover_spacing(dim, rho);
    // Keep a small tolerance so that D/h landing on an integer keeps the
    // boundary point.
    let steps = (radius / h * (1.0 + 1e-12)) as i64;
    let per_axis = 2 * steps as u64 + 1;
    let total = (0..dim).try_fold(1u64, |acc, _| acc.checked_mul(per_axis).filter(|&n| n <= cap));
    if total.is_none() {
        return Err(Error::parameter(format!(
            "cover of {per_axis}^{dim} grid points exceeds the cap of {cap}; use a larger ρ"
        )));
    }
    let limit = radius * (1.0 + 1e-12);
    let mut out = Vec::new();
    let mut idx = alloc::vec![-steps; dim];
    loop {
        let p: Vec<f64> = idx.iter().map(|&i| i as f64 * h).collect();
        if norm(&p) <= limit {
            out.push(p.iter().map(|v| v.clamp(-radius, radius)).collect());
        }
        let mut k = 0;
        loop {
            if k == dim {
                return Ok(out);
            }
            if idx[k] < steps {
                idx[k] += 1;
                break;
            }
            idx[k] = -steps;
            k += 1;
        }
    }
}

/// Experts algorithm run over the cover.
#[derive(Debug, Clone)]
pub enum ExpertsBackend {
    /// Sparse-vector algorithm for the realizable setting with the given
    /// failure probability and bound on the best expert's loss.
    Svt { beta: f64, l_star: f64 },
    Dartboard(SDConfig),
}

#[derive(Debug, Clone)]
pub struct OcoExpertsRun {
    pub cover: Vec<Vec<f64>>,
    /// Experts-game trace; `expert` indexes `cover`.
    pub trace: GameTrace,
    /// `T·L·ρ`, the bound on the gap between the best point and the best cover point.
    pub discretization: f64,
}

impl OcoExpertsRun {
    pub fn played_points(&self) -> Vec<&[f64]> {
        self.trace.rounds.iter().map(|r| self.cover[r.expert].as_slice()).collect()
    }
}

/// Reduces OCO to experts: expert `i` suffers `ℓ_t(c_i)` for cover point `c_i`.
/// Expert losses must lie in `[0, 1]`.
pub fn run_oco_via_experts<R: Rng + ?Sized>(
    config: &OCOConfig,
    losses: &[SmoothLoss],
    backend: &ExpertsBackend,
    rng: &mut R,
) -> Result<OcoExpertsRun> {
    config.validate()?;
    if losses.is_empty() {
        return Err(Error::parameter("need at least one loss"));
    }
    if losses.iter().any(|f| f.dim() != config.dim) {
        return Err(Error::parameter("loss dimension does not match the configuration"));
    }
    let cover = build_cover(config.dim, config.radius, config.cover_rho, DEFAULT_COVER_CAP)?;
    let rows = losses
        .iter()
        .map(|f| {
            LossVector::new(cover.iter().map(|c| f.value(c)).collect())
                .map_err(|_| Error::parameter("expert losses over the cover must lie in [0, 1]"))
        })
        .collect::<Result<Vec<_>>>()?;
    let adversary = AdversarySpec::oblivious(rows)?;
    let horizon = losses.len() as u64;
    let trace = match backend {
        ExpertsBackend::Svt { beta, l_star } => {
            let p = config.params;
            let svt = svt_params(horizon, cover.len(), p.epsilon(), p.delta(), *beta, *l_star)?;
            run_svt_realizable(&svt, &adversary, 0, rng)?
        }
        ExpertsBackend::Dartboard(sd) => run_shrinking_dartboard(sd, &adversary, 0, rng)?,
    };
    let discretization = horizon as f64 * config.lipschitz * config.cover_rho;
    Ok(OcoExpertsRun { cover, trace, discretization })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::regret;
    use crate::dp::PrivacyParams;
    use crate::rng::derive;
    use alloc::vec;

    #[test]
    fn one_dimensional_net() {
        let pts = build_cover(1, 1.0, 0.5, DEFAULT_COVER_CAP).unwrap();
        let xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(build_cover(3, 1.0, 2.0, DEFAULT_COVER_CAP).unwrap(), vec![vec![0.0; 3]]);
        assert_eq!(build_cover(2, 1.0, 1.0, DEFAULT_COVER_CAP).unwrap(), vec![vec![0.0; 2]]);
    }

    #[test]
    fn cover_is_a_net_inside_the_ball() {
        let mut rng = derive(90, 0);
        for (dim, radius, rho) in [(1, 1.0, 0.1), (2, 1.0, 0.2), (2, 2.5, 0.3), (3, 1.0, 0.25)] {
            let pts = build_cover(dim, radius, rho, DEFAULT_COVER_CAP).unwrap();
            assert!(pts.iter().all(|p| norm(p) <= radius + 1e-12));
            let mut checked = 0;
            while checked < 10_000 {
                let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect();
                if norm(&x) > radius {
                    continue;
                }
                checked += 1;
                let nearest = pts
                    .iter()
                    .map(|p| norm(&p.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>()))
                    .fold(f64::INFINITY, f64::min);
                assert!(nearest <= rho + 1e-12, "dim {dim}: {x:?} is {nearest} from the cover");
            }
        }
    }

    #[test]
    fn cap_rejects_fine_covers() {
        let err = build_cover(3, 1.0, 1e-4, DEFAULT_COVER_CAP).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
        let params = PrivacyParams::pure(1.0).unwrap();
        let cfg = OCOConfig { dim: 2, radius: 1.0, lipschitz: 1e9, smooth_beta: 0.0, lambda: 1.0, params, cover_rho: 1e-9 * 1e-3 };
        let losses = vec![SmoothLoss::linear(vec![0.0, 0.0], 0.0).unwrap(); 1000];
        let backend = ExpertsBackend::Svt { beta: 0.1, l_star: 0.0 };
        assert!(run_oco_via_experts(&cfg, &losses, &backend, &mut derive(91, 0)).is_err());
    }

    fn linear_config(horizon: u64) -> OCOConfig {
        let params = PrivacyParams::pure(1.0).unwrap();
        OCOConfig { dim: 1, radius: 1.0, lipschitz: 0.5, smooth_beta: 0.0, lambda: 1.0, params, cover_rho: 1.0 / (0.5 * horizon as f64) }
    }

    #[test]
    fn zero_losses_zero_regret() {
        let horizon = 200;
        let cfg = linear_config(horizon);
        let losses = vec![SmoothLoss::linear(vec![0.0], 0.0).unwrap(); horizon as usize];
        let backend = ExpertsBackend::Svt { beta: 0.1, l_star: 0.0 };
        let run = run_oco_via_experts(&cfg, &losses, &backend, &mut derive(92, 0)).unwrap();
        assert_eq!(regret(&run.trace), 0.0);
        assert!((run.discretization - 1.0).abs() < 1e-12);
    }

    #[test]
    fn realizable_endpoint_regret_within_bound() {
        // ℓ_t(x) = (1 − x)/2 is zero at the endpoint x = 1, which is in the cover.
        let horizon = 400;
        let cfg = linear_config(horizon);
        let losses = vec![SmoothLoss::linear(vec![-0.5], 0.5).unwrap(); horizon as usize];
        let backend = ExpertsBackend::Svt { beta: 0.1, l_star: 0.0 };
        let run = run_oco_via_experts(&cfg, &losses, &backend, &mut derive(93, 0)).unwrap();
        assert_eq!(run.trace.best_loss(), 0.0);
        let m = run.cover.len();
        let svt = svt_params(horizon, m, 1.0, 0.0, 0.1, 0.0).unwrap();
        // At most K + 1 epochs, each ending near the threshold.
        let bound = (svt.k_switches + 1) as f64 * (2.0 * svt.threshold + 1.0) + run.discretization;
        let continuous = run.trace.incurred();
        assert!(continuous <= bound, "{continuous} > {bound}");
        assert_eq!(run.played_points().len(), horizon as usize);
    }
}
