use rand::Rng;

use super::noise::NoiseMode;
use super::params::PrivacyParams;
use super::sampling::sample_laplace;
use crate::math::ln;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvtOutcome {
    Continue,
    Halt,
}

/// AboveThreshold (sparse vector): answers a stream of 1-sensitive queries
/// and halts on the first one that noisily exceeds a noisy threshold.
///
/// The threshold carries `Lap(2/ε)` noise and each query `Lap(4/ε)`. Once
/// halted the instance refuses further queries.
#[derive(Debug, Clone)]
pub struct AboveThreshold {
    epsilon: f64,
    threshold: f64,
    noisy_threshold: f64,
    halted: bool,
    queries_seen: u64,
    horizon: u64,
    beta: f64,
    noise: NoiseMode,
}

impl AboveThreshold {
    pub fn new<R: Rng + ?Sized>(
        params: PrivacyParams,
        threshold: f64,
        horizon: u64,
        beta: f64,
        rng: &mut R,
    ) -> Result<Self> {
        Self::with_noise(params, threshold, horizon, beta, NoiseMode::Calibrated, rng)
    }

    pub fn with_noise<R: Rng + ?Sized>(
        params: PrivacyParams,
        threshold: f64,
        horizon: u64,
        beta: f64,
        mut noise: NoiseMode,
        rng: &mut R,
    ) -> Result<Self> {
        if !params.is_pure() {
            return Err(Error::parameter("AboveThreshold is a pure-DP mechanism (delta must be 0)"));
        }
        if horizon == 0 {
            return Err(Error::parameter("AboveThreshold horizon must be at least 1"));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::parameter("beta must lie in (0, 1)"));
        }
        if !threshold.is_finite() {
            return Err(Error::parameter("threshold must be finite"));
        }
        let epsilon = params.epsilon();
        let z = match noise.override_draw() {
            Some(v) => v,
            None => sample_laplace(2.0 / epsilon, rng)?,
        };
        Ok(Self {
            epsilon,
            threshold,
            noisy_threshold: threshold + z,
            halted: false,
            queries_seen: 0,
            horizon,
            beta,
            noise,
        })
    }

    pub fn query<R: Rng + ?Sized>(&mut self, value: f64, rng: &mut R) -> Result<SvtOutcome> {
        if self.halted {
            return Err(Error::usage("AboveThreshold already halted"));
        }
        if self.queries_seen >= self.horizon {
            return Err(Error::usage("AboveThreshold horizon exceeded"));
        }
        self.queries_seen += 1;
        let z = match self.noise.override_draw() {
            Some(v) => v,
            None => sample_laplace(4.0 / self.epsilon, rng)?,
        };
        if value + z >= self.noisy_threshold {
            self.halted = true;
            Ok(SvtOutcome::Halt)
        } else {
            Ok(SvtOutcome::Continue)
        }
    }

    /// Accuracy radius `α = 8 (ln T + ln(2/β)) / ε`.
    pub fn alpha(&self) -> f64 {
        8.0 * (ln(self.horizon as f64) + ln(2.0 / self.beta)) / self.epsilon
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn noisy_threshold(&self) -> f64 {
        self.noisy_threshold
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    pub fn queries_seen(&self) -> u64 {
        self.queries_seen
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sqrt;
    use crate::rng::derive;

    fn pure(eps: f64) -> PrivacyParams {
        PrivacyParams::pure(eps).unwrap()
    }

    #[test]
    fn noiseless_threshold_is_exact() {
        let mut rng = derive(20, 0);
        let svt = AboveThreshold::with_noise(pure(1.0), 5.0, 10, 0.1, NoiseMode::Noiseless, &mut rng).unwrap();
        assert_eq!(svt.noisy_threshold(), 5.0);
    }

    #[test]
    fn noiseless_halts_on_first_crossing() {
        let mut rng = derive(21, 0);
        let mut svt = AboveThreshold::with_noise(pure(1.0), 5.0, 10, 0.1, NoiseMode::Noiseless, &mut rng).unwrap();
        assert_eq!(svt.query(1.0, &mut rng).unwrap(), SvtOutcome::Continue);
        assert_eq!(svt.query(3.0, &mut rng).unwrap(), SvtOutcome::Continue);
        assert_eq!(svt.query(6.0, &mut rng).unwrap(), SvtOutcome::Halt);
        assert!(svt.query(0.0, &mut rng).is_err());
    }

    #[test]
    fn noiseless_below_threshold_never_halts_and_horizon_enforced() {
        let mut rng = derive(22, 0);
        let mut svt = AboveThreshold::with_noise(pure(1.0), 5.0, 4, 0.1, NoiseMode::Noiseless, &mut rng).unwrap();
        for q in [0.0, 4.0, 4.9, 1.0] {
            assert_eq!(svt.query(q, &mut rng).unwrap(), SvtOutcome::Continue);
        }
        assert!(matches!(svt.query(0.0, &mut rng), Err(Error::Usage(_))));
    }

    #[test]
    fn injected_noise_drives_decision() {
        let mut rng = derive(23, 0);
        // threshold noise +1, then query noises -2 and +3.
        let mut svt =
            AboveThreshold::with_noise(pure(1.0), 5.0, 10, 0.1, NoiseMode::injected([1.0, -2.0, 3.0]), &mut rng).unwrap();
        assert_eq!(svt.noisy_threshold(), 6.0);
        assert_eq!(svt.query(7.0, &mut rng).unwrap(), SvtOutcome::Continue);
        assert_eq!(svt.query(3.0, &mut rng).unwrap(), SvtOutcome::Halt);
    }

    #[test]
    fn noisy_threshold_spread() {
        let mut rng = derive(24, 0);
        let n = 100_000;
        let xs: alloc::vec::Vec<f64> = (0..n)
            .map(|_| AboveThreshold::new(pure(0.5), 10.0, 1, 0.1, &mut rng).unwrap().noisy_threshold())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = sqrt(xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64);
        assert!((std / (4.0 * sqrt(2.0)) - 1.0).abs() < 0.02, "std {std}");
        assert!((mean - 10.0).abs() < 0.1);
    }

    #[test]
    fn large_query_halts() {
        let mut rng = derive(25, 0);
        let runs = 10_000;
        let halts = (0..runs)
            .filter(|_| {
                let mut svt = AboveThreshold::new(pure(1.0), 0.0, 1, 0.1, &mut rng).unwrap();
                svt.query(100.0, &mut rng).unwrap() == SvtOutcome::Halt
            })
            .count();
        assert!(halts as f64 / runs as f64 >= 1.0 - 1e-3);
    }

    #[test]
    fn rejects_approximate_params() {
        let mut rng = derive(26, 0);
        let p = PrivacyParams::new(1.0, 1e-6).unwrap();
        assert!(AboveThreshold::new(p, 0.0, 1, 0.1, &mut rng).is_err());
        assert!(AboveThreshold::new(pure(1.0), 0.0, 0, 0.1, &mut rng).is_err());
    }

    /// Binomial `β + 3σ` slack for `n` trials.
    fn slack(beta: f64, n: usize) -> f64 {
        beta + 3.0 * sqrt(beta * (1.0 - beta) / n as f64)
    }

    #[test]
    fn alpha_accuracy_frequencies() {
        let (eps, horizon, beta, l) = (1.0, 50u64, 0.1, 100.0);
        let runs = 10_000;
        let alpha = AboveThreshold::new(pure(eps), l, horizon, beta, &mut derive(27, 0)).unwrap().alpha();
        let mut false_halts = 0;
        let mut missed = 0;
        for run in 0..runs {
            let mut rng = derive(27, run + 1);
            let mut low = AboveThreshold::new(pure(eps), l, horizon, beta, &mut rng).unwrap();
            if (0..horizon).any(|_| low.query(l - alpha, &mut rng).unwrap() == SvtOutcome::Halt) {
                false_halts += 1;
            }
            let mut high = AboveThreshold::new(pure(eps), l, horizon, beta, &mut rng).unwrap();
            for _ in 0..horizon - 1 {
                let _ = high.query(0.0, &mut rng);
                if high.is_halted() {
                    break;
                }
            }
            if !high.is_halted() && high.query(l + alpha, &mut rng).unwrap() == SvtOutcome::Continue {
                missed += 1;
            }
        }
        let bound = slack(beta, runs as usize) * runs as f64;
        assert!((false_halts as f64) <= bound, "false halts {false_halts}");
        assert!((missed as f64) <= bound, "missed {missed}");
    }
}
