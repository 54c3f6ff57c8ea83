use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::noise::NoiseMode;
use super::params::PrivacyParams;
use super::sampling::{sample_gaussian, sample_laplace};
use crate::math::{ceil_log2, ln, norm, sqrt};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeMode {
    /// Per-coordinate Laplace noise (δ = 0); inputs are clipped in ℓ1 norm.
    Laplace,
    /// Spherical Gaussian noise (δ > 0); inputs are clipped in ℓ2 norm.
    Gaussian,
    Noiseless,
}

/// One prefix-sum release.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeRelease {
    pub estimate: Vec<f64>,
    /// Noisy dyadic nodes combined into this prefix (popcount of `t`).
    pub nodes: u32,
    /// Set when the input was clipped to the sensitivity bound.
    pub clipped: bool,
}

/// Binary tree mechanism for continual release of prefix sums of a stream
/// of `dim`-vectors over a fixed horizon.
///
/// Level `j` holds the sum of the most recent completed dyadic block of
/// length `2^j` together with that node's noise. The prefix `[1, t]` is the
/// union of the nodes at the set bits of `t`. The released estimate is the
/// running sum plus the noise of exactly those nodes, which equals the sum
/// of the noisy node sums and keeps the noiseless release bit-exact.
#[derive(Debug, Clone)]
pub struct BinaryTree {
    horizon: u64,
    t: u64,
    dim: usize,
    levels: usize,
    node_sums: Vec<Vec<f64>>,
    node_noise: Vec<Vec<f64>>,
    running: Vec<f64>,
    noise_scale: f64,
    sensitivity: f64,
    mode: TreeMode,
    noise: NoiseMode,
    l1_clip: bool,
    clip_events: u64,
}

impl BinaryTree {
    pub fn new(horizon: u64, dim: usize, params: PrivacyParams, sensitivity: f64) -> Result<Self> {
        Self::with_noise(horizon, dim, params, sensitivity, NoiseMode::Calibrated)
    }

    pub fn with_noise(
        horizon: u64,
        dim: usize,
        params: PrivacyParams,
        sensitivity: f64,
        noise: NoiseMode,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::parameter("binary tree horizon must be at least 1"));
        }
        if dim == 0 {
            return Err(Error::parameter("binary tree dimension must be at least 1"));
        }
        if !(sensitivity >= 0.0 && sensitivity.is_finite()) {
            return Err(Error::parameter("sensitivity must be finite and nonnegative"));
        }
        let levels = Self::levels_for(horizon);
        let lv = levels as f64;
        let (mode, noise_scale) = if sensitivity == 0.0 || matches!(noise, NoiseMode::Noiseless) {
            (TreeMode::Noiseless, 0.0)
        } else if params.is_pure() {
            (TreeMode::Laplace, lv * sensitivity / params.epsilon())
        } else {
            let sigma = sensitivity * sqrt(lv) * sqrt(2.0 * ln(1.25 / params.delta())) / params.epsilon();
            (TreeMode::Gaussian, sigma)
        };
        Ok(Self {
            horizon,
            t: 0,
            dim,
            levels,
            node_sums: vec![vec![0.0; dim]; levels],
            node_noise: vec![vec![0.0; dim]; levels],
            running: vec![0.0; dim],
            noise_scale,
            sensitivity,
            mode,
            noise,
            l1_clip: params.is_pure(),
            clip_events: 0,
        })
    }

    /// `⌈log2 T⌉ + 1`.
    pub fn levels_for(horizon: u64) -> usize {
        ceil_log2(horizon.max(1)) as usize + 1
    }

    pub fn add<R: Rng + ?Sized>(&mut self, value: &[f64], rng: &mut R) -> Result<TreeRelease> {
        if self.t >= self.horizon {
            return Err(Error::usage("binary tree horizon exceeded"));
        }
        if value.len() != self.dim {
            return Err(Error::usage("binary tree input has the wrong dimension"));
        }
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::parameter("binary tree input must be finite"));
        }
        let size = if self.l1_clip { value.iter().map(|v| v.abs()).sum() } else { norm(value) };
        let clipped = size > self.sensitivity;
        let scale = if clipped && size > 0.0 { self.sensitivity / size } else { 1.0 };
        if clipped {
            self.clip_events += 1;
        }

        self.t += 1;
        let level = self.t.trailing_zeros() as usize;
        // The new node at `level` absorbs every lower level plus the input.
        for k in 0..self.dim {
            let x = if clipped { value[k] * scale } else { value[k] };
            let mut s = x;
            for j in 0..level {
                s += self.node_sums[j][k];
            }
            self.node_sums[level][k] = s;
            self.running[k] += x;
        }
        for j in 0..level {
            self.node_sums[j].iter_mut().for_each(|s| *s = 0.0);
            self.node_noise[j].iter_mut().for_each(|s| *s = 0.0);
        }
        for k in 0..self.dim {
            self.node_noise[level][k] = self.draw(rng)?;
        }

        let mut estimate = self.running.clone();
        let mut nodes = 0;
        for j in 0..self.levels {
            if self.t >> j & 1 == 1 {
                nodes += 1;
                for k in 0..self.dim {
                    estimate[k] += self.node_noise[j][k];
                }
            }
        }
        Ok(TreeRelease { estimate, nodes, clipped })
    }

    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<f64> {
        if let Some(v) = self.noise.override_draw() {
            return Ok(v);
        }
        match self.mode {
            TreeMode::Noiseless => Ok(0.0),
            TreeMode::Laplace => sample_laplace(self.noise_scale, rng),
            TreeMode::Gaussian => sample_gaussian(self.noise_scale, rng),
        }
    }

    /// Sum of the noiseless node sums at the set bits of `t`; equals
    /// the running sum up to float rounding.
    pub fn dyadic_prefix(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for j in 0..self.levels {
            if self.t >> j & 1 == 1 {
                for k in 0..self.dim {
                    out[k] += self.node_sums[j][k];
                }
            }
        }
        out
    }

    pub fn exact_prefix(&self) -> &[f64] {
        &self.running
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    pub fn mode(&self) -> TreeMode {
        self.mode
    }

    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn clip_events(&self) -> u64 {
        self.clip_events
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive;

    fn pure(eps: f64) -> PrivacyParams {
        PrivacyParams::pure(eps).unwrap()
    }

    #[test]
    fn level_counts() {
        assert_eq!(BinaryTree::levels_for(1), 1);
        assert_eq!(BinaryTree::levels_for(8), 4);
        assert_eq!(BinaryTree::levels_for(1000), 11);
        let tree = BinaryTree::new(1, 1, pure(1.0), 1.0).unwrap();
        assert_eq!(tree.levels(), 1);
    }

    #[test]
    fn laplace_scale_splits_budget_over_levels() {
        let tree = BinaryTree::new(1000, 1, pure(1.0), 1.0).unwrap();
        assert_eq!(tree.mode(), TreeMode::Laplace);
        assert!((tree.noise_scale() - 11.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_scale() {
        let tree = BinaryTree::new(8, 3, PrivacyParams::new(0.5, 1e-5).unwrap(), 2.0).unwrap();
        assert_eq!(tree.mode(), TreeMode::Gaussian);
        let want = 2.0 * sqrt(4.0) * sqrt(2.0 * ln(1.25e5)) / 0.5;
        assert!((tree.noise_scale() - want).abs() < 1e-12);
    }

    #[test]
    fn zero_sensitivity_is_noiseless() {
        let tree = BinaryTree::new(8, 1, pure(1.0), 0.0).unwrap();
        assert_eq!(tree.mode(), TreeMode::Noiseless);
    }

    #[test]
    fn noiseless_scalar_prefix_sums() {
        let mut rng = derive(30, 0);
        let mut tree = BinaryTree::with_noise(4, 1, pure(1.0), 1.0, NoiseMode::Noiseless).unwrap();
        let out: Vec<f64> = (0..4).map(|_| tree.add(&[1.0], &mut rng).unwrap().estimate[0]).collect();
        assert_eq!(out, vec![1.0, 2.0, 3.0, 4.0]);
        assert!(tree.add(&[1.0], &mut rng).is_err());
    }

    #[test]
    fn noiseless_vector_prefix_sums() {
        let mut rng = derive(31, 0);
        let mut tree = BinaryTree::with_noise(3, 2, pure(1.0), 1.0, NoiseMode::Noiseless).unwrap();
        let e1 = [1.0, 0.0];
        let e2 = [0.0, 1.0];
        assert_eq!(tree.add(&e1, &mut rng).unwrap().estimate, vec![1.0, 0.0]);
        assert_eq!(tree.add(&e2, &mut rng).unwrap().estimate, vec![1.0, 1.0]);
        assert_eq!(tree.add(&e1, &mut rng).unwrap().estimate, vec![2.0, 1.0]);
    }

    #[test]
    fn dyadic_nodes_reconstruct_prefix() {
        let mut rng = derive(32, 0);
        let mut tree = BinaryTree::with_noise(100, 1, pure(1.0), 1.0, NoiseMode::Noiseless).unwrap();
        for i in 0..100 {
            let x = ((i * 37) % 11) as f64 / 10.0;
            let r = tree.add(&[x], &mut rng).unwrap();
            assert_eq!(r.estimate[0], tree.exact_prefix()[0]);
            assert!((tree.dyadic_prefix()[0] - r.estimate[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn injected_noise_counts_nodes() {
        // Every node draws noise 1, so the error is the number of nodes used.
        let mut rng = derive(33, 0);
        let t = 64;
        let mut tree = BinaryTree::with_noise(t, 1, pure(1.0), 1.0, NoiseMode::injected(vec![1.0; 64])).unwrap();
        for i in 1..=t {
            let r = tree.add(&[0.0], &mut rng).unwrap();
            assert_eq!(r.nodes, i.count_ones());
            assert!(r.nodes as usize <= tree.levels());
            assert_eq!(r.estimate[0], r.nodes as f64);
        }
    }

    #[test]
    fn clipping_sets_flag() {
        let mut rng = derive(34, 0);
        let mut tree = BinaryTree::with_noise(4, 2, pure(1.0), 1.0, NoiseMode::Noiseless).unwrap();
        let r = tree.add(&[3.0, 4.0], &mut rng).unwrap();
        assert!(r.clipped);
        assert_eq!(tree.clip_events(), 1);
        // Pure parameters clip in ℓ1: (3,4)/7.
        assert!((r.estimate[0] - 3.0 / 7.0).abs() < 1e-15);
        assert!(!tree.add(&[0.5, 0.5], &mut rng).unwrap().clipped);
    }

    #[test]
    fn noisy_error_bound_frequency() {
        let t = 256u64;
        let beta: f64 = 0.05;
        let lv = BinaryTree::levels_for(t) as f64;
        let bound = lv * lv * ln(2.0 * t as f64 / beta);
        let runs = 1000;
        let mut ok = 0;
        for run in 0..runs {
            let mut rng = derive(35, run);
            let mut tree = BinaryTree::new(t, 1, pure(1.0), 1.0).unwrap();
            let mut worst: f64 = 0.0;
            for i in 1..=t {
                let c = tree.add(&[0.5], &mut rng).unwrap().estimate[0];
                worst = worst.max((c - 0.5 * i as f64).abs());
            }
            ok += (worst <= bound) as u32;
        }
        assert!(ok as f64 / runs as f64 >= 1.0 - beta);
    }
}
