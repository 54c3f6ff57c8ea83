use rand::Rng;

use crate::math::{cos, ln, sqrt};
use crate::{Error, Result};

/// Uniform draw from the open interval (0, 1).
pub fn uniform_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Returns `true` with probability `q`.
pub fn sample_bernoulli<R: Rng + ?Sized>(q: f64, rng: &mut R) -> Result<bool> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::parameter("Bernoulli probability must lie in [0, 1]"));
    }
    // gen::<f64>() is in [0, 1): q = 0 never fires, q = 1 always does.
    Ok(rng.gen::<f64>() < q)
}

/// Draw from the Laplace density `(1/2b) e^{-|x|/b}` by inverse CDF.
pub fn sample_laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::parameter("Laplace scale must be positive and finite"));
    }
    let v = uniform_open(rng) - 0.5;
    let mag = -scale * ln(1.0 - 2.0 * v.abs());
    Ok(if v < 0.0 { -mag } else { mag })
}

/// Normal draw with the given standard deviation (Box–Muller).
pub fn sample_gaussian<R: Rng + ?Sized>(std_dev: f64, rng: &mut R) -> Result<f64> {
    if !(std_dev >= 0.0 && std_dev.is_finite()) {
        return Err(Error::parameter("standard deviation must be nonnegative and finite"));
    }
    let u1 = uniform_open(rng);
    let u2 = uniform_open(rng);
    Ok(std_dev * sqrt(-2.0 * ln(u1)) * cos(2.0 * core::f64::consts::PI * u2))
}

/// Number of Bernoulli(p) trials up to and including the first success.
pub fn sample_geometric<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<u64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::parameter("geometric success probability must lie in (0, 1]"));
    }
    if p == 1.0 {
        return Ok(1);
    }
    // Inversion: ⌈ln U / ln(1-p)⌉.
    let k = crate::math::ceil(ln(uniform_open(rng)) / crate::math::ln_1p(-p));
    Ok((k as u64).max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive;
    use alloc::vec::Vec;

    #[test]
    fn bernoulli_degenerate_and_invalid() {
        let mut rng = derive(1, 0);
        assert!((0..10_000).all(|_| !sample_bernoulli(0.0, &mut rng).unwrap()));
        assert!((0..10_000).all(|_| sample_bernoulli(1.0, &mut rng).unwrap()));
        assert!(sample_bernoulli(1.5, &mut rng).is_err());
        assert!(sample_bernoulli(-0.1, &mut rng).is_err());
    }

    #[test]
    fn bernoulli_mean() {
        // 3σ band for 10^6 draws at q = 0.45 is ±0.0015; the test allows ±0.002.
        let mut rng = derive(2, 0);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| sample_bernoulli(0.45, &mut rng).unwrap()).count();
        assert!((hits as f64 / n as f64 - 0.45).abs() < 0.002);
    }

    #[test]
    fn laplace_moments_and_tail() {
        let mut rng = derive(3, 0);
        let n = 1_000_000;
        let mut xs: Vec<f64> = (0..n).map(|_| sample_laplace(1.0, &mut rng).unwrap()).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var / 2.0 - 1.0).abs() < 0.02, "variance {var}");
        xs.sort_by(f64::total_cmp);
        assert!(xs[n / 2].abs() < 0.01);

        // P(|X| > b ln 100) = e^{-ln 100} = 0.01.
        let b = 5.0;
        let cut = b * ln(100.0);
        let tail = (0..n).filter(|_| sample_laplace(b, &mut rng).unwrap().abs() > cut).count();
        assert!((tail as f64 / n as f64 - 0.01).abs() < 0.003);
        assert!(sample_laplace(0.0, &mut rng).is_err());
    }

    #[test]
    fn gaussian_variance() {
        let mut rng = derive(4, 0);
        let n = 200_000;
        let var = (0..n).map(|_| sample_gaussian(3.0, &mut rng).unwrap().powi(2)).sum::<f64>() / n as f64;
        assert!((var / 9.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn geometric_mean() {
        let mut rng = derive(5, 0);
        let n = 200_000;
        let mean = (0..n).map(|_| sample_geometric(0.25, &mut rng).unwrap() as f64).sum::<f64>() / n as f64;
        assert!((mean - 4.0).abs() < 0.05);
        assert_eq!(sample_geometric(1.0, &mut rng).unwrap(), 1);
    }
}
