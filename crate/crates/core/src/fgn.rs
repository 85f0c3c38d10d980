//! Exact sampling of stationary Gaussian sequences by circulant embedding.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Autocovariance of fractional Gaussian noise with Hurst index `h` at lag `k`.
pub fn fgn_autocov(h: f64, k: usize) -> f64 {
    let k = k as f64;
    let e = 2.0 * h;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

/// Davies-Harte sampler for a stationary sequence of length n.
pub struct CirculantSampler {
    n: usize,
    sqrt_eig: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    clipped_mass: f64,
}

impl std::fmt::Debug for CirculantSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantSampler")
            .field("n", &self.n)
            .field("clipped_mass", &self.clipped_mass)
            .finish()
    }
}

impl CirculantSampler {
    /// `autocov[k]` for k = 0..=n. Negative eigenvalues of the embedding are
    /// set to zero; their share of the total absolute spectrum is kept as
    /// the clipping mass.
    pub fn new(autocov: &[f64]) -> Result<Self> {
        if autocov.len() < 2 {
            return Err(Error::InvalidParams("autocovariance needs at least two lags".into()));
        }
        let n = autocov.len() - 1;
        let m = 2 * n;
        let mut c: Vec<Complex64> = Vec::with_capacity(m);
        for k in 0..=n {
            c.push(Complex64::new(autocov[k], 0.0));
        }
        for k in (1..n).rev() {
            c.push(Complex64::new(autocov[k], 0.0));
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut c);
        let total: f64 = c.iter().map(|z| z.re.abs()).sum();
        let negative: f64 = c.iter().filter(|z| z.re < 0.0).map(|z| -z.re).sum();
        let sqrt_eig = c.iter().map(|z| (z.re.max(0.0) / m as f64).sqrt()).collect();
        Ok(CirculantSampler { n, sqrt_eig, fft, clipped_mass: negative / total })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn clipped_mass(&self) -> f64 {
        self.clipped_mass
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut w: Vec<Complex64> = self
            .sqrt_eig
            .iter()
            .map(|&s| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                Complex64::new(s * a, s * b)
            })
            .collect();
        self.fft.process(&mut w);
        w.truncate(self.n);
        w.into_iter().map(|z| z.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fgn_autocov_at_half_is_white() {
        assert!((fgn_autocov(0.5, 0) - 1.0).abs() < 1e-15);
        assert!(fgn_autocov(0.5, 3).abs() < 1e-15);
    }

    #[test]
    fn empirical_covariance_matches() {
        let h = 0.8;
        let n = 64;
        let cov: Vec<f64> = (0..=n).map(|k| fgn_autocov(h, k)).collect();
        let s = CirculantSampler::new(&cov).unwrap();
        assert_eq!(s.clipped_mass(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let reps = 20000;
        let mut acc = [0.0; 3];
        for _ in 0..reps {
            let x = s.sample(&mut rng);
            for lag in 0..3 {
                acc[lag] += x[10] * x[10 + lag];
            }
        }
        for lag in 0..3 {
            let est = acc[lag] / reps as f64;
            assert!((est - cov[lag]).abs() < 0.04, "lag {lag}: {est} vs {}", cov[lag]);
        }
    }
}
