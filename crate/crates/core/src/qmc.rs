//! Randomly shifted rank-1 lattice-like points from the R_d additive
//! recurrence (generalized golden ratio).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Points frac(shift + n·a) with a_k = φ_d^{−k}, φ_d the positive root of
/// x^{d+1} = x + 1.
#[derive(Debug, Clone)]
pub struct RdSequence {
    alpha: Vec<f64>,
}

impl RdSequence {
    pub fn new(dim: usize) -> Self {
        let mut phi = 2.0f64;
        for _ in 0..200 {
            phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
        }
        let alpha = (1..=dim).map(|k| phi.powi(-(k as i32)).fract()).collect();
        RdSequence { alpha }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn point(&self, n: u64, shift: &[f64], out: &mut [f64]) {
        for k in 0..self.alpha.len() {
            // (n·a) mod 1 computed in two parts to keep precision for large n.
            let hi = (n >> 20) as f64 * ((1u64 << 20) as f64 * self.alpha[k]).fract();
            let lo = (n & ((1 << 20) - 1)) as f64 * self.alpha[k];
            let v = (shift[k] + hi.fract() + lo.fract()).fract();
            // tent fold: measure preserving, periodizes non-periodic integrands
            out[k] = 1.0 - (2.0 * v - 1.0).abs();
        }
    }
}

/// Mean and standard error over `shifts` randomized replicas of an
/// `n`-point rule, with shifts drawn from a fixed seed.
pub fn shifted_estimate<F>(dim: usize, n: u64, shifts: usize, seed: u64, mut f: F) -> (f64, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let seq = RdSequence::new(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; dim];
    let mut means = Vec::with_capacity(shifts);
    for _ in 0..shifts {
        let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let mut acc = 0.0;
        for i in 0..n {
            seq.point(i, &shift, &mut x);
            acc += f(&x);
        }
        means.push(acc / n as f64);
    }
    let k = means.len() as f64;
    let mean = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
    (mean, (var / k).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_stay_in_unit_cube() {
        let s = RdSequence::new(2);
        let mut x = [0.0; 2];
        for n in [0, 1, 7, 1 << 21, u64::MAX >> 12] {
            s.point(n, &[0.3, 0.9], &mut x);
            assert!(x.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn golden_ratio_in_one_dim() {
        let s = RdSequence::new(1);
        assert!((s.alpha[0] - 0.618_033_988_749_895).abs() < 1e-12);
    }

    #[test]
    fn integrates_smooth_function() {
        let (m, se) = shifted_estimate(3, 4096, 8, 1, |x| x[0] * x[1] * x[2] * 8.0);
        assert!((m - 1.0).abs() < 1e-3, "{m}");
        assert!(se < 1e-3);
    }
}
