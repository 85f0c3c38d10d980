use std::sync::Arc;

use hermite_lab::direct::{path_grid, DirectOptions, DirectSimulator};
use hermite_lab::nclt::NcltSimulator;
use hermite_lab::path::ChaosPath;
use hermite_lab::stats::ks_two_sample;
use hermite_lab::HermiteParams;

fn c_closed(n: u32, h: f64) -> f64 {
    let fact: f64 = (1..=n).map(f64::from).product();
    let b = statrs::function::beta::beta(h - 0.5, 2.0 - 2.0 * h);
    let g = n as f64 * (h - 1.0);
    fact * b.powi(n as i32) * 2.0 / ((2.0 * g + 1.0) * (2.0 * g + 2.0))
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn at(paths: &[ChaosPath], i: usize) -> Vec<f64> {
    paths.iter().map(|p| p.values()[i]).collect()
}

#[test]
fn nclt_second_moment_follows_scaling_law() {
    for (n, h) in [(1, 0.7), (2, 0.8), (3, 0.9)] {
        let p = HermiteParams::new(n, h).unwrap();
        let c = c_closed(n, h);
        let sim = NcltSimulator::with_constant(p, 256, 1, c).unwrap();
        let paths = sim.ensemble(3, 4000);
        for k in [64, 128, 256] {
            let sq: Vec<f64> = at(&paths, k).iter().map(|x| x * x).collect();
            let (m, se) = mean_and_se(&sq);
            let want = c * (k as f64 / 256.0).powf(2.0 * p.gamma());
            assert!((m - want).abs() <= 4.0 * se, "N={n} t={}: {m} vs {want} (se {se})", k as f64 / 256.0);
        }
    }
}

#[test]
fn nclt_increments_are_stationary() {
    let p = HermiteParams::new(2, 0.8).unwrap();
    let sim = NcltSimulator::with_constant(p, 256, 1, c_closed(2, 0.8)).unwrap();
    let paths = sim.ensemble(5, 6000);
    let (a, b) = paths.split_at(3000);
    let early: Vec<f64> = a.iter().map(|q| q.values()[64] - q.values()[0]).collect();
    let late: Vec<f64> = b.iter().map(|q| q.values()[256] - q.values()[192]).collect();
    let ks = ks_two_sample(&early, &late).unwrap();
    assert!(!ks.reject, "D = {} > {}", ks.statistic, ks.critical);
}

#[test]
fn nclt_is_self_similar() {
    let p = HermiteParams::new(2, 0.8).unwrap();
    let sim = NcltSimulator::with_constant(p, 256, 1, c_closed(2, 0.8)).unwrap();
    let paths = sim.ensemble(6, 6000);
    let (a, b) = paths.split_at(3000);
    let k = 2f64.powf(p.gamma());
    let half: Vec<f64> = a.iter().map(|q| k * q.values()[128]).collect();
    let one: Vec<f64> = b.iter().map(|q| q.values()[256]).collect();
    let ks = ks_two_sample(&half, &one).unwrap();
    assert!(!ks.reject, "D = {} > {}", ks.statistic, ks.critical);
    // Rescaling by the wrong exponent must be detected.
    let wrong: Vec<f64> = a.iter().map(|q| 2f64.powf(0.9) * q.values()[128]).collect();
    assert!(ks_two_sample(&wrong, &one).unwrap().reject);
}

#[test]
fn nclt_ensembles_are_reproducible() {
    let p = HermiteParams::new(2, 0.8).unwrap();
    let sim = NcltSimulator::with_constant(p, 128, 2, 1.0).unwrap();
    let a = sim.ensemble(9, 16);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| sim.ensemble(9, 16));
    assert_eq!(a, b);
    assert_ne!(a[0].values(), sim.path(10, 0).values());
}

fn direct(n: u32, h: f64, fine: f64) -> DirectSimulator {
    let p = HermiteParams::new(n, h).unwrap();
    let grid = Arc::new(path_grid(&p, 1.0, 4, fine, 1e-3).unwrap());
    DirectSimulator::new(p, grid, 4, 4, &DirectOptions::default()).unwrap()
}

#[test]
fn direct_variance_converges_under_refinement() {
    for (n, h, last_gap) in [(1, 0.75, 0.005), (2, 0.8, 0.03)] {
        let c = c_closed(n, h);
        let gaps: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0]
            .iter()
            .map(|&f| (direct(n, h, f).point_variance(4) / c - 1.0).abs())
            .collect();
        assert!(gaps[1] < gaps[0], "N={n}: {gaps:?}");
        assert!(gaps[1] < last_gap, "N={n}: {gaps:?}");
    }
}

#[test]
fn direct_sample_moments_match_exact_variance() {
    let sim = direct(1, 0.75, 1.0 / 16.0);
    let paths = sim.ensemble(4, 8000);
    for k in [1, 2, 4] {
        let sq: Vec<f64> = at(&paths, k).iter().map(|x| x * x).collect();
        let (m, se) = mean_and_se(&sq);
        let want = sim.point_variance(k);
        assert!((m - want).abs() <= 4.0 * se, "k={k}: {m} vs {want} (se {se})");
    }
}

#[test]
fn direct_rank_one_follows_scaling_law() {
    let sim = direct(1, 0.75, 1.0 / 32.0);
    let c = c_closed(1, 0.75);
    for k in [1, 2, 4] {
        let t = k as f64 / 4.0;
        let model = c * t.powf(2.0 * 0.75);
        assert!((sim.point_variance(k) / model - 1.0).abs() < 0.03, "t={t}");
    }
}
