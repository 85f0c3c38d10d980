//! Empirical checks on chaos variables: tail shape, small-ball
//! probabilities, n₀ selection and independence diagnostics.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::DecompositionRecord;
use crate::error::{Error, Result};
use crate::path::ChaosPath;
use crate::rng::stream_rng;

pub const MIN_SAMPLES: usize = 10_000;
pub const MIN_EXCEEDANCES: usize = 20;
pub const BOOTSTRAP_RESAMPLES: usize = 500;
pub const BOOTSTRAP_SEED: u64 = 0x5eed_b007;

fn require(n: usize, need: usize) -> Result<()> {
    if n < need {
        return Err(Error::InsufficientSample { got: n, need });
    }
    Ok(())
}

/// sqrt(mean x²), the L² norm estimate; no centering.
pub fn second_moment_root(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientSample { got: 0, need: 1 });
    }
    let s = (samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64).sqrt();
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Degenerate(format!("second-moment root {s}")));
    }
    Ok(s)
}

/// Percentile band (2.5%, 97.5%) of a statistic over bootstrap resamples.
/// Resample b draws from stream b of the fixed seed, so the band does not
/// depend on the worker count.
fn bootstrap<F>(samples: &[f64], stat: F) -> Vec<(f64, f64)>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let n = samples.len();
    let reps: Vec<Vec<f64>> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(BOOTSTRAP_SEED, b);
            let draw: Vec<f64> = (0..n).map(|_| samples[rng.random_range(0..n)]).collect();
            stat(&draw)
        })
        .collect();
    let k = reps[0].len();
    (0..k)
        .map(|i| {
            let mut v: Vec<f64> = reps.iter().map(|r| r[i]).collect();
            v.sort_by(f64::total_cmp);
            (quantile_sorted(&v, 0.025), quantile_sorted(&v, 0.975))
        })
        .collect()
}

pub fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let pos = q * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < v.len() {
        v[i] * (1.0 - f) + v[i + 1] * f
    } else {
        v[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallBall {
    pub estimate: f64,
    pub band: (f64, f64),
    pub sigma: f64,
    pub sample_size: usize,
}

fn small_ball_fraction(samples: &[f64]) -> f64 {
    match second_moment_root(samples) {
        Ok(s) => samples.iter().filter(|x| x.abs() < 0.5 * s).count() as f64 / samples.len() as f64,
        Err(_) => 1.0,
    }
}

/// P̂(|χ| < σ̂/2) with a bootstrap band.
pub fn small_ball_estimate(samples: &[f64]) -> Result<SmallBall> {
    require(samples.len(), MIN_SAMPLES)?;
    let sigma = second_moment_root(samples)?;
    let estimate = small_ball_fraction(samples);
    let band = bootstrap(samples, |d| vec![small_ball_fraction(d)])[0];
    Ok(SmallBall { estimate, band, sigma, sample_size: samples.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn line_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() < 3 || xs.len() != ys.len() {
        return Err(Error::InsufficientSample { got: xs.len(), need: 3 });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("constant regressor".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(LineFit { slope, intercept: my - slope * mx, r_squared })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailStats {
    pub description: String,
    pub sample_size: usize,
    pub sigma: f64,
    /// Thresholds kept for the fit.
    pub y: Vec<f64>,
    /// P̂(|χ| > y σ̂) at each kept threshold.
    pub exceedance: Vec<f64>,
    pub band: Vec<(f64, f64)>,
    /// Thresholds dropped for having fewer than 20 exceedances.
    pub dropped: Vec<f64>,
    pub small_ball: SmallBall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub rank: u32,
    /// ln P̂ against y^{2/N}.
    pub chaos: LineFit,
    /// ln P̂ against y².
    pub gaussian: LineFit,
    pub chaos_fits_at_least_as_well: bool,
}

fn exceedances(samples: &[f64], ys: &[f64]) -> Vec<f64> {
    let Ok(s) = second_moment_root(samples) else {
        return vec![0.0; ys.len()];
    };
    let mut z: Vec<f64> = samples.iter().map(|x| x.abs() / s).collect();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    ys.iter().map(|&y| (z.len() - z.partition_point(|&v| v <= y)) as f64 / n).collect()
}

/// Exceedance curve of |χ|/σ̂ on the y grid and log-linear fits against
/// y^{2/N} and y². Thresholds below 2 are excluded; thresholds with fewer
/// than 20 exceedances are dropped and listed.
pub fn tail_shape_fit(samples: &[f64], rank: u32, ys: &[f64], description: &str) -> Result<(TailStats, TailFit)> {
    require(samples.len(), MIN_SAMPLES)?;
    if rank == 0 {
        return Err(Error::InvalidParams("rank 0".into()));
    }
    let sigma = second_moment_root(samples)?;
    let mut grid: Vec<f64> = ys.iter().copied().filter(|&y| y >= 2.0).collect();
    grid.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let all = exceedances(samples, &grid);
    let (mut kept, mut dropped) = (Vec::new(), Vec::new());
    for (&y, &p) in grid.iter().zip(&all) {
        if (p * n).round() as usize >= MIN_EXCEEDANCES {
            kept.push(y);
        } else {
            dropped.push(y);
        }
    }
    let exceedance = exceedances(samples, &kept);
    let band = bootstrap(samples, |d| exceedances(d, &kept));
    let lp: Vec<f64> = exceedance.iter().map(|p| p.ln()).collect();
    let xs_chaos: Vec<f64> = kept.iter().map(|y| y.powf(2.0 / rank as f64)).collect();
    let xs_gauss: Vec<f64> = kept.iter().map(|y| y * y).collect();
    let chaos = line_fit(&xs_chaos, &lp)?;
    let gaussian = line_fit(&xs_gauss, &lp)?;
    let better = chaos.r_squared >= gaussian.r_squared;
    let stats = TailStats {
        description: description.to_string(),
        sample_size: samples.len(),
        sigma,
        y: kept,
        exceedance,
        band,
        dropped,
        small_ball: small_ball_estimate(samples)?,
    };
    Ok((stats, TailFit { rank, chaos, gaussian, chaos_fits_at_least_as_well: better }))
}

/// Smallest n₀ ≥ 2 with 2 γ̂^{n₀} < 1.
pub fn select_n0(gamma_estimate: f64) -> Result<u64> {
    if !(0.0..1.0).contains(&gamma_estimate) {
        return Err(Error::InvalidParams(format!("small-ball constant {gamma_estimate} not in [0, 1)")));
    }
    let mut n0 = 2u64;
    while 2.0 * gamma_estimate.powi(n0 as i32) >= 1.0 {
        n0 += 1;
    }
    Ok(n0)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Sample distance correlation, O(n²) time and O(n) memory.
pub fn distance_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let nf = n as f64;
    let row_mean = |x: &[f64]| -> (Vec<f64>, f64) {
        let rows: Vec<f64> = (0..n).map(|i| x.iter().map(|v| (x[i] - v).abs()).sum::<f64>() / nf).collect();
        let grand = rows.iter().sum::<f64>() / nf;
        (rows, grand)
    };
    let (ra, ga) = row_mean(a);
    let (rb, gb) = row_mean(b);
    let (mut vab, mut vaa, mut vbb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            let x = (a[i] - a[k]).abs() - ra[i] - ra[k] + ga;
            let y = (b[i] - b[k]).abs() - rb[i] - rb[k] + gb;
            vab += x * y;
            vaa += x * x;
            vbb += y * y;
        }
    }
    if vaa <= 0.0 || vbb <= 0.0 {
        return 0.0;
    }
    (vab / (vaa * vbb).sqrt()).max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDiagnostics {
    pub l: (u64, u64),
    pub corr: f64,
    pub corr_abs: f64,
    pub corr_sq: f64,
    pub dcor: f64,
    /// Largest distance correlation over the permutation null.
    pub dcor_null_max: f64,
    /// The three correlations recomputed after shuffling one column.
    pub permuted: [f64; 3],
    pub within_bands: bool,
    pub permuted_within_bands: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub scenarios: usize,
    /// 4/√n.
    pub band: f64,
    pub dcor_subsample: usize,
    pub dcor_permutations: usize,
    pub pairs: Vec<PairDiagnostics>,
    pub all_within_bands: bool,
}

pub const MIN_SCENARIOS: usize = 5000;
const DCOR_SUBSAMPLE: usize = 2000;
const DCOR_PERMUTATIONS: usize = 99;
const PERMUTATION_SEED: u64 = 0x9e37_79b9;

/// Pairwise diagnostics of Δ̃ across the l columns of a record ensemble
/// (one row per scenario, same l order in every row).
pub fn independence_diagnostics(records: &[Vec<DecompositionRecord>]) -> Result<IndependenceReport> {
    require(records.len(), MIN_SCENARIOS)?;
    let ls: Vec<u64> = records[0].iter().map(|r| r.l).collect();
    if ls.len() < 2 {
        return Err(Error::InsufficientSample { got: ls.len(), need: 2 });
    }
    if records.iter().any(|row| row.iter().map(|r| r.l).ne(ls.iter().copied())) {
        return Err(Error::Format("record rows do not share the same l columns".into()));
    }
    let cols: Vec<Vec<f64>> =
        (0..ls.len()).map(|k| records.iter().map(|row| row[k].delta_tilde).collect()).collect();
    independence_from_columns(&ls, &cols)
}

pub fn independence_from_columns(ls: &[u64], cols: &[Vec<f64>]) -> Result<IndependenceReport> {
    let n = cols[0].len();
    require(n, MIN_SCENARIOS)?;
    let band = 4.0 / (n as f64).sqrt();
    let m = n.min(DCOR_SUBSAMPLE);
    let mut pairs_idx = Vec::new();
    for a in 0..ls.len() {
        for b in a + 1..ls.len() {
            pairs_idx.push((a, b));
        }
    }
    let pairs = pairs_idx
        .par_iter()
        .enumerate()
        .map(|(pi, &(a, b))| {
            let (x, y) = (&cols[a], &cols[b]);
            let three = |x: &[f64], y: &[f64]| {
                let ax: Vec<f64> = x.iter().map(|v| v.abs()).collect();
                let ay: Vec<f64> = y.iter().map(|v| v.abs()).collect();
                let sx: Vec<f64> = x.iter().map(|v| v * v).collect();
                let sy: Vec<f64> = y.iter().map(|v| v * v).collect();
                [pearson(x, y), pearson(&ax, &ay), pearson(&sx, &sy)]
            };
            let obs = three(x, y);
            let mut rng = stream_rng(PERMUTATION_SEED, pi as u64);
            let mut shuffled = y.clone();
            shuffled.shuffle(&mut rng);
            let permuted = three(x, &shuffled);
            let dcor = distance_correlation(&x[..m], &y[..m]);
            let mut sub = y[..m].to_vec();
            let mut null_max: f64 = 0.0;
            for _ in 0..DCOR_PERMUTATIONS {
                sub.shuffle(&mut rng);
                null_max = null_max.max(distance_correlation(&x[..m], &sub));
            }
            let inside = |v: &[f64; 3]| v.iter().all(|c| c.abs() <= band);
            PairDiagnostics {
                l: (ls[a], ls[b]),
                corr: obs[0],
                corr_abs: obs[1],
                corr_sq: obs[2],
                dcor,
                dcor_null_max: null_max,
                permuted,
                within_bands: inside(&obs) && dcor <= null_max,
                permuted_within_bands: inside(&permuted),
            }
        })
        .collect::<Vec<_>>();
    let all = pairs.iter().all(|p| p.within_bands && p.permuted_within_bands);
    Ok(IndependenceReport {
        scenarios: n,
        band,
        dcor_subsample: m,
        dcor_permutations: DCOR_PERMUTATIONS,
        pairs,
        all_within_bands: all,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceScaling {
    /// Lags in grid steps.
    pub lags: Vec<usize>,
    /// Lags in time units.
    pub deltas: Vec<f64>,
    /// E|X(t+δ) − X(t)|², averaged over paths and over every start point.
    pub second_moments: Vec<f64>,
    pub fit: LineFit,
}

/// Log-log regression of increment second moments on the lag. Increments
/// are stationary, so every start point of every path contributes.
pub fn variance_scaling(paths: &[ChaosPath], lags: &[usize]) -> Result<VarianceScaling> {
    let first = paths.first().ok_or(Error::InsufficientSample { got: 0, need: 1 })?;
    if let Some(&bad) = lags.iter().find(|&&k| k == 0 || k >= first.len()) {
        return Err(Error::OutOfRange(format!("lag {bad} for paths of {} points", first.len())));
    }
    let moments: Vec<f64> = lags
        .par_iter()
        .map(|&k| {
            let (sum, count) = paths.iter().fold((0.0, 0usize), |(s, c), p| {
                let v = p.values();
                let part: f64 = (k..v.len()).map(|i| (v[i] - v[i - k]).powi(2)).sum();
                (s + part, c + v.len() - k)
            });
            sum / count as f64
        })
        .collect();
    let spu = first.steps_per_unit() as f64;
    let deltas: Vec<f64> = lags.iter().map(|&k| k as f64 / spu).collect();
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = moments.iter().map(|m| m.ln()).collect();
    let fit = line_fit(&xs, &ys)?;
    Ok(VarianceScaling { lags: lags.to_vec(), deltas, second_moments: moments, fit })
}

/// Least-squares trend of ln(value) against j with the slope's standard
/// error, for finite-range "no increasing / decreasing trend" checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub js: Vec<u32>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub slope_se: f64,
}

impl Trend {
    pub fn fit(js: &[u32], values: &[f64]) -> Result<Trend> {
        if js.len() < 3 || js.len() != values.len() {
            return Err(Error::InsufficientSample { got: js.len(), need: 3 });
        }
        if values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Degenerate("trend values must be positive".into()));
        }
        let xs: Vec<f64> = js.iter().map(|&j| j as f64).collect();
        let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let f = line_fit(&xs, &ys)?;
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - f.intercept - f.slope * x).powi(2)).sum();
        let slope_se = (rss / (n - 2.0) / sxx).sqrt();
        Ok(Trend { js: js.to_vec(), values: values.to_vec(), slope: f.slope, slope_se })
    }

    /// No decrease significant at two standard errors.
    pub fn no_decrease(&self) -> bool {
        self.slope >= -2.0 * self.slope_se
    }

    pub fn no_increase(&self) -> bool {
        self.slope <= 2.0 * self.slope_se
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub reject: bool,
}

/// Two-sample Kolmogorov–Smirnov test at the 1% level, with the
/// asymptotic critical value 1.628·sqrt((n+m)/(nm)).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientSample { got: a.len().min(b.len()), need: 1 });
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut k, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && k < y.len() {
        let v = x[i].min(y[k]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while k < y.len() && y[k] <= v {
            k += 1;
        }
        d = d.max((i as f64 / n - k as f64 / m).abs());
    }
    let critical = 1.628 * ((n + m) / (n * m)).sqrt();
    Ok(KsResult { statistic: d, critical, reject: d > critical })
}
