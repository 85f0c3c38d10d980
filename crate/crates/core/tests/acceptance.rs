//! Acceptance run: one PASS/FAIL line per criterion, details indented below.
//! Everything is seeded; the run takes a few minutes on one core.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use hermite_lab::constants::{
    breve_l2_bound, compute_c_nh_with, compute_tilde_c_with, tilde_l2_exact, ConstantMethod, ConstantOptions,
};
use hermite_lab::direct::{path_grid, DirectOptions, DirectSimulator};
use hermite_lab::dyadic::{block_partition, index_set, Decomposer, DecomposerOptions, DecompositionRecord};
use hermite_lab::io::{sha256_hex, write_csv, PathFile};
use hermite_lab::nclt::NcltSimulator;
use hermite_lab::osc::{holder_exponent_estimate, holder_quotient_max, scan_oscillations, OscillationScan};
use hermite_lab::path::ChaosPath;
use hermite_lab::rng::stream_rng;
use hermite_lab::scale::ScaleFunction;
use hermite_lab::stats::{
    independence_diagnostics, independence_from_columns, quantile_sorted, select_n0, small_ball_estimate,
    tail_shape_fit, variance_scaling, Trend,
};
use hermite_lab::{HermiteParams, QuadratureConfig};

const SEED: u64 = 20_26;

// Criterion 1
const SCALING_PATHS: u64 = 2000;
const SCALING_SLOPE_TOL: f64 = 0.05;
// Criterion 2
const DIRECT_REL_TOL: f64 = 0.10;
const CROSS_REL_TOL: f64 = 0.03;
const CROSS_PATHS: u64 = 40_000;
const DIRECT_N2_PATHS: u64 = 20_000;
// Criterion 3
const SPLIT_TOL: f64 = 1e-10;
// Criteria 3 to 5
const SCENARIOS: u64 = 5000;
const LEVELS: [u32; 3] = [6, 8, 10];
const SPACINGS: [u64; 4] = [2, 4, 8, 16];
const TILDE_SD_TOL: f64 = 0.05;
// Criterion 6
const TAIL_SAMPLES: u64 = 100_000;
const SMALL_BALL_MAX: f64 = 0.9;
const N0_MAX: u64 = 10;
const SMALL_BALL_SCENARIOS: u64 = 10_000;
// Criteria 7 and 8
const OSC_RESOLUTION: u64 = 1 << 16;
const OSC_SPAN: u64 = 4;
const OSC_ORIGIN: f64 = 1.5;
const OSC_PATHS: u64 = 64;
const OSC_TAUS: usize = 50;
const OSC_J: (u32, u32) = (6, 14);
const DESK_S: f64 = 2.0;
const HOLDER_TAUS: usize = 100;
const HOLDER_TOL: f64 = 0.1;
const HOLDER_MU: f64 = 0.8;
// Criterion 9
const PARTITION_TRIPLES: usize = 100;

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { pass: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.lines.push(format!("     {line}"));
    }
}

fn p(n: u32, h: f64) -> HermiteParams {
    HermiteParams::new(n, h).unwrap()
}

fn c_nh(params: &HermiteParams) -> f64 {
    let method = if params.rank() == 1 { ConstantMethod::Nested } else { ConstantMethod::Tensor };
    compute_c_nh_with(params, &QuadratureConfig::default().with_tol(1e-10), &ConstantOptions::with_method(method))
        .unwrap()
        .value
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn rms(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

fn squares_at(paths: &[ChaosPath], i: usize) -> Vec<f64> {
    paths.iter().map(|q| q.values()[i].powi(2)).collect()
}

fn variance_scaling_check() -> Outcome {
    let mut o = Outcome::new();
    let lags: Vec<usize> = (0..=8).map(|k| 1usize << k).collect();
    for (n, h) in [(1, 0.7), (2, 0.8), (3, 0.9)] {
        let params = p(n, h);
        let sim = NcltSimulator::with_constant(params, 1024, 1, c_nh(&params)).unwrap();
        let paths = sim.ensemble(SEED, SCALING_PATHS);
        let vs = variance_scaling(&paths, &lags).unwrap();
        let want = params.var_exponent();
        let decades = (lags[lags.len() - 1] as f64 / lags[0] as f64).log10();
        o.check(
            (vs.fit.slope - want).abs() <= SCALING_SLOPE_TOL && decades >= 2.0,
            format!(
                "N={n} H={h}: slope {:.4} vs {want:.4} over {decades:.2} decades, {} paths",
                vs.fit.slope, SCALING_PATHS
            ),
        );
    }
    o
}

fn direct_sim(params: HermiteParams, spu: u64, fine: f64) -> DirectSimulator {
    let grid = Arc::new(path_grid(&params, 1.0, spu, fine, 1e-3).unwrap());
    DirectSimulator::new(params, grid, spu, spu, &DirectOptions::default()).unwrap()
}

fn cross_validation() -> Outcome {
    let mut o = Outcome::new();
    let p2 = p(2, 0.8);
    let c2 = c_nh(&p2);
    let sim = direct_sim(p2, 4, 1.0 / 32.0);
    let paths = sim.ensemble(SEED, DIRECT_N2_PATHS);
    let (m, se) = mean_se(&squares_at(&paths, 4));
    // The whole 2-SE interval has to sit inside the tolerance.
    let dev = (m - c2).abs() + 2.0 * se;
    o.check(
        dev <= DIRECT_REL_TOL * c2,
        format!(
            "direct N=2 H=0.8: E X(1)^2 = {m:.2} ± {se:.2} vs c_NH {c2:.2} (|rel| + 2SE = {:.4})",
            dev / c2
        ),
    );
    o.note(format!("exact discretized variance / c_NH = {:.4}", sim.point_variance(4) / c2));

    let p1 = p(1, 0.75);
    let c1 = c_nh(&p1);
    let direct = direct_sim(p1, 4, 1.0 / 32.0);
    let dpaths = direct.ensemble(SEED, CROSS_PATHS);
    let nclt = NcltSimulator::with_constant(p1, 64, 1, c1).unwrap();
    let npaths = nclt.ensemble(SEED + 1, CROSS_PATHS);
    for (k, t) in [(1usize, 0.25f64), (2, 0.5), (4, 1.0)] {
        let (md, sd) = mean_se(&squares_at(&dpaths, k));
        let (mn, sn) = mean_se(&squares_at(&npaths, (t * 64.0) as usize));
        let ratio = md / mn;
        let se = ratio * ((sd / md).powi(2) + (sn / mn).powi(2)).sqrt();
        o.check(
            (ratio - 1.0).abs() <= CROSS_REL_TOL,
            format!("N=1 H=0.75 t={t}: direct/NCLT second moment {ratio:.4} ± {se:.4}"),
        );
        let model = c1 * t.powf(2.0 * p1.gamma());
        o.note(format!("exact: direct {:.4}, model c t^(2 gamma) {model:.4}", direct.point_variance(k)));
    }
    o
}

struct Ensemble {
    j: u32,
    e: u64,
    records: Vec<Vec<DecompositionRecord>>,
    /// Exact SD of the discretized Δ̆, the same for every l.
    exact_breve: f64,
}

fn decomposition_ensembles() -> Vec<Ensemble> {
    let params = p(2, 0.8);
    let mut out = Vec::new();
    for &j in &LEVELS {
        for &e in &SPACINGS {
            let hi = *index_set(j, e).unwrap().end();
            let mut ls = vec![1, hi.div_ceil(2), hi];
            ls.dedup();
            let d = Decomposer::new(params, j, e, &ls, &DecomposerOptions::default()).unwrap();
            let exact_breve = d.variances(0).2.sqrt();
            out.push(Ensemble { j, e, records: d.ensemble(SEED ^ ((j as u64) << 8) ^ e, SCENARIOS), exact_breve });
        }
    }
    out
}

fn split_identity(ens: &[Ensemble]) -> Outcome {
    let mut o = Outcome::new();
    let (mut worst, mut count) = (0.0f64, 0usize);
    for en in ens {
        for r in en.records.iter().flatten() {
            worst = worst.max(r.split_residual());
            count += 1;
        }
    }
    o.check(worst <= SPLIT_TOL, format!("max relative |Δ − Δ̃ − Δ̆| = {worst:.2e} over {count} records"));
    o
}

fn independence(ens: &[Ensemble]) -> Outcome {
    let mut o = Outcome::new();
    for en in ens {
        let rep = independence_diagnostics(&en.records).unwrap();
        let worst = rep
            .pairs
            .iter()
            .map(|q| q.corr.abs().max(q.corr_abs.abs()).max(q.corr_sq.abs()))
            .fold(0.0f64, f64::max);
        let dcor_ok = rep.pairs.iter().all(|q| q.dcor <= q.dcor_null_max);
        o.check(
            rep.all_within_bands,
            format!(
                "j={} e={}: {} pairs, max |corr| {worst:.4} vs band {:.4}, dcor under permutation max: {dcor_ok}",
                en.j,
                en.e,
                rep.pairs.len(),
                rep.band
            ),
        );
    }
    // Contrast: adjacent raw increments have correlation (2^{2γ} − 2)/2.
    let params = p(2, 0.8);
    let d = Decomposer::new(params, 8, 1, &[100, 101], &DecomposerOptions::default()).unwrap();
    let recs = d.ensemble(SEED + 7, SCENARIOS);
    let cols: Vec<Vec<f64>> = (0..2).map(|k| recs.iter().map(|r| r[k].delta).collect()).collect();
    let rep = independence_from_columns(&[100, 101], &cols).unwrap();
    let corr = rep.pairs[0].corr;
    let oracle = ((2.0 * params.gamma()).exp2() - 2.0) / 2.0;
    o.check(
        corr.abs() > rep.band && (corr - oracle).abs() <= rep.band,
        format!("contrast: raw adjacent increments corr {corr:.4}, oracle {oracle:.4}, band {:.4}", rep.band),
    );
    o
}

fn l2_bounds(ens: &[Ensemble]) -> Outcome {
    let mut o = Outcome::new();
    let params = p(2, 0.8);
    let cfg = QuadratureConfig::default().with_tol(1e-10);
    let tilde_c = compute_tilde_c_with(&params, &cfg, &ConstantOptions::default()).unwrap().value;
    for &j in &LEVELS {
        let mut ratios = Vec::new();
        for en in ens.iter().filter(|en| en.j == j) {
            let e = en.e;
            let exact = tilde_l2_exact(&params, j, e, &cfg).unwrap().value.sqrt();
            let floor = tilde_c * (-(j as f64) * params.gamma()).exp2();
            let bound = breve_l2_bound(&params, j, e).unwrap().value;
            // Δ̆ and Δ̃ are stationary in l, so all columns estimate one SD.
            let cols = en.records[0].len();
            let col = |k: usize, f: fn(&DecompositionRecord) -> f64| -> Vec<f64> {
                en.records.iter().map(|r| f(&r[k])).collect()
            };
            let per_t: Vec<f64> = (0..cols).map(|k| rms(&col(k, |r| r.delta_tilde))).collect();
            let per_b: Vec<f64> = (0..cols).map(|k| rms(&col(k, |r| r.delta_breve))).collect();
            let pooled = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
            let (sd_t, sd_b) = (pooled(&per_t), pooled(&per_b));
            o.check(
                (sd_t / exact - 1.0).abs() <= TILDE_SD_TOL && sd_t >= floor,
                format!(
                    "j={j} e={e}: SD(Δ̃)/sqrt(tilde_l2_exact) = {:.4}; SD {sd_t:.3e} ≥ floor {floor:.3e}",
                    sd_t / exact
                ),
            );
            o.check(
                sd_b <= bound,
                format!(
                    "j={j} e={e}: SD(Δ̆)/bound = {:.4} (columns {}, exact discretized {:.4})",
                    sd_b / bound,
                    fmt_list(&per_b.iter().map(|v| v / bound).collect::<Vec<_>>(), 4),
                    en.exact_breve / bound
                ),
            );
            ratios.push(sd_b / sd_t);
        }
        o.check(
            ratios.windows(2).all(|w| w[1] < w[0]),
            format!("j={j}: SD(Δ̆)/SD(Δ̃) over e_j {SPACINGS:?} = {}", fmt_list(&ratios, 4)),
        );
    }
    o
}

fn fmt_list(v: &[f64], digits: usize) -> String {
    let s: Vec<String> = v.iter().map(|x| format!("{x:.digits$}")).collect();
    format!("[{}]", s.join(", "))
}

fn tails() -> (Outcome, u64) {
    let mut o = Outcome::new();
    let ys: Vec<f64> = (0..=12).map(|i| 2.0 + 0.25 * i as f64).collect();
    let mut worst_band: f64 = 0.0;
    for (n, h) in [(1, 0.7), (2, 0.8), (3, 0.9)] {
        let params = p(n, h);
        let sim = NcltSimulator::with_constant(params, 256, 1, c_nh(&params)).unwrap();
        let xs: Vec<f64> = (0..TAIL_SAMPLES).into_par_iter().map(|i| sim.path(SEED + 11, i).values()[256]).collect();
        let sb = small_ball_estimate(&xs).unwrap();
        worst_band = worst_band.max(sb.band.1);
        if n == 2 {
            let (stats, fit) = tail_shape_fit(&xs, n, &ys, "X(1)").unwrap();
            o.check(
                fit.chaos_fits_at_least_as_well,
                format!(
                    "N=2 X(1), {} samples, y in [{}, {}]: R² against y^(2/N) {:.4}, against y² {:.4}",
                    TAIL_SAMPLES,
                    stats.y[0],
                    stats.y[stats.y.len() - 1],
                    fit.chaos.r_squared,
                    fit.gaussian.r_squared
                ),
            );
        }
        o.check(
            sb.estimate <= SMALL_BALL_MAX,
            format!("small ball N={n} X(1): {:.4} [{:.4}, {:.4}]", sb.estimate, sb.band.0, sb.band.1),
        );
    }
    for &j in &LEVELS {
        let d = Decomposer::new(p(2, 0.8), j, 4, &[1], &DecomposerOptions::default()).unwrap();
        let t: Vec<f64> = d.ensemble(SEED + 19 + j as u64, SMALL_BALL_SCENARIOS).iter().map(|r| r[0].delta_tilde).collect();
        let sb = small_ball_estimate(&t).unwrap();
        worst_band = worst_band.max(sb.band.1);
        o.check(
            sb.estimate <= SMALL_BALL_MAX,
            format!("small ball Δ̃ j={j} e=4: {:.4} [{:.4}, {:.4}]", sb.estimate, sb.band.0, sb.band.1),
        );
    }
    let n0 = select_n0(worst_band).unwrap();
    o.check(n0 <= N0_MAX, format!("select_n0 on the largest upper band {worst_band:.4}: n0 = {n0}"));
    (o, n0)
}

struct PathStats {
    scan: OscillationScan,
    holder: Vec<f64>,
    quotients: Vec<Vec<f64>>,
}

fn oscillation_runs(n0: u64) -> Vec<PathStats> {
    let params = p(2, 0.8);
    let sim = NcltSimulator::with_constant(params, OSC_RESOLUTION, OSC_SPAN, c_nh(&params)).unwrap();
    let taus: Vec<f64> = (0..OSC_TAUS).map(|i| (i as f64 + 0.5) / OSC_TAUS as f64).collect();
    let s = ScaleFunction::constant(DESK_S);
    let radii: Vec<f64> = (0..=16).map(|k| 2f64.powf(-4.0 - 8.0 * k as f64 / 16.0)).collect();
    let per_path = HOLDER_TAUS.div_ceil(OSC_PATHS as usize);
    (0..OSC_PATHS)
        .into_par_iter()
        .map(|i| {
            let path = sim.path(SEED + 13, i);
            let scan = scan_oscillations(&path, OSC_ORIGIN, &taus, OSC_J.0..=OSC_J.1, &s, n0).unwrap();
            let mut rng = stream_rng(SEED + 17, i);
            let mut holder = Vec::new();
            let mut quotients = Vec::new();
            for k in 0..per_path {
                if i as usize + k * OSC_PATHS as usize >= HOLDER_TAUS {
                    break;
                }
                let tau = OSC_ORIGIN + rng.random_range(0.05..0.95);
                holder.push(holder_exponent_estimate(&path, tau, &radii).unwrap());
                quotients.push((6..=9).map(|m| holder_quotient_max(&path, tau, HOLDER_MU, 2f64.powi(-m)).unwrap()).collect());
            }
            PathStats { scan, holder, quotients }
        })
        .collect()
}

fn floor_and_ceiling(runs: &[PathStats]) -> Outcome {
    let mut o = Outcome::new();
    let js: Vec<u32> = (OSC_J.0..=OSC_J.1).collect();
    let mean_over_paths = |f: &dyn Fn(&OscillationScan, u32) -> f64, js: &[u32]| -> Vec<f64> {
        js.iter().map(|&j| runs.iter().map(|r| f(&r.scan, j)).sum::<f64>() / runs.len() as f64).collect()
    };
    let floor = mean_over_paths(&|sc, j| sc.rows_at(j).map(|r| r.floor_normalized).fold(f64::INFINITY, f64::min), &js);
    let ft = Trend::fit(&js, &floor).unwrap();
    let lowest = floor.iter().cloned().fold(f64::INFINITY, f64::min);
    o.check(
        ft.no_decrease() && lowest > 0.0,
        format!(
            "floor 2^(jγ)·Osc, mean over {} paths of min over {} τ, j {}..{}: ln-slope {:.4} ± {:.4}, lowest {lowest:.1}",
            runs.len(),
            OSC_TAUS,
            OSC_J.0,
            OSC_J.1,
            ft.slope,
            ft.slope_se
        ),
    );
    o.note(format!("floor by j: {}", fmt_list(&floor, 1)));
    let upper = &js[js.len() / 2..];
    let tail = mean_over_paths(&|sc, j| sc.rows_at(j).map(|r| r.floor_normalized).fold(f64::INFINITY, f64::min), upper);
    let tt = Trend::fit(upper, &tail).unwrap();
    o.note(format!("floor ln-slope over j {:?}: {:.4} ± {:.4}", upper, tt.slope, tt.slope_se));

    // The upper rate needs r < 1/2.
    let cjs: Vec<u32> =
        js.iter().copied().filter(|&j| runs.iter().all(|r| r.scan.rows_at(j).all(|x| x.upper_normalized.is_finite()))).collect();
    let ceil =
        mean_over_paths(&|sc, j| sc.rows_at(j).map(|r| r.upper_normalized).fold(f64::NEG_INFINITY, f64::max), &cjs);
    let ct = Trend::fit(&cjs, &ceil).unwrap();
    o.check(
        ct.no_increase(),
        format!(
            "ceiling, upper-rate normalized max over τ, j {}..{}: ln-slope {:.4} ± {:.4}",
            cjs[0],
            cjs[cjs.len() - 1],
            ct.slope,
            ct.slope_se
        ),
    );
    o.note(format!("ceiling by j: {}", fmt_list(&ceil, 2)));
    o
}

fn holder(runs: &[PathStats]) -> Outcome {
    let mut o = Outcome::new();
    let g = p(2, 0.8).gamma();
    let mut est: Vec<f64> = runs.iter().flat_map(|r| r.holder.iter().copied()).collect();
    est.sort_by(f64::total_cmp);
    let (q1, med, q3) = (quantile_sorted(&est, 0.25), quantile_sorted(&est, 0.5), quantile_sorted(&est, 0.75));
    o.check(
        (med - g).abs() <= HOLDER_TOL && q1 >= g - HOLDER_TOL && q3 <= g + HOLDER_TOL,
        format!("{} Hölder estimates: median {med:.3}, quartiles [{q1:.3}, {q3:.3}] vs γ = {g:.3} ± {HOLDER_TOL}", est.len()),
    );
    let qs: Vec<&Vec<f64>> = runs.iter().flat_map(|r| r.quotients.iter()).collect();
    let mean: Vec<f64> = (0..4).map(|k| qs.iter().map(|q| q[k]).sum::<f64>() / qs.len() as f64).collect();
    o.check(
        mean.windows(2).all(|w| w[1] > w[0]),
        format!("μ = {HOLDER_MU} quotient, mean over {} τ, r = 2^-6..2^-9: {}", qs.len(), fmt_list(&mean, 2)),
    );
    o
}

fn outputs_digest() -> String {
    let params = p(2, 0.8);
    let sim = NcltSimulator::with_constant(params, 1 << 10, 2, 1.0).unwrap();
    let paths = sim.ensemble(SEED, 32);
    let mut bytes = PathFile::from_paths(&paths).unwrap().to_bytes();
    let dsim = direct_sim(params, 4, 1.0 / 16.0);
    bytes.extend(PathFile::from_paths(&dsim.ensemble(SEED, 64)).unwrap().to_bytes());
    let scan = scan_oscillations(&paths[0], 0.5, &[0.25, 0.5, 0.75], 8..=10, &ScaleFunction::constant(DESK_S), 2).unwrap();
    scan.write_csv(&mut bytes).unwrap();
    let d = Decomposer::new(params, 6, 2, &[1, 8], &DecomposerOptions::default()).unwrap();
    let recs = d.ensemble(SEED, 5000);
    let flat: Vec<DecompositionRecord> = recs.iter().flatten().cloned().collect();
    write_csv(&flat, &mut bytes).unwrap();
    let rep = independence_diagnostics(&recs).unwrap();
    bytes.extend(serde_json::to_vec(&rep).unwrap());
    let xs: Vec<f64> = (0..10_000).map(|i| paths[i % 32].values()[(i * 7) % 1024]).collect();
    bytes.extend(serde_json::to_vec(&small_ball_estimate(&xs).unwrap()).unwrap());
    sha256_hex(&bytes)
}

fn machinery(runs: &[PathStats]) -> Outcome {
    let mut o = Outcome::new();
    let mut rng = stream_rng(SEED, 0xb10c);
    let (mut tried, mut bad) = (0, Vec::new());
    while tried < PARTITION_TRIPLES {
        let j = rng.random_range(8..=30u32);
        let e = 1u64 << rng.random_range(0..=(j - 7));
        let n0 = rng.random_range(2..=10u64);
        if let Ok(bp) = block_partition(j, e, n0) {
            tried += 1;
            if let Err(msg) = bp.verify() {
                bad.push(format!("(j={j}, e={e}, n0={n0}): {msg}"));
            }
        }
    }
    o.check(bad.is_empty(), format!("block partition invariants on {tried} random admissible triples; violations {bad:?}"));

    let cells: usize = runs.iter().map(|r| r.scan.rows.iter().filter(|x| x.block_floor.is_some()).count()).sum();
    let holds = runs.iter().all(|r| r.scan.window_domination_holds());
    o.check(holds && cells > 0, format!("Osc ≥ Λ in every scan, {cells} (τ, j) cells checked"));

    let digests: Vec<String> = [1usize, 8]
        .iter()
        .map(|&w| rayon::ThreadPoolBuilder::new().num_threads(w).build().unwrap().install(outputs_digest))
        .collect();
    o.check(
        digests[0] == digests[1],
        format!("outputs with 1 and 8 workers: sha256 {} / {}", &digests[0][..16], &digests[1][..16]),
    );
    o
}

fn report(k: u32, name: &str, started: Instant, o: &Outcome) -> bool {
    println!(
        "criterion {k} ({name}): {} [{:.1}s]",
        if o.pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    for l in &o.lines {
        println!("    {l}");
    }
    o.pass
}

fn main() {
    let mut passed = 0u32;
    let t = Instant::now();
    passed += u32::from(report(1, "variance scaling", t, &variance_scaling_check()));
    let t = Instant::now();
    passed += u32::from(report(2, "simulator cross-validation", t, &cross_validation()));
    let t = Instant::now();
    let ens = decomposition_ensembles();
    passed += u32::from(report(3, "decomposition identity", t, &split_identity(&ens)));
    let t = Instant::now();
    passed += u32::from(report(4, "independence", t, &independence(&ens)));
    let t = Instant::now();
    passed += u32::from(report(5, "L2 bounds", t, &l2_bounds(&ens)));
    let t = Instant::now();
    let (tail, n0) = tails();
    passed += u32::from(report(6, "tail shape and small ball", t, &tail));
    drop(ens);
    let t = Instant::now();
    let runs = oscillation_runs(n0);
    passed += u32::from(report(7, "oscillation floor and ceiling", t, &floor_and_ceiling(&runs)));
    let t = Instant::now();
    passed += u32::from(report(8, "Hölder exponent", t, &holder(&runs)));
    let t = Instant::now();
    passed += u32::from(report(9, "machinery invariants and determinism", t, &machinery(&runs)));
    println!("acceptance: {passed} of 9 criteria PASS");
}
