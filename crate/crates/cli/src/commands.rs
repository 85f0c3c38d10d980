use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, ValueEnum};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use hermite_lab::constants::{
    breve_l2_bound, compute_c_nh_with, compute_tilde_c_with, tilde_l2_exact, ConstantMethod, ConstantOptions,
    ConstantReport,
};
use hermite_lab::direct::{path_grid, DirectOptions, DirectSimulator};
use hermite_lab::dyadic::{index_set, Decomposer, DecomposerOptions};
use hermite_lab::io::{file_digest, write_csv, write_json, ExperimentManifest, FileDigest, PathFile};
use hermite_lab::nclt::NcltSimulator;
use hermite_lab::osc::{holder_exponent_estimate, holder_quotient_max, scan_oscillations, OscillationScan};
use hermite_lab::rng::stream_rng;
use hermite_lab::scale::{check_admissibility, ScaleFunction};
use hermite_lab::stats::{
    independence_diagnostics, quantile_sorted, select_n0, small_ball_estimate, tail_shape_fit, variance_scaling,
    Trend,
};
use hermite_lab::path::ChaosPath;
use hermite_lab::{Error, HermiteParams, QuadratureConfig};

use crate::settings::Settings;
use crate::{Common, Failure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub note: String,
}

/// Per-command summary read back by `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub criteria: BTreeMap<String, Vec<Verdict>>,
    pub details: serde_json::Value,
}

impl Summary {
    fn new(command: &str) -> Self {
        Summary { command: command.into(), criteria: BTreeMap::new(), details: json!({}) }
    }

    fn verdict(&mut self, criterion: u32, pass: bool, note: impl Into<String>) {
        self.criteria.entry(criterion.to_string()).or_default().push(Verdict { pass, note: note.into() });
    }
}

struct Run {
    command: &'static str,
    out: PathBuf,
    settings: Settings,
    seed: u64,
    started: Instant,
    inputs: Vec<FileDigest>,
    outputs: Vec<PathBuf>,
}

impl Run {
    fn start(command: &'static str, common: &Common) -> Result<Self, Failure> {
        let mut settings = Settings::load(common.config.as_deref())?;
        let out = settings.get("out", common.out.as_ref().map(|p| p.display().to_string()), "hermite-out".into())?;
        let seed = settings.get("seed", common.seed, 7)?;
        Ok(Run {
            command,
            out: PathBuf::from(out),
            settings,
            seed,
            started: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    fn params(&mut self, common: &Common, rank: u32, hurst: f64) -> Result<HermiteParams, Failure> {
        let n = self.settings.get("rank", common.rank, rank)?;
        let h = self.settings.get("hurst", common.hurst, hurst)?;
        Ok(HermiteParams::new(n, h)?)
    }

    fn output(&mut self, name: &str) -> Result<PathBuf, Failure> {
        std::fs::create_dir_all(&self.out).map_err(|e| Failure::from(Error::from(e)))?;
        let p = self.out.join(name);
        self.outputs.push(p.clone());
        Ok(p)
    }

    fn input(&mut self, p: &Path) -> Result<(), Failure> {
        let sha256 = file_digest(p)?;
        self.inputs.push(FileDigest { path: p.display().to_string(), sha256 });
        Ok(())
    }

    fn finish(mut self, summary: &Summary, workers: usize) -> Result<(), Failure> {
        let config = self.settings.finish()?;
        let spath = self.output(&format!("{}.json", self.command))?;
        write_json(&spath, summary)?;
        let outputs = self
            .outputs
            .iter()
            .map(|p| Ok(FileDigest { path: p.display().to_string(), sha256: file_digest(p)? }))
            .collect::<Result<Vec<_>, Error>>()?;
        let manifest = ExperimentManifest {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.into(),
            config,
            master_seed: self.seed,
            inputs: self.inputs,
            outputs,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            workers,
        };
        manifest.write(&self.out.join(format!("{}.manifest.json", self.command)))?;
        for (k, vs) in &summary.criteria {
            for v in vs {
                println!("criterion {k}: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.note);
            }
        }
        println!("wrote {}", spath.display());
        Ok(())
    }
}

fn tensor_c_nh(params: &HermiteParams) -> Result<f64, Failure> {
    let opts = ConstantOptions::with_method(if params.rank() == 1 { ConstantMethod::Nested } else { ConstantMethod::Tensor });
    Ok(compute_c_nh_with(params, &QuadratureConfig::default().with_tol(1e-9), &opts)?.value)
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Nclt,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::Nclt => "nclt",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Method as ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Number of paths.
    #[arg(long)]
    pub paths: Option<u64>,
    /// Grid points per unit time.
    #[arg(long)]
    pub resolution: Option<u64>,
    /// Path length in time units.
    #[arg(long)]
    pub span: Option<u64>,
    /// Noise cells per path step near the path (direct method).
    #[arg(long)]
    pub cells_per_step: Option<u32>,
}

pub fn simulate(a: SimulateArgs, workers: usize) -> Result<(), Failure> {
    let mut run = Run::start("simulate", &a.common)?;
    let params = run.params(&a.common, 2, 0.8)?;
    let method = run.settings.get("method", a.method, Method::Nclt)?;
    let count = run.settings.get("paths", a.paths, 100)?;
    let resolution = run.settings.get("resolution", a.resolution, if method == Method::Nclt { 1024 } else { 8 })?;
    let span = run.settings.get("span", a.span, 1)?;
    let cps = run.settings.get("cells_per_step", a.cells_per_step, 2)?;
    if count == 0 {
        return Err(Failure::config("--paths must be positive"));
    }
    let (paths, c_nh) = match method {
        Method::Nclt => {
            let sim = NcltSimulator::with_constant(params, resolution, span, tensor_c_nh(&params)?)?;
            (sim.ensemble(run.seed, count), sim.c_nh())
        }
        Method::Direct => {
            let fine = 1.0 / (cps as f64 * resolution as f64);
            let grid = Arc::new(path_grid(&params, span as f64, resolution, fine, 1e-3)?);
            let sim = DirectSimulator::new(params, grid, resolution, span * resolution, &DirectOptions::default())?;
            (sim.ensemble(run.seed, count), tensor_c_nh(&params)?)
        }
    };
    let file = PathFile::from_paths(&paths)?;
    let fpath = run.output("paths.hpath")?;
    let digest = file.write(&fpath)?;

    let mut summary = Summary::new("simulate");
    let mean_x1 = paths.iter().map(|p| p.values()[resolution as usize].powi(2)).sum::<f64>() / count as f64;
    let mut details = json!({
        "params": params,
        "method": method,
        "paths": count,
        "resolution": resolution,
        "span": span,
        "c_nh": c_nh,
        "mean_x1_squared_over_c_nh": mean_x1 / c_nh,
        "path_file_sha256": digest,
    });
    // Lags 1, 2, 4, ... up to a quarter of the path.
    let lags: Vec<usize> = (0..).map(|k| 1usize << k).take_while(|&k| k <= (span * resolution) as usize / 4).collect();
    if lags.len() >= 3 {
        let vs = variance_scaling(&paths, &lags)?;
        let target = params.var_exponent();
        let decades = (*lags.last().unwrap() as f64 / lags[0] as f64).log10();
        details["variance_scaling"] = json!(vs);
        if count >= 2000 && decades >= 2.0 {
            let dev = vs.fit.slope - target;
            summary.verdict(
                1,
                dev.abs() <= 0.05,
                format!("N={}, H={}: slope {:.4} vs {:.4}", params.rank(), params.hurst(), vs.fit.slope, target),
            );
        }
    }
    summary.details = details;
    run.finish(&summary, workers)
}

// --------------------------------------------------------------- constants

#[derive(Args, Debug)]
pub struct ConstantsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Levels j for tilde_l2_exact and breve_l2_bound.
    #[arg(long, value_delimiter = ',')]
    pub j: Option<Vec<u32>>,
    /// Spacings e_j.
    #[arg(long, value_delimiter = ',')]
    pub e: Option<Vec<u64>>,
    /// nested | tensor | quasi_monte_carlo; default depends on the rank.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
}

fn parse_method(s: &str) -> Result<ConstantMethod, Failure> {
    serde_json::from_value(json!(s)).map_err(|_| Failure::config(format!("unknown constant method {s:?}")))
}

pub fn constants(a: ConstantsArgs, workers: usize) -> Result<(), Failure> {
    let mut run = Run::start("constants", &a.common)?;
    let params = run.params(&a.common, 2, 0.8)?;
    let js = run.settings.list("j", a.j, vec![6, 8, 10])?;
    let es = run.settings.list("e", a.e, vec![2, 4, 8, 16])?;
    let tol = run.settings.get("tol", a.tol, 1e-9)?;
    let method = run.settings.opt("method", a.method)?.map(|m| parse_method(&m)).transpose()?;
    let cfg = QuadratureConfig::default().with_tol(tol);
    let opts = ConstantOptions { method, ..Default::default() };
    let mut reports: Vec<ConstantReport> = vec![
        compute_tilde_c_with(&params, &cfg, &opts)?,
        compute_c_nh_with(&params, &cfg, &opts)?,
    ];
    let mut notes = Vec::new();
    for &j in &js {
        for &e in &es {
            reports.push(tilde_l2_exact(&params, j, e, &cfg)?);
            match breve_l2_bound(&params, j, e) {
                Ok(r) => reports.push(r),
                Err(err) => notes.push(format!("breve_l2_bound(j={j}, e={e}): {err}")),
            }
        }
    }
    let tilde = reports[0].value;
    // tilde_l2_exact ≥ c̃² 2^{−2jγ}.
    let lower_ok = reports
        .iter()
        .filter(|r| r.name == "tilde_l2_exact")
        .all(|r| {
            let j = r.metadata["j"].as_u64().unwrap_or(0) as f64;
            r.value >= tilde * tilde * (-2.0 * j * params.gamma()).exp2() * (1.0 - 1e-9)
        });
    let mut summary = Summary::new("constants");
    summary.details = json!({ "params": params, "reports": reports, "notes": notes, "tilde_lower_bound_holds": lower_ok });
    let path = run.output("constants_reports.json")?;
    write_json(&path, &reports)?;
    run.finish(&summary, workers)
}

// --------------------------------------------------------------- decompose

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',')]
    pub j: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    pub e: Option<Vec<u64>>,
    /// Block positions l; default three spread over L^j.
    #[arg(long, value_delimiter = ',')]
    pub ls: Option<Vec<u64>>,
    #[arg(long)]
    pub scenarios: Option<u64>,
    #[arg(long)]
    pub cells_per_step: Option<u32>,
}

#[derive(Serialize)]
struct RecordRow {
    scenario: u64,
    j: u32,
    l: u64,
    e_j: u64,
    delta: f64,
    delta_tilde: f64,
    delta_breve: f64,
    d_lo: f64,
    d_hi: f64,
}

fn sd(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

pub fn decompose(a: DecomposeArgs, workers: usize) -> Result<(), Failure> {
    let mut run = Run::start("decompose", &a.common)?;
    let params = run.params(&a.common, 2, 0.8)?;
    let js = run.settings.list("j", a.j, vec![8])?;
    let es = run.settings.list("e", a.e, vec![4])?;
    let ls_flag = run.settings.list("ls", a.ls, vec![])?;
    let n = run.settings.get("scenarios", a.scenarios, 5000)?;
    let cps = run.settings.get("cells_per_step", a.cells_per_step, 8)?;
    if n < 2 {
        return Err(Failure::config("--scenarios must be at least 2"));
    }
    let cfg = QuadratureConfig::default().with_tol(1e-10);
    let tilde_c = compute_tilde_c_with(&params, &cfg, &ConstantOptions::default())?.value;
    let opts = DecomposerOptions { cells_per_step: cps, ..Default::default() };
    let csv_path = run.output("records.csv")?;
    let mut rows = Vec::new();
    let mut summary = Summary::new("decompose");
    let mut cells = Vec::new();
    let mut max_residual: f64 = 0.0;
    for &j in &js {
        let mut ratios = Vec::new();
        for &e in &es {
            let set = index_set(j, e)?;
            let ls = if ls_flag.is_empty() {
                let hi = *set.end();
                let mut v = vec![1, hi.div_ceil(2), hi];
                v.dedup();
                v
            } else {
                ls_flag.clone()
            };
            let d = Decomposer::new(params, j, e, &ls, &opts)?;
            let ens = d.ensemble(run.seed, n);
            for (s, row) in ens.iter().enumerate() {
                for r in row {
                    max_residual = max_residual.max(r.split_residual());
                    rows.push(RecordRow {
                        scenario: s as u64,
                        j,
                        l: r.l,
                        e_j: e,
                        delta: r.delta,
                        delta_tilde: r.delta_tilde,
                        delta_breve: r.delta_breve,
                        d_lo: r.d_lo,
                        d_hi: r.d_hi,
                    });
                }
            }
            let tilde: Vec<f64> = ens.iter().map(|r| r[0].delta_tilde).collect();
            let breve: Vec<f64> = ens.iter().map(|r| r[0].delta_breve).collect();
            let exact = tilde_l2_exact(&params, j, e, &cfg)?.value.sqrt();
            let (sd_t, sd_b) = (sd(&tilde), sd(&breve));
            let floor = tilde_c * (-(j as f64) * params.gamma()).exp2();
            let bound = breve_l2_bound(&params, j, e).ok().map(|r| r.value);
            let (_, vt, vb) = d.variances(0);
            let ok_tilde = (sd_t / exact - 1.0).abs() <= 0.05 && sd_t >= floor;
            let ok_breve = bound.is_none_or(|b| sd_b <= b);
            summary.verdict(
                5,
                ok_tilde && ok_breve,
                format!(
                    "j={j}, e={e}: SD(tilde)/exact {:.4}, SD(breve)/bound {}",
                    sd_t / exact,
                    bound.map(|b| format!("{:.4}", sd_b / b)).unwrap_or_else(|| "n/a".into())
                ),
            );
            ratios.push(sd_b / sd_t);
            let independence = if ls.len() >= 2 && ens.len() >= hermite_lab::stats::MIN_SCENARIOS {
                let rep = independence_diagnostics(&ens)?;
                summary.verdict(4, rep.all_within_bands, format!("j={j}, e={e}: {} pairs within 4/sqrt(n)", rep.pairs.len()));
                Some(rep)
            } else {
                None
            };
            cells.push(json!({
                "j": j, "e_j": e, "ls": ls,
                "sd_tilde": sd_t, "sd_breve": sd_b,
                "tilde_l2_exact_sqrt": exact, "tilde_floor": floor, "breve_bound": bound,
                "discrete_sd_tilde": vt.sqrt(), "discrete_sd_breve": vb.sqrt(),
                "independence": independence,
            }));
        }
        if ratios.len() >= 2 {
            let dec = ratios.windows(2).all(|w| w[1] < w[0]);
            summary.verdict(5, dec, format!("j={j}: SD(breve)/SD(tilde) over e = {es:?}: {ratios:.4?}"));
        }
    }
    let file = std::fs::File::create(&csv_path).map_err(|e| Failure::from(Error::from(e)))?;
    write_csv(&rows, std::io::BufWriter::new(file))?;
    summary.verdict(3, max_residual <= 1e-10, format!("max relative split residual {max_residual:e}"));
    summary.details = json!({ "params": params, "scenarios": n, "cells": cells, "max_split_residual": max_residual });
    run.finish(&summary, workers)
}

// --------------------------------------------------------------- oscillate

#[derive(Args, Debug)]
pub struct OscillateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Path file written by `simulate`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Time of τ = 0 on the path axis; default centres [0, 1] in the span.
    #[arg(long)]
    pub origin: Option<f64>,
    #[arg(long)]
    pub taus: Option<usize>,
    #[arg(long)]
    pub j_min: Option<u32>,
    #[arg(long)]
    pub j_max: Option<u32>,
    #[arg(long)]
    pub n0: Option<u64>,
    /// Constant scale function S ≡ value (default 2).
    #[arg(long)]
    pub s_const: Option<f64>,
    /// Use the power-log S with this β instead of a constant.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Number of random τ for Hölder estimates.
    #[arg(long)]
    pub holder_taus: Option<usize>,
}

pub fn oscillate(a: OscillateArgs, workers: usize) -> Result<(), Failure> {
    let mut run = Run::start("oscillate", &a.common)?;
    let input = run.settings.opt("input", a.input.map(|p| p.display().to_string()))?;
    let input = PathBuf::from(input.ok_or_else(|| Failure {
        code: crate::EXIT_MISSING_INPUT,
        message: "oscillate needs --input <path file>".into(),
    })?);
    let file = PathFile::read(&input)?;
    run.input(&input)?;
    let paths = file.to_paths()?;
    let params = file.params;
    let span = paths[0].span();
    let origin = run.settings.get("origin", a.origin, ((span - 1.0) / 2.0).max(0.0))?;
    let ntau = run.settings.get("taus", a.taus, 50)?;
    let j_min = run.settings.get("j_min", a.j_min, 6)?;
    let j_max = run.settings.get("j_max", a.j_max, 14)?;
    let n0 = run.settings.get("n0", a.n0, 2)?;
    let beta = run.settings.opt("beta", a.beta)?;
    let s_const = run.settings.get("s_const", a.s_const, 2.0)?;
    let nh = run.settings.get("holder_taus", a.holder_taus, 100)?;
    let s = match beta {
        Some(b) => ScaleFunction::default_for(&params, b),
        None => ScaleFunction::constant(s_const),
    };
    s.validate()?;
    if j_min > j_max || ntau == 0 {
        return Err(Failure::config("empty (tau, j) grid"));
    }
    let taus: Vec<f64> = (0..ntau).map(|i| (i as f64 + 0.5) / ntau as f64).collect();
    let scans = paths
        .iter()
        .map(|p| scan_oscillations(p, origin, &taus, j_min..=j_max, &s, n0))
        .collect::<Result<Vec<OscillationScan>, Error>>()?;

    let csv_path = run.output("oscillations.csv")?;
    let mut text = format!("path,{}\n", OscillationScan::CSV_HEADER);
    for (i, scan) in scans.iter().enumerate() {
        let mut buf = Vec::new();
        scan.write_csv(&mut buf)?;
        for line in String::from_utf8_lossy(&buf).lines().skip(1) {
            text.push_str(&format!("{i},{line}\n"));
        }
    }
    std::fs::write(&csv_path, text).map_err(|e| Failure::from(Error::from(e)))?;

    let mut summary = Summary::new("oscillate");
    let js: Vec<u32> = (j_min..=j_max).collect();
    let per_j = |f: &dyn Fn(&OscillationScan, u32) -> f64| -> Vec<f64> {
        js.iter().map(|&j| scans.iter().map(|sc| f(sc, j)).sum::<f64>() / scans.len() as f64).collect()
    };
    let floors = per_j(&|sc, j| sc.rows_at(j).map(|r| r.floor_normalized).fold(f64::INFINITY, f64::min));
    let ceil_js: Vec<u32> = js.iter().copied().filter(|&j| scans[0].rows_at(j).all(|r| r.upper_normalized.is_finite())).collect();
    let ceilings: Vec<f64> = ceil_js
        .iter()
        .map(|&j| scans.iter().map(|sc| sc.rows_at(j).map(|r| r.upper_normalized).fold(f64::NEG_INFINITY, f64::max)).sum::<f64>() / scans.len() as f64)
        .collect();
    let floor_trend = Trend::fit(&js, &floors).ok();
    let ceil_trend = Trend::fit(&ceil_js, &ceilings).ok();
    if let (Some(ft), Some(ct)) = (&floor_trend, &ceil_trend) {
        let min_floor = floors.iter().cloned().fold(f64::INFINITY, f64::min);
        summary.verdict(
            7,
            ft.no_decrease() && min_floor > 0.0 && ct.no_increase(),
            format!(
                "floor slope {:.4} ± {:.4} (min {:.3}), ceiling slope {:.4} ± {:.4}",
                ft.slope, ft.slope_se, min_floor, ct.slope, ct.slope_se
            ),
        );
    }
    let domination = scans.iter().all(|s| s.window_domination_holds());
    let checked: usize = scans.iter().map(|s| s.rows.iter().filter(|r| r.block_floor.is_some()).count()).sum();
    summary.verdict(9, domination, format!("window domination over {checked} (tau, j) cells with a block partition"));

    // Hölder estimates at random τ, cycling through the paths.
    let spu = paths[0].steps_per_unit() as f64;
    let r_min = (16.0 / spu).max(2f64.powi(-12));
    let r_max = (1.0f64 / 16.0).min(origin).min(span - origin - 1.0);
    let radii: Vec<f64> = (0..=16).map(|k| r_min * (r_max / r_min).powf(k as f64 / 16.0)).collect();
    let mut rng = stream_rng(run.seed, 0x401de5);
    let mut holder = Vec::with_capacity(nh);
    let mut picks = Vec::with_capacity(nh);
    // Two decades of radii are needed; short paths get no estimates.
    let nh = if r_max >= 100.0 * r_min { nh } else { 0 };
    for i in 0..nh {
        let tau: f64 = rng.random_range(0.05..0.95);
        let p = &paths[i % paths.len()];
        if let Ok(h) = holder_exponent_estimate(p, origin + tau, &radii) {
            holder.push(h);
            picks.push((i % paths.len(), tau));
        }
    }
    let mut details = json!({
        "params": params, "paths": paths.len(), "origin": origin, "n0": n0, "scale": s,
        "js": js, "floor_mean_min": floors, "ceiling_js": ceil_js, "ceiling_mean_max": ceilings,
        "floor_trend": floor_trend, "ceiling_trend": ceil_trend,
    });
    if holder.len() >= 3 {
        let mut sorted = holder.clone();
        sorted.sort_by(f64::total_cmp);
        let (q1, med, q3) = (quantile_sorted(&sorted, 0.25), quantile_sorted(&sorted, 0.5), quantile_sorted(&sorted, 0.75));
        let g = params.gamma();
        let quot: Vec<f64> = (0..4)
            .map(|k| {
                let r = 2f64.powi(-6 - k);
                picks.iter().filter_map(|&(pi, tau)| holder_quotient_max(&paths[pi], origin + tau, 0.8, r).ok()).sum::<f64>()
                    / picks.len() as f64
            })
            .collect();
        let increasing = quot.windows(2).all(|w| w[1] > w[0]);
        summary.verdict(
            8,
            (med - g).abs() <= 0.1 && q1 >= g - 0.1 && q3 <= g + 0.1 && increasing,
            format!("Hölder median {med:.3}, quartiles [{q1:.3}, {q3:.3}] vs {g:.3}; mu=0.8 shell maxima {quot:.2?}"),
        );
        details["holder"] = json!({ "radii": radii, "estimates": holder, "median": med, "q1": q1, "q3": q3, "mu_quotients": quot });
    }
    summary.details = details;
    run.finish(&summary, workers)
}

// ------------------------------------------------------------------- tails

#[derive(Args, Debug)]
pub struct TailsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Path file; samples are X(1) − X(0) of each path. Without it, NCLT
    /// samples are drawn.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub resolution: Option<u64>,
}

pub fn tails(a: TailsArgs, workers: usize) -> Result<(), Failure> {
    let mut run = Run::start("tails", &a.common)?;
    let input = run.settings.opt("input", a.input.map(|p| p.display().to_string()))?;
    let (params, samples) = match input {
        Some(p) => {
            let p = PathBuf::from(p);
            let file = PathFile::read(&p)?;
            run.input(&p)?;
            let spu = file.steps_per_unit as usize;
            if file.points <= spu {
                return Err(Failure::config("paths shorter than one time unit"));
            }
            let v: Vec<f64> = file.values.chunks(file.points).map(|c| c[spu] - c[0]).collect();
            (file.params, v)
        }
        None => {
            let params = run.params(&a.common, 2, 0.8)?;
            let n = run.settings.get("samples", a.samples, 100_000)?;
            let res = run.settings.get("resolution", a.resolution, 256)?;
            let sim = NcltSimulator::with_constant(params, res, 1, tensor_c_nh(&params)?)?;
            let v = sim.ensemble(run.seed, n).iter().map(|p: &ChaosPath| p.values()[res as usize]).collect();
            (params, v)
        }
    };
    let ys: Vec<f64> = (0..=12).map(|i| 2.0 + 0.25 * i as f64).collect();
    let (stats, fit) = tail_shape_fit(&samples, params.rank(), &ys, "normalized increments X(1) - X(0)")?;
    let sb = small_ball_estimate(&samples)?;
    let n0 = select_n0(sb.band.1.min(0.999_999))?;
    let mut summary = Summary::new("tails");
    let shape_ok = params.rank() < 2 || fit.chaos_fits_at_least_as_well;
    summary.verdict(
        6,
        shape_ok && sb.estimate <= 0.9 && n0 <= 10,
        format!(
            "R² y^(2/N) {:.4} vs y² {:.4}; small ball {:.4} [{:.4}, {:.4}]; n0 = {n0}",
            fit.chaos.r_squared, fit.gaussian.r_squared, sb.estimate, sb.band.0, sb.band.1
        ),
    );
    summary.details = json!({ "params": params, "tail": stats, "fit": fit, "small_ball": sb, "n0": n0 });
    run.finish(&summary, workers)
}

// ----------------------------------------------------------------- check-s

#[derive(Args, Debug)]
pub struct CheckSArgs {
    #[command(flatten)]
    pub common: Common,
    /// β of the power-log scale function.
    #[arg(long)]
    pub beta: Option<f64>,
    /// CSV with columns z,s for a tabulated scale function.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub z_min: Option<f64>,
    #[arg(long)]
    pub z_max: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct TableRow {
    z: f64,
    s: f64,
}

pub fn check_s(a: CheckSArgs, workers: usize) -> Result<(), Failure> {
    let mut run = Run::start("check-s", &a.common)?;
    let params = run.params(&a.common, 2, 0.8)?;
    let table = run.settings.opt("table", a.table.map(|p| p.display().to_string()))?;
    let beta = run.settings.opt("beta", a.beta)?;
    let z_min = run.settings.get("z_min", a.z_min, 1.0)?;
    let z_max = run.settings.get("z_max", a.z_max, 1e6)?;
    let eps = run.settings.list("epsilons", a.epsilons, vec![0.25, 0.5, 1.0])?;
    let s = match (table, beta) {
        (Some(_), Some(_)) => return Err(Failure::config("give either --table or --beta, not both")),
        (Some(t), None) => {
            let p = PathBuf::from(t);
            let rows: Vec<TableRow> = hermite_lab::io::read_csv(&p)?;
            run.input(&p)?;
            ScaleFunction::Tabulated { z: rows.iter().map(|r| r.z).collect(), s: rows.iter().map(|r| r.s).collect() }
        }
        (None, b) => ScaleFunction::default_for(&params, b.unwrap_or(1.0)),
    };
    let rep = check_admissibility(&s, &params, z_min, z_max, &eps, &[1.0, 2.0, 4.0])?;
    println!(
        "decay {} | divergence {} | shift {}",
        verdict_word(rep.decay.pass),
        verdict_word(rep.divergence.iter().all(|c| c.pass)),
        verdict_word(rep.shift.iter().all(|c| c.pass))
    );
    let mut summary = Summary::new("check-s");
    summary.details = json!({ "params": params, "scale": s, "report": rep });
    run.finish(&summary, workers)
}

fn verdict_word(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}
