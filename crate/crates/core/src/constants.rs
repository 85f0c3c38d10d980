//! Constants and exact second moments: c̃, c_{N,H}, E Δ̃², and the
//! assembled bound on the L² norm of Δ̆.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::hermite::{kernel_from_gaps, kernel_time_integral, HermiteParams, QuadratureConfig};
use crate::overlap::{pair_rule, single_cell_moment, Overlap, PairGrading};
use crate::qmc::shifted_estimate;
use crate::quad::adaptive_gk;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantMethod {
    /// One-dimensional adaptive quadrature over x with the kernel integral
    /// nested inside (rank 1 only).
    Nested,
    /// Time-pair reduction: the x-integrals are done in closed form and a
    /// graded product rule handles the (s, u) square.
    Tensor,
    /// Randomly shifted low-discrepancy points over x, kernel integral
    /// nested inside.
    QuasiMonteCarlo,
}

impl ConstantMethod {
    pub fn default_for(rank: u32) -> Self {
        match rank {
            1 => ConstantMethod::Nested,
            _ => ConstantMethod::Tensor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantOptions {
    pub method: Option<ConstantMethod>,
    pub qmc_points: u64,
    pub qmc_shifts: usize,
    pub qmc_seed: u64,
    /// Relative standard-error target for the quasi-Monte Carlo route.
    pub qmc_rel_tol: f64,
}

impl Default for ConstantOptions {
    fn default() -> Self {
        ConstantOptions {
            method: None,
            qmc_points: 1 << 13,
            qmc_shifts: 16,
            qmc_seed: 0x5eed_c0de,
            qmc_rel_tol: 2e-4,
        }
    }
}

impl ConstantOptions {
    pub fn with_method(method: ConstantMethod) -> Self {
        ConstantOptions { method: Some(method), ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub name: String,
    pub params: HermiteParams,
    pub value: f64,
    pub error: f64,
    pub method: ConstantMethod,
    pub metadata: BTreeMap<String, Value>,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// ∫∫_{[t0,t1]²} G_{[c0,c1]}(s,u)^N ds du through the pair rule, refined
/// until two successive gradings agree to `tol` (relative to max(1, |value|)).
fn tensor_moment(
    params: &HermiteParams,
    t0: f64,
    t1: f64,
    c0: f64,
    c1: f64,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64, usize)> {
    let ov = Overlap::new(params);
    let breaks: Vec<f64> = [c0, c1].into_iter().filter(|&c| c > t0 && c < t1).collect();
    let order = 8 + 2 * cfg.base_panels.min(4);
    let mut g = PairGrading::for_params(params, order);
    let rule = pair_rule(t0, t1, &breaks, &g);
    let mut prev = single_cell_moment(&ov, &rule, c0, c1, params.rank());
    let mut err = f64::INFINITY;
    for _ in 0..3 {
        g = g.refined();
        let rule = pair_rule(t0, t1, &breaks, &g);
        let points = rule.len();
        let next = single_cell_moment(&ov, &rule, c0, c1, params.rank());
        err = (next - prev).abs();
        if err <= cfg.abs_tol * next.abs().max(1.0) {
            return Ok((next, err, points));
        }
        prev = next;
    }
    Err(Error::ToleranceNotReached { value: prev, error: err, target: cfg.abs_tol })
}

/// Maps v ∈ (0,1) onto a gap d ∈ (0, len) with density adapted to both an
/// integrable blow-up at d = 0 and a power-law tail d^{2H−3}.
#[derive(Debug, Clone, Copy)]
struct GapMap {
    kappa: f64,
}

impl GapMap {
    fn apply(&self, v: f64, len: f64) -> (f64, f64) {
        // d = (w/(1−w))^κ with w ∈ (0, w_len)
        let r = len.powf(1.0 / self.kappa);
        let w_len = r / (1.0 + r);
        let w = w_len * v;
        let q = w / (1.0 - w);
        let d = q.powf(self.kappa);
        let jac = self.kappa * q.powf(self.kappa - 1.0) / ((1.0 - w) * (1.0 - w)) * w_len;
        (d.min(len), jac)
    }
}

/// ∫_{[lo,1]^N} a(y)² dy, a the kernel integral over [0,1], by shifted
/// low-discrepancy points on the ordered simplex y_1 > … > y_N.
fn qmc_moment(
    params: &HermiteParams,
    lo: f64,
    cfg: &QuadratureConfig,
    opts: &ConstantOptions,
) -> Result<(f64, f64, u64)> {
    let n = params.rank() as usize;
    let map = GapMap { kappa: (2.0 / (2.0 - 2.0 * params.hurst())).max(3.0) };
    let inner = cfg.with_tol(1e-9);
    let fact = factorial(params.rank());
    let mut failure = None;
    let mut gaps = vec![0.0; n.saturating_sub(1)];
    let mut pts = opts.qmc_points;
    loop {
        let (mean, se) = shifted_estimate(n, pts, opts.qmc_shifts, opts.qmc_seed, |v| {
            // y_1 = 1 − d_1 and y_k = y_{k−1} − d_k, kept as gaps from y_1
            let (d1, mut jac) = map.apply(v[0], 1.0 - lo);
            jac *= fact;
            let m = 1.0 - d1;
            let mut acc = 0.0;
            for k in 1..n {
                let (d, j) = map.apply(v[k], (m - lo) - acc);
                acc += d;
                gaps[k - 1] = acc;
                jac *= j;
            }
            // underflowed gaps sit on a null set of the coincidence diagonal
            if jac == 0.0 || !jac.is_finite() || d1 <= 0.0 || gaps.contains(&0.0) {
                return 0.0;
            }
            match kernel_from_gaps(params, 0.0, 1.0, m, &gaps, &inner) {
                Ok(q) => jac * q.value * q.value,
                Err(Error::ToleranceNotReached { value, .. }) => jac * value * value,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        });
        if let Some(e) = failure.take() {
            return Err(e);
        }
        if se <= opts.qmc_rel_tol * mean.abs() || pts >= opts.qmc_points << 6 {
            if se > opts.qmc_rel_tol * mean.abs() {
                return Err(Error::ToleranceNotReached {
                    value: mean,
                    error: se,
                    target: opts.qmc_rel_tol * mean.abs(),
                });
            }
            return Ok((mean, se, pts));
        }
        pts *= 4;
    }
}

/// ∫_{lo}^{1} a(y)² dy for rank 1, with the kernel integral nested inside
/// an adaptive outer rule.
fn nested_moment(params: &HermiteParams, lo: f64, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    let inner = cfg.with_tol(cfg.abs_tol * 1e-3);
    let mut breaks = vec![1.0, 0.0];
    let mut d = 1.0;
    while 1.0 - d > lo {
        breaks.push(1.0 - d);
        d *= 2.0;
    }
    let mut e = 0.5;
    while e > 1e-12 {
        breaks.push(1.0 - e);
        breaks.push(-e);
        e *= 0.25;
    }
    breaks.push(lo);
    breaks.retain(|&b| b >= lo && b <= 1.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut fail = None;
    let q = adaptive_gk(
        |y| match kernel_time_integral(params, 0.0, 1.0, &[y], &inner) {
            Ok(q) => q.value * q.value,
            Err(e) => {
                fail.get_or_insert(e);
                0.0
            }
        },
        &breaks,
        cfg.abs_tol,
        cfg.max_depth,
        50_000,
    );
    if let Some(e) = fail {
        return Err(e);
    }
    if q.error > cfg.abs_tol * q.value.max(1.0) {
        return Err(Error::ToleranceNotReached { value: q.value, error: q.error, target: cfg.abs_tol });
    }
    Ok((q.value, q.error))
}

fn resolve_method(params: &HermiteParams, opts: &ConstantOptions) -> Result<ConstantMethod> {
    let m = opts.method.unwrap_or_else(|| ConstantMethod::default_for(params.rank()));
    if m == ConstantMethod::Nested && params.rank() != 1 {
        return Err(Error::InvalidParams("nested quadrature is only available for rank 1".into()));
    }
    Ok(m)
}

/// c̃ = (∫_{[−1,1]^N} a(y)² dy)^{1/2}.
pub fn compute_tilde_c(params: &HermiteParams, cfg: &QuadratureConfig) -> Result<ConstantReport> {
    compute_tilde_c_with(params, cfg, &ConstantOptions::default())
}

pub fn compute_tilde_c_with(
    params: &HermiteParams,
    cfg: &QuadratureConfig,
    opts: &ConstantOptions,
) -> Result<ConstantReport> {
    cfg.validate()?;
    let method = resolve_method(params, opts)?;
    let mut meta = BTreeMap::new();
    let (sq, sq_err) = match method {
        ConstantMethod::Tensor => {
            let (v, e, pts) = tensor_moment(params, 0.0, 1.0, -1.0, 1.0, cfg)?;
            meta.insert("rule_points".into(), json!(pts));
            (v, e)
        }
        ConstantMethod::Nested => nested_moment(params, -1.0, cfg)?,
        ConstantMethod::QuasiMonteCarlo => {
            let (v, e, pts) = qmc_moment(params, -1.0, cfg, opts)?;
            meta.insert("qmc_points_per_shift".into(), json!(pts));
            meta.insert("qmc_shifts".into(), json!(opts.qmc_shifts));
            meta.insert("qmc_seed".into(), json!(opts.qmc_seed));
            (v, e)
        }
    };
    let value = sq.sqrt();
    Ok(ConstantReport {
        name: "tilde_c".into(),
        params: *params,
        value,
        error: 0.5 * sq_err / value,
        method,
        metadata: meta,
    })
}

/// Rank-k constant at the same H for k < N, used by the tail and Δ̆ bounds;
/// the rank-0 value is 1.
fn lower_rank_constant(params: &HermiteParams, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    match params.lower_rank() {
        None => Ok((1.0, 0.0)),
        Some(lower) => {
            let (v, e, _) = tensor_moment(&lower, 0.0, 1.0, f64::NEG_INFINITY, 1.0, cfg)?;
            let f = factorial(lower.rank());
            Ok((f * v, f * e))
        }
    }
}

/// Bound on the part of N!∫ a² with some coordinate below −T:
/// N² c_{N−1,H} T^{2H−2}/(2−2H).
pub fn truncation_tail_bound(params: &HermiteParams, c_lower: f64, t_cut: f64) -> f64 {
    let n = params.rank() as f64;
    let h = params.hurst();
    n * n * c_lower * t_cut.powf(2.0 * h - 2.0) / (2.0 - 2.0 * h)
}

/// Smallest T with tail bound ≤ `target`.
pub fn truncation_for(params: &HermiteParams, c_lower: f64, target: f64) -> f64 {
    let n = params.rank() as f64;
    let h = params.hurst();
    (n * n * c_lower / ((2.0 - 2.0 * h) * target)).powf(1.0 / (2.0 - 2.0 * h))
}

/// c_{N,H} = E X(1)² = N! ∫_{R^N} a(y)² dy.
pub fn compute_c_nh(params: &HermiteParams, cfg: &QuadratureConfig) -> Result<ConstantReport> {
    compute_c_nh_with(params, cfg, &ConstantOptions::default())
}

pub fn compute_c_nh_with(
    params: &HermiteParams,
    cfg: &QuadratureConfig,
    opts: &ConstantOptions,
) -> Result<ConstantReport> {
    cfg.validate()?;
    let method = resolve_method(params, opts)?;
    let fact = factorial(params.rank());
    let mut meta = BTreeMap::new();
    let (value, error) = match method {
        ConstantMethod::Tensor => {
            // The x-integral is exact over the whole half-line: no truncation.
            let (v, e, pts) = tensor_moment(params, 0.0, 1.0, f64::NEG_INFINITY, 1.0, cfg)?;
            meta.insert("rule_points".into(), json!(pts));
            meta.insert("truncation".into(), json!(null));
            (fact * v, fact * e)
        }
        ConstantMethod::Nested | ConstantMethod::QuasiMonteCarlo => {
            let (c_lower, _) = lower_rank_constant(params, cfg)?;
            let target = if method == ConstantMethod::Nested {
                cfg.abs_tol
            } else {
                // a rough scale for c_{N,H} keeps the tail far below the QMC error
                1e-3 * opts.qmc_rel_tol * c_lower
            };
            let t_cut = truncation_for(params, c_lower, target);
            let tail = truncation_tail_bound(params, c_lower, t_cut);
            meta.insert("truncation".into(), json!(t_cut));
            meta.insert("tail_bound".into(), json!(tail));
            let (v, e) = if method == ConstantMethod::Nested {
                nested_moment(params, -t_cut, cfg)?
            } else {
                let (v, e, pts) = qmc_moment(params, -t_cut, cfg, opts)?;
                meta.insert("qmc_points_per_shift".into(), json!(pts));
                meta.insert("qmc_shifts".into(), json!(opts.qmc_shifts));
                meta.insert("qmc_seed".into(), json!(opts.qmc_seed));
                (v, e)
            };
            (fact * v, fact * e + tail)
        }
    };
    Ok(ConstantReport {
        name: "c_nh".into(),
        params: *params,
        value,
        error,
        method,
        metadata: meta,
    })
}

/// E |X(t1) − X(t0)|² computed directly on the window, for checking the
/// scaling law against c_{N,H}.
pub fn increment_second_moment(
    params: &HermiteParams,
    t0: f64,
    t1: f64,
    cfg: &QuadratureConfig,
) -> Result<ConstantReport> {
    if !(t0 < t1) {
        return Err(Error::InvalidInterval { a: t0, b: t1 });
    }
    let (v, e, pts) = tensor_moment(params, t0, t1, f64::NEG_INFINITY, t1, cfg)?;
    let fact = factorial(params.rank());
    let mut meta = BTreeMap::new();
    meta.insert("rule_points".into(), json!(pts));
    meta.insert("t0".into(), json!(t0));
    meta.insert("t1".into(), json!(t1));
    Ok(ConstantReport {
        name: "increment_second_moment".into(),
        params: *params,
        value: fact * v,
        error: fact * e,
        method: ConstantMethod::Tensor,
        metadata: meta,
    })
}

/// E Δ̃(j, l e_j)² = N! 2^{−2jγ} ∫_{[1−e_j,1]^N} a(y)² dy.
pub fn tilde_l2_exact(
    params: &HermiteParams,
    j: u32,
    e_j: u64,
    cfg: &QuadratureConfig,
) -> Result<ConstantReport> {
    if e_j < 2 {
        return Err(Error::InvalidParams(format!("e_j = {e_j} < 2")));
    }
    cfg.validate()?;
    let (v, e, pts) = tensor_moment(params, 0.0, 1.0, 1.0 - e_j as f64, 1.0, cfg)?;
    let scale = factorial(params.rank()) * 2f64.powf(-2.0 * j as f64 * params.gamma());
    let mut meta = BTreeMap::new();
    meta.insert("j".into(), json!(j));
    meta.insert("e_j".into(), json!(e_j));
    meta.insert("rule_points".into(), json!(pts));
    Ok(ConstantReport {
        name: "tilde_l2_exact".into(),
        params: *params,
        value: scale * v,
        error: scale * e,
        method: ConstantMethod::Tensor,
        metadata: meta,
    })
}

/// (N² c_{N−1,H}/(2−2H))^{1/2} (e_j − 1)^{H−1} 2^{−jγ}, the bound on the
/// L² norm of Δ̆ assembled from the one-coordinate-far-away tail estimate.
pub fn breve_l2_bound(params: &HermiteParams, j: u32, e_j: u64) -> Result<ConstantReport> {
    if params.rank() < 2 {
        return Err(Error::InvalidParams("the bound needs rank >= 2".into()));
    }
    if e_j < 2 {
        return Err(Error::InvalidParams(format!("e_j = {e_j} < 2")));
    }
    let cfg = QuadratureConfig::default().with_tol(1e-10);
    let (c_lower, c_err) = lower_rank_constant(params, &cfg)?;
    let n = params.rank() as f64;
    let h = params.hurst();
    let shape = (e_j as f64 - 1.0).powf(h - 1.0) * 2f64.powf(-(j as f64) * params.gamma());
    let value = (n * n * c_lower / (2.0 - 2.0 * h)).sqrt() * shape;
    let error = 0.5 * value * c_err / c_lower;
    let mut meta = BTreeMap::new();
    meta.insert("j".into(), json!(j));
    meta.insert("e_j".into(), json!(e_j));
    meta.insert("c_lower_rank".into(), json!(c_lower));
    Ok(ConstantReport {
        name: "breve_l2_bound".into(),
        params: *params,
        value,
        error,
        method: ConstantMethod::Tensor,
        metadata: meta,
    })
}
