//! Parameters of the Hermite process and the kernel time integral
//! ∫_a^b ∏_p (s − x_p)_+^{H−3/2} ds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{adaptive_gk_scaled, QuadEstimate};

/// Rank N and Hurst index H, with the derived exponents cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct HermiteParams {
    rank: u32,
    hurst: f64,
    alpha: f64,
    gamma: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    rank: u32,
    hurst: f64,
}

impl TryFrom<RawParams> for HermiteParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        HermiteParams::new(r.rank, r.hurst)
    }
}

impl From<HermiteParams> for RawParams {
    fn from(p: HermiteParams) -> Self {
        RawParams { rank: p.rank, hurst: p.hurst }
    }
}

impl HermiteParams {
    pub fn new(rank: u32, hurst: f64) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidParams("rank must be at least 1".into()));
        }
        let lo = 1.0 - 1.0 / (2.0 * rank as f64);
        if !(hurst > lo && hurst < 1.0) {
            return Err(Error::InvalidParams(format!(
                "H = {hurst} outside ({lo}, 1) for rank {rank}"
            )));
        }
        Ok(Self::unchecked(rank, hurst))
    }

    /// Builds the pair without the process-validity check. Used for kernel
    /// integrals at a lower rank, which stay finite whenever 1/2 < H < 1.
    pub(crate) fn unchecked(rank: u32, hurst: f64) -> Self {
        HermiteParams {
            rank,
            hurst,
            alpha: hurst - 1.5,
            gamma: rank as f64 * (hurst - 1.0) + 1.0,
        }
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    /// Kernel exponent H − 3/2.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Self-similarity exponent N(H−1)+1.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn var_exponent(&self) -> f64 {
        2.0 * self.gamma
    }

    /// Rank N−1 at the same H (may lie outside the process range).
    pub fn lower_rank(&self) -> Option<HermiteParams> {
        (self.rank > 1).then(|| HermiteParams::unchecked(self.rank - 1, self.hurst))
    }
}

/// (γ, 2γ).
pub fn derived_exponents(params: &HermiteParams) -> (f64, f64) {
    (params.gamma(), params.var_exponent())
}

/// y^alpha for y > 0, zero otherwise.
pub fn truncated_power(y: f64, alpha: f64) -> f64 {
    if y > 0.0 {
        y.powf(alpha)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Panels per graded level in composite rules; also the initial panel
    /// count of adaptive integration.
    pub base_panels: usize,
    /// Other singular points closer than this fraction of the interval to
    /// the integration range get their own breakpoint.
    pub split_tolerance: f64,
    /// Maximum bisection depth of adaptive integration.
    pub max_depth: u32,
    pub abs_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { base_panels: 4, split_tolerance: 0.5, max_depth: 60, abs_tol: 1e-10 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.base_panels < 1 || self.max_depth < 1 {
            return Err(Error::Config("quadrature counts must be >= 1".into()));
        }
        if !(self.split_tolerance > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Config("quadrature tolerances must be > 0".into()));
        }
        Ok(())
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self
    }
}

/// ∫_a^b ∏_p (s − x_p)_+^{H−3/2} ds.
///
/// The largest x_p = m is the only point where the integrand can blow up on
/// [a, b]; substituting w = (s − m)^{H−1/2} makes that factor constant, the
/// remaining factors are smooth in w away from their own (bounded) scales,
/// which become breakpoints.
pub fn kernel_time_integral(
    params: &HermiteParams,
    a: f64,
    b: f64,
    x: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadEstimate> {
    if !(a < b) {
        return Err(Error::InvalidInterval { a, b });
    }
    if x.len() != params.rank() as usize {
        return Err(Error::InvalidParams(format!(
            "point has {} coordinates, rank is {}",
            x.len(),
            params.rank()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParams("non-finite input".into()));
    }
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let top_count = x.iter().filter(|&&v| v == m).count();
    if top_count >= 2 && m >= a && m < b {
        return Err(Error::Divergent(format!(
            "{top_count} coordinates coincide at {m}, inside [{a}, {b}]"
        )));
    }
    let mut gaps: Vec<f64> = Vec::with_capacity(x.len());
    let mut skipped = false;
    for &v in x {
        if v == m && !skipped {
            skipped = true;
        } else {
            gaps.push(m - v);
        }
    }
    kernel_from_gaps(params, a, b, m, &gaps, cfg)
}

/// Same integral with the point given as its largest coordinate `m` and the
/// gaps m − x_p ≥ 0 of the other N − 1 coordinates. Gaps far below the
/// spacing of floats near m stay resolved this way.
pub fn kernel_from_gaps(
    params: &HermiteParams,
    a: f64,
    b: f64,
    m: f64,
    gaps: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadEstimate> {
    if !(a < b) {
        return Err(Error::InvalidInterval { a, b });
    }
    if gaps.len() + 1 != params.rank() as usize || gaps.iter().any(|&d| !(d >= 0.0)) {
        return Err(Error::InvalidParams(format!("bad gap vector {gaps:?}")));
    }
    let alpha = params.alpha();
    if m >= b {
        return Ok(QuadEstimate { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let lo = a.max(m);
    if m >= a && gaps.contains(&0.0) {
        return Err(Error::Divergent(format!("coordinates coincide at {m}, inside [{a}, {b}]")));
    }
    let len = b - lo;
    let n = cfg.base_panels.max(1);
    if lo - m > len {
        // Far from every singular point: integrate in s directly.
        let mut breaks: Vec<f64> = (0..=n).map(|i| lo + len * i as f64 / n as f64).collect();
        breaks[n] = b;
        let f = |s: f64| {
            let t = s - m;
            gaps.iter().fold(t.powf(alpha), |v, &d| v * (t + d).powf(alpha))
        };
        return finish(adaptive_gk_scaled(f, &breaks, cfg.abs_tol, cfg.abs_tol, cfg.max_depth, 20_000), cfg);
    }
    let kappa = 1.0 / (alpha + 1.0);
    let w_lo = (lo - m).powf(alpha + 1.0);
    let w_hi = (b - m).powf(alpha + 1.0);
    let mut breaks = vec![w_lo];
    for &d in gaps {
        let w = d.powf(alpha + 1.0);
        if w > w_lo && w < w_hi && d < cfg.split_tolerance * len {
            breaks.push(w);
        }
    }
    breaks.push(w_hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut refined = Vec::with_capacity(breaks.len() * n);
    for pair in breaks.windows(2) {
        for i in 0..n {
            refined.push(pair[0] + (pair[1] - pair[0]) * i as f64 / n as f64);
        }
    }
    refined.push(*breaks.last().unwrap());
    let f = |w: f64| {
        let t = w.powf(kappa);
        let mut v = kappa;
        for &d in gaps {
            v *= (d + t).powf(alpha);
        }
        v
    };
    finish(adaptive_gk_scaled(f, &refined, cfg.abs_tol, cfg.abs_tol, cfg.max_depth, 20_000), cfg)
}

/// The tolerance is absolute for values up to 1 and relative above.
fn finish(q: QuadEstimate, cfg: &QuadratureConfig) -> Result<QuadEstimate> {
    if q.error > cfg.abs_tol * q.value.abs().max(1.0) || !q.value.is_finite() {
        return Err(Error::ToleranceNotReached {
            value: q.value,
            error: q.error,
            target: cfg.abs_tol,
        });
    }
    Ok(q)
}
