//! Oscillation of sample paths, its normalizations, and pointwise
//! regularity estimates.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{block_partition, locate_block, path_block_suprema};
use crate::error::{Error, Result};
use crate::hermite::HermiteParams;
use crate::path::ChaosPath;
use crate::scale::{e_of_j, ScaleFunction};

/// Index range of grid points inside [t_lo, t_hi].
fn window(path: &ChaosPath, t_lo: f64, t_hi: f64) -> Result<(usize, usize)> {
    let span = path.span();
    let eps = 1e-9;
    if t_lo < -eps || t_hi > span + eps || !(t_lo <= t_hi) {
        return Err(Error::WindowOutsidePath { lo: t_lo, hi: t_hi, span });
    }
    let spu = path.steps_per_unit() as f64;
    let a = ((t_lo * spu) - eps).ceil().max(0.0) as usize;
    let b = (((t_hi * spu) + eps).floor() as usize).min(path.len() - 1);
    if b < a + 1 {
        return Err(Error::TooFewPoints(b + 1 - a.min(b + 1)));
    }
    Ok((a, b))
}

/// Osc(X, τ, r): max − min of the path over the grid points of [τ−r, τ+r].
pub fn oscillation(path: &ChaosPath, tau: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::OutOfRange(format!("radius {r}")));
    }
    let (a, b) = window(path, tau - r, tau + r)?;
    let v = &path.values()[a..=b];
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(hi - lo)
}

fn check_radius(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 0.5) {
        return Err(Error::OutOfRange(format!("r = {r} outside (0, 1/2)")));
    }
    Ok(-r.log2())
}

/// (r^{−1} |log₂ r| S(|log₂ r|))^{N(H−1)+1}.
pub fn lower_rate(r: f64, params: &HermiteParams, s: &ScaleFunction) -> Result<f64> {
    let z = check_radius(r)?;
    let ln = -r.ln() + z.ln() + s.ln_eval(z)?;
    Ok((params.gamma() * ln).exp())
}

/// r^{−N(H−1)−1} |log₂ r|^{−N/2}.
pub fn upper_rate(r: f64, params: &HermiteParams) -> Result<f64> {
    let z = check_radius(r)?;
    Ok(r.powf(-params.gamma()) * z.powf(-(params.rank() as f64) / 2.0))
}

/// Radius 3 n₀ j S(j) / 2^j of the block argument.
pub fn block_radius(j: u32, n0: u64, s: &ScaleFunction) -> Result<f64> {
    Ok(3.0 * n0 as f64 * j as f64 * s.eval(j as f64)? / (1u64 << j) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub tau: f64,
    pub j: u32,
    pub r: f64,
    pub osc: f64,
    /// osc · lower_rate(r); NaN when r ≥ 1/2.
    pub lower_normalized: f64,
    /// osc · upper_rate(r); NaN when r ≥ 1/2.
    pub upper_normalized: f64,
    /// 2^{j(N(H−1)+1)} · osc.
    pub floor_normalized: f64,
    /// Λ_{m_j(τ)}^j when the block partition exists at this j.
    pub block_floor: Option<f64>,
    /// Whether j passes the partition threshold 2^j/e_j − 2 ≥ 10 n₀ j.
    pub strict_admissible: bool,
}

impl ScanRow {
    pub fn dominates(&self) -> Option<bool> {
        self.block_floor.map(|b| self.osc >= b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationScan {
    pub origin: f64,
    pub n0: u64,
    pub rows: Vec<ScanRow>,
}

impl OscillationScan {
    pub const CSV_HEADER: &'static str =
        "tau,j,r,osc,lower_normalized,upper_normalized,block_floor,floor_normalized,strict_admissible";

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            let bf = r.block_floor.map(|v| format!("{v:e}")).unwrap_or_default();
            writeln!(
                w,
                "{},{},{:e},{:e},{:e},{:e},{},{:e},{}",
                r.tau, r.j, r.r, r.osc, r.lower_normalized, r.upper_normalized, bf, r.floor_normalized, r.strict_admissible
            )?;
        }
        Ok(())
    }

    pub fn rows_at(&self, j: u32) -> impl Iterator<Item = &ScanRow> {
        self.rows.iter().filter(move |r| r.j == j)
    }

    /// Every row with a block floor satisfies Osc ≥ Λ.
    pub fn window_domination_holds(&self) -> bool {
        self.rows.iter().all(|r| r.dominates() != Some(false))
    }
}

/// Oscillations at the block radius for every (τ, j); τ is measured from
/// `origin` on the path's time axis.
pub fn scan_oscillations(
    path: &ChaosPath,
    origin: f64,
    taus: &[f64],
    js: std::ops::RangeInclusive<u32>,
    s: &ScaleFunction,
    n0: u64,
) -> Result<OscillationScan> {
    let params = path.params;
    let max_j = *js.end();
    if max_j >= 64 || path.steps_per_unit() % (1u64 << max_j) != 0 {
        return Err(Error::GridMismatch(format!(
            "resolution insufficient: {} steps per unit, level {max_j} needed",
            path.steps_per_unit()
        )));
    }
    let cells: Vec<(usize, u32)> = taus.iter().enumerate().flat_map(|(i, _)| js.clone().map(move |j| (i, j))).collect();
    let rows = cells
        .par_iter()
        .map(|&(i, j)| {
            let tau = taus[i];
            let r = block_radius(j, n0, s)?;
            let osc = oscillation(path, origin + tau, r)?;
            let lower = lower_rate(r, &params, s).map(|v| v * osc).unwrap_or(f64::NAN);
            let upper = upper_rate(r, &params).map(|v| v * osc).unwrap_or(f64::NAN);
            let floor = (j as f64 * params.gamma()).exp2() * osc;
            let e_j = e_of_j(s, j)?;
            let (block_floor, strict) = match block_partition(j, e_j, n0) {
                Ok(bp) => match locate_block(tau, &bp) {
                    Ok((_, m)) => (Some(path_block_suprema(path, origin, &bp)?[m - 1]), true),
                    Err(_) => (None, true),
                },
                Err(_) => (None, false),
            };
            Ok(ScanRow {
                tau,
                j,
                r,
                osc,
                lower_normalized: lower,
                upper_normalized: upper,
                floor_normalized: floor,
                block_floor,
                strict_admissible: strict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OscillationScan { origin, n0, rows })
}

/// ν(r) = r / (6 n₀ (−log₂ r) S(−log₂ r)) and the grid estimate of
/// θ₀ = sup_r (−log₂ ν) S(−log₂ ν) / ((−log₂ r) S(−log₂ r)) over r ∈ [r_min, 1/2].
pub fn nu_and_theta(r: f64, n0: u64, s: &ScaleFunction, r_min: f64) -> Result<(f64, f64)> {
    if !(r > 0.0 && r <= 0.5) || !(r_min > 0.0 && r_min < 0.5) {
        return Err(Error::OutOfRange(format!("r = {r}, r_min = {r_min}")));
    }
    let nu_of = |r: f64| -> Result<f64> {
        let z = -r.log2();
        Ok(r / (6.0 * n0 as f64 * z * s.eval(z)?))
    };
    let points = 200;
    let mut theta: f64 = 0.0;
    for i in 0..=points {
        let rr = (0.5f64.ln() + (r_min / 0.5).ln() * i as f64 / points as f64).exp();
        let z = -rr.log2();
        let zn = -nu_of(rr)?.log2();
        let ratio = ((zn.ln() + s.ln_eval(zn)?) - (z.ln() + s.ln_eval(z)?)).exp();
        theta = theta.max(ratio);
    }
    Ok((nu_of(r)?, theta))
}

/// Least-squares slope of ln Osc(τ, r) against ln r.
pub fn holder_exponent_estimate(path: &ChaosPath, tau: f64, radii: &[f64]) -> Result<f64> {
    if radii.len() < 2 {
        return Err(Error::TooFewPoints(radii.len()));
    }
    let (rmin, rmax) = radii.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    if rmax / rmin < 100.0 {
        return Err(Error::InvalidParams(format!("radius grid spans {:.2} decades, need 2", (rmax / rmin).log10())));
    }
    let mut xs = Vec::with_capacity(radii.len());
    let mut ys = Vec::with_capacity(radii.len());
    for &r in radii {
        let o = oscillation(path, tau, r)?;
        if !(o > 0.0) {
            return Err(Error::Degenerate(format!("zero oscillation at r = {r}")));
        }
        xs.push(r.ln());
        ys.push(o.ln());
    }
    Ok(ls_slope(&xs, &ys))
}

pub(crate) fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// max over grid points t of |X(t) − X(τ)| / |t − τ|^μ on the annulus
/// r/2 < |t − τ| ≤ r; τ is moved to the nearest grid point. Maxima over
/// nested windows could never grow as r shrinks, so the blow-up of the
/// quotient is probed one dyadic shell at a time.
pub fn holder_quotient_max(path: &ChaosPath, tau: f64, mu: f64, r: f64) -> Result<f64> {
    let (a, b) = window(path, tau - r, tau + r)?;
    let spu = path.steps_per_unit() as f64;
    let c = ((tau * spu).round() as usize).clamp(a, b);
    let xc = path.values()[c];
    let tc = path.time(c);
    let mut best: f64 = 0.0;
    let mut seen = 0;
    for i in a..=b {
        let d = (path.time(i) - tc).abs();
        if d > 0.5 * r && d <= r {
            best = best.max((path.values()[i] - xc).abs() / d.powf(mu));
            seen += 1;
        }
    }
    if seen == 0 {
        return Err(Error::TooFewPoints(0));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear() -> ChaosPath {
        ChaosPath::from_fn(HermiteParams::new(2, 0.8).unwrap(), 1024, 1024, |t| t).unwrap()
    }

    #[test]
    fn oscillation_basics() {
        let p = linear();
        assert!((oscillation(&p, 0.5, 0.25).unwrap() - 0.5).abs() < 1e-12);
        let c = ChaosPath::from_fn(p.params, 64, 64, |_| 3.0).unwrap();
        assert_eq!(oscillation(&c, 0.5, 0.1).unwrap(), 0.0);
        assert!(matches!(oscillation(&p, 0.9, 0.2), Err(Error::WindowOutsidePath { .. })));
        assert!(matches!(oscillation(&p, 0.5, 1e-5), Err(Error::TooFewPoints(_))));
    }

    #[test]
    fn rates() {
        let p = HermiteParams::new(2, 0.8).unwrap();
        let s = ScaleFunction::constant(2.0);
        assert!((lower_rate(0.25, &p, &s).unwrap() - 16f64.powf(0.6)).abs() < 1e-12);
        assert!((upper_rate(0.25, &p).unwrap() - 0.2f64.exp2()).abs() < 1e-12);
        assert!(lower_rate(0.5, &p, &s).is_err());
    }

    #[test]
    fn nu_examples() {
        let s = ScaleFunction::constant(2.0);
        let (nu, theta) = nu_and_theta(0.25, 2, &s, 1e-9).unwrap();
        assert!((nu - 1.0 / 192.0).abs() < 1e-15);
        assert!(theta.is_finite() && theta >= 1.0);
    }

    #[test]
    fn linear_path_has_exponent_one() {
        let p = linear();
        let radii: Vec<f64> = (0..8).map(|k| 0.25 / 2f64.powi(k)).collect();
        let h = holder_exponent_estimate(&p, 0.5, &radii).unwrap();
        assert!((h - 1.0).abs() < 0.02, "{h}");
    }
}
