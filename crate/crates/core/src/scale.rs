//! Scale functions S controlling the block spacing e_j = ⌊S(j)⌋, and
//! finite-range admissibility diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::HermiteParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ScaleFunction {
    /// (2 + z)^exponent · (log₂(3 + z))^beta.
    PowerLog { exponent: f64, beta: f64 },
    /// Piecewise-linear interpolation of (z, S) pairs, z increasing.
    Tabulated { z: Vec<f64>, s: Vec<f64> },
    Constant { value: f64 },
    /// scale · 2^{rate·z}.
    Exponential { scale: f64, rate: f64 },
}

impl ScaleFunction {
    /// The power-log family with the critical exponent N/(2(1−H)).
    pub fn default_for(params: &HermiteParams, beta: f64) -> Self {
        ScaleFunction::PowerLog { exponent: critical_exponent(params), beta }
    }

    pub fn constant(value: f64) -> Self {
        ScaleFunction::Constant { value }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScaleFunction::PowerLog { exponent, beta } => {
                if !(*exponent >= 0.0 && *beta >= 0.0) {
                    return Err(Error::InvalidParams(format!("power-log S: exponent {exponent}, beta {beta}")));
                }
            }
            ScaleFunction::Tabulated { z, s } => {
                if z.len() < 2 || z.len() != s.len() || z[0] != 0.0 {
                    return Err(Error::InvalidParams("tabulated S needs matching (z, S) columns starting at z = 0".into()));
                }
                if let Some(w) = z.windows(2).find(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidParams(format!("tabulated z not increasing at {}", w[1])));
                }
                if let Some(i) = (1..s.len()).find(|&i| s[i] < s[i - 1]) {
                    return Err(Error::NonMonotone(z[i]));
                }
            }
            ScaleFunction::Constant { .. } => {}
            ScaleFunction::Exponential { scale, rate } => {
                if !(*scale > 0.0 && *rate >= 0.0) {
                    return Err(Error::InvalidParams(format!("exponential S: scale {scale}, rate {rate}")));
                }
            }
        }
        let s0 = self.eval(0.0)?;
        if !(s0 >= 2.0) {
            return Err(Error::InvalidParams(format!("S(0) = {s0} < 2")));
        }
        Ok(())
    }

    /// ln S(z), evaluated without forming S where it could overflow.
    pub fn ln_eval(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::OutOfRange(format!("S evaluated at z = {z}")));
        }
        Ok(match self {
            ScaleFunction::PowerLog { exponent, beta } => {
                exponent * (2.0 + z).ln() + beta * (3.0 + z).log2().ln()
            }
            ScaleFunction::Tabulated { z: zs, s } => {
                let last = *zs.last().unwrap();
                if z > last {
                    return Err(Error::OutOfRange(format!("z = {z} beyond table end {last}")));
                }
                let i = zs.partition_point(|&v| v <= z).clamp(1, zs.len() - 1);
                let t = (z - zs[i - 1]) / (zs[i] - zs[i - 1]);
                (s[i - 1] + t * (s[i] - s[i - 1])).ln()
            }
            ScaleFunction::Constant { value } => value.ln(),
            ScaleFunction::Exponential { scale, rate } => scale.ln() + rate * z * std::f64::consts::LN_2,
        })
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        Ok(self.ln_eval(z)?.exp())
    }
}

/// N/(2(1−H)).
pub fn critical_exponent(params: &HermiteParams) -> f64 {
    params.rank() as f64 / (2.0 * (1.0 - params.hurst()))
}

/// e_j = ⌊S(j)⌋.
pub fn e_of_j(s: &ScaleFunction, j: u32) -> Result<u64> {
    let v = s.eval(j as f64)?;
    if !(v.is_finite() && v < 1.8e19) {
        return Err(Error::OutOfRange(format!("S({j}) = {v} does not fit an integer")));
    }
    Ok(v.floor() as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckVerdict {
    pub parameter: f64,
    pub pass: bool,
    /// Ratio values at the start and end of the final quarter of the grid.
    pub tail_start: f64,
    pub tail_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub z_lo: f64,
    pub z_hi: f64,
    pub exponent: f64,
    /// z^p / S(z) decays over the final quarter of the range.
    pub decay: CheckVerdict,
    /// z^{p+ε} / S(z) grows over the final quarter, per ε.
    pub divergence: Vec<CheckVerdict>,
    /// S(z + α log₂(2+z)) / S(z) does not rise above its earlier maximum, per α.
    pub shift: Vec<CheckVerdict>,
    pub all_pass: bool,
}

const GRID_POINTS: usize = 400;

/// Trend checks on a log-spaced grid over [z_lo, z_hi]. The verdicts are
/// finite-range evidence only.
pub fn check_admissibility(
    s: &ScaleFunction,
    params: &HermiteParams,
    z_lo: f64,
    z_hi: f64,
    epsilons: &[f64],
    alphas: &[f64],
) -> Result<AdmissibilityReport> {
    if !(z_lo > 0.0 && z_hi > z_lo && z_hi.is_finite()) {
        return Err(Error::InvalidParams(format!("z range [{z_lo}, {z_hi}]")));
    }
    s.validate()?;
    let p = critical_exponent(params);
    let zs: Vec<f64> = (0..GRID_POINTS)
        .map(|i| (z_lo.ln() + (z_hi / z_lo).ln() * i as f64 / (GRID_POINTS - 1) as f64).exp())
        .collect();
    let ln_s = zs.iter().map(|&z| s.ln_eval(z)).collect::<Result<Vec<f64>>>()?;
    if let Some(i) = (1..zs.len()).find(|&i| ln_s[i] < ln_s[i - 1] - 1e-12) {
        return Err(Error::NonMonotone(zs[i]));
    }
    let q = GRID_POINTS * 3 / 4;

    // Ratios are handled in log space. A trend passes when the final quarter
    // shows the expected net change and the final tenth is monotone.
    let t = GRID_POINTS * 9 / 10;
    let trend = |vals: &[f64], parameter: f64, growing: bool| -> CheckVerdict {
        let tol = 1e-12;
        let monotone = vals[t..]
            .windows(2)
            .all(|w| if growing { w[1] >= w[0] - tol } else { w[1] <= w[0] + tol });
        let (a, b) = (vals[q], vals[vals.len() - 1]);
        let net = if growing { b > a } else { b < a };
        CheckVerdict { parameter, pass: monotone && net, tail_start: a.exp(), tail_end: b.exp() }
    };

    let decay_vals: Vec<f64> = zs.iter().zip(&ln_s).map(|(z, ls)| p * z.ln() - ls).collect();
    let decay = trend(&decay_vals, 0.0, false);

    let divergence: Vec<CheckVerdict> = epsilons
        .iter()
        .map(|&eps| {
            let v: Vec<f64> = zs.iter().zip(&ln_s).map(|(z, ls)| (p + eps) * z.ln() - ls).collect();
            trend(&v, eps, true)
        })
        .collect();

    let mut shift = Vec::new();
    for &a in alphas {
        let v = zs
            .iter()
            .zip(&ln_s)
            .map(|(&z, &ls)| Ok(s.ln_eval(z + a * (2.0 + z).log2())? - ls))
            .collect::<Result<Vec<f64>>>()?;
        let early = v[..q].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let late = v[q..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        shift.push(CheckVerdict {
            parameter: a,
            pass: late <= early + 1e-12,
            tail_start: v[q].exp(),
            tail_end: v[v.len() - 1].exp(),
        });
    }

    let all_pass = decay.pass
        && divergence.iter().all(|c: &CheckVerdict| c.pass)
        && shift.iter().all(|c| c.pass);
    Ok(AdmissibilityReport { z_lo, z_hi, exponent: p, decay, divergence, shift, all_pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p28() -> HermiteParams {
        HermiteParams::new(2, 0.8).unwrap()
    }

    #[test]
    fn default_scale_at_zero() {
        let s = ScaleFunction::default_for(&p28(), 1.0);
        // 2^5 · log₂ 3
        assert!((s.eval(0.0).unwrap() - 32.0 * 3f64.log2()).abs() < 1e-12);
        assert_eq!(e_of_j(&s, 0).unwrap(), 50);
        assert_eq!(e_of_j(&ScaleFunction::constant(2.0), 17).unwrap(), 2);
    }

    #[test]
    fn default_scale_is_admissible() {
        for beta in [0.1, 1.0, 3.0] {
            let s = ScaleFunction::default_for(&p28(), beta);
            let r = check_admissibility(&s, &p28(), 1.0, 1e6, &[0.25, 0.5, 1.0], &[1.0, 2.0, 4.0]).unwrap();
            assert!(r.all_pass, "beta {beta}: {r:?}");
        }
    }

    #[test]
    fn slow_and_fast_scales_fail() {
        let slow = ScaleFunction::PowerLog { exponent: 1.0, beta: 0.0 };
        let r = check_admissibility(&slow, &p28(), 1.0, 1e6, &[0.5], &[1.0, 2.0, 4.0]).unwrap();
        assert!(!r.decay.pass);
        let fast = ScaleFunction::Exponential { scale: 2.0, rate: 1.0 };
        let r = check_admissibility(&fast, &p28(), 1.0, 1e6, &[0.5], &[1.0, 2.0, 4.0]).unwrap();
        assert!(r.shift.iter().all(|c| !c.pass));
    }

    #[test]
    fn non_monotone_table_rejected() {
        let s = ScaleFunction::Tabulated { z: vec![0.0, 1.0, 2.0], s: vec![2.0, 5.0, 4.0] };
        assert!(matches!(s.validate(), Err(Error::NonMonotone(_))));
    }
}
