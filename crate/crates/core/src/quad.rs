//! Quadrature building blocks: Gauss-Legendre rules, graded composite rules,
//! adaptive Gauss-Kronrod, and a regularized incomplete beta function tuned
//! for repeated evaluation at fixed shape parameters.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use statrs::function::gamma::ln_gamma;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// A one-dimensional rule: nodes with weights.
#[derive(Debug, Clone, Default)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    fn push_panel(&mut self, gl: &(Vec<f64>, Vec<f64>), a: f64, b: f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in gl.0.iter().zip(&gl.1) {
            self.nodes.push(mid + half * x);
            self.weights.push(half * w);
        }
    }

    /// Panel touching an endpoint `e` with length `len`, mapped through
    /// t = e + sign*len*v^p so that power-type behaviour at `e` is smoothed.
    fn push_power_panel(&mut self, gl: &(Vec<f64>, Vec<f64>), e: f64, len: f64, sign: f64, p: f64) {
        for (x, w) in gl.0.iter().zip(&gl.1) {
            let v = 0.5 * (x + 1.0);
            let t = e + sign * len * v.powf(p);
            if t == e {
                // Rounded onto the endpoint; the weight there is negligible.
                continue;
            }
            self.nodes.push(t);
            self.weights.push(0.5 * w * len * p * v.powf(p - 1.0));
        }
    }
}

/// Geometric grading parameters for composite rules.
#[derive(Debug, Clone, Copy)]
pub struct Grading {
    /// Gauss points per panel.
    pub order: usize,
    /// Number of geometric levels.
    pub levels: usize,
    /// Ratio between successive panel lengths toward the graded end.
    pub ratio: f64,
    /// Power used on the innermost panel.
    pub power: f64,
}

impl Grading {
    /// One step finer in every direction, used for error estimates.
    pub fn refined(&self) -> Grading {
        Grading {
            order: self.order + 2,
            levels: self.levels + self.levels / 2 + 1,
            ratio: self.ratio,
            power: self.power,
        }
    }
}

/// Rule on [a, b] graded geometrically toward `a` (and toward `b` as well if
/// `both` is set).
pub fn graded_rule(a: f64, b: f64, g: &Grading, both: bool) -> Rule1d {
    let gl = gauss_legendre(g.order);
    let mut r = Rule1d::default();
    if b <= a {
        return r;
    }
    if both {
        let mid = 0.5 * (a + b);
        append_graded(&mut r, &gl, a, mid - a, g, 1.0);
        append_graded(&mut r, &gl, b, b - mid, g, -1.0);
    } else {
        append_graded(&mut r, &gl, a, b - a, g, 1.0);
    }
    r
}

fn append_graded(r: &mut Rule1d, gl: &(Vec<f64>, Vec<f64>), e: f64, len: f64, g: &Grading, sign: f64) {
    let mut outer = len;
    for _ in 0..g.levels {
        let inner = outer * g.ratio;
        let (p, q) = (e + sign * inner, e + sign * outer);
        r.push_panel(gl, p.min(q), p.max(q));
        outer = inner;
    }
    r.push_power_panel(gl, e, outer, sign, g.power);
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive 15-point Gauss-Kronrod over consecutive `breaks`.
/// Segments are bisected (largest error first) until the summed error is
/// below `abs_tol`, the depth limit stops every remaining split, or
/// `max_segments` is reached.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(
    f: F,
    breaks: &[f64],
    abs_tol: f64,
    max_depth: u32,
    max_segments: usize,
) -> QuadEstimate {
    adaptive_gk_scaled(f, breaks, abs_tol, 0.0, max_depth, max_segments)
}

/// As `adaptive_gk`, with target max(abs_tol, rel_tol·|value|).
pub fn adaptive_gk_scaled<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_depth: u32,
    max_segments: usize,
) -> QuadEstimate {
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    let mut done_value = 0.0;
    let mut done_error = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (v, e) = kronrod15(&mut f, w[0], w[1]);
            evals += 15;
            heap.push(Segment { a: w[0], b: w[1], value: v, error: e, depth: 0 });
        }
    }
    let mut err: f64 = heap.iter().map(|s| s.error).sum();
    let mut val: f64 = heap.iter().map(|s| s.value).sum();
    loop {
        if err <= abs_tol.max(rel_tol * val.abs()) || heap.len() >= max_segments {
            break;
        }
        let Some(s) = heap.pop() else { break };
        if s.depth >= max_depth {
            done_value += s.value;
            done_error += s.error;
            continue;
        }
        let m = 0.5 * (s.a + s.b);
        let (v1, e1) = kronrod15(&mut f, s.a, m);
        let (v2, e2) = kronrod15(&mut f, m, s.b);
        evals += 30;
        err += e1 + e2 - s.error;
        val += v1 + v2 - s.value;
        heap.push(Segment { a: s.a, b: m, value: v1, error: e1, depth: s.depth + 1 });
        heap.push(Segment { a: m, b: s.b, value: v2, error: e2, depth: s.depth + 1 });
    }
    // Deterministic summation order: by left endpoint.
    let mut segs: Vec<Segment> = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segs.iter().map(|s| s.value).sum::<f64>() + done_value;
    let error = segs.iter().map(|s| s.error).sum::<f64>() + done_error;
    QuadEstimate { value, error, evaluations: evals }
}

/// Regularized incomplete beta I_x(a, b) for fixed (a, b).
#[derive(Debug, Clone, Copy)]
pub struct IncBeta {
    a: f64,
    b: f64,
    ln_beta: f64,
}

impl IncBeta {
    pub fn new(a: f64, b: f64) -> Self {
        assert!(a > 0.0 && b > 0.0);
        IncBeta { a, b, ln_beta: ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b) }
    }

    pub fn beta(&self) -> f64 {
        self.ln_beta.exp()
    }

    /// Continued fraction part; converges quickly for x < (a+1)/(a+b+2).
    fn cf(a: f64, b: f64, x: f64) -> f64 {
        const TINY: f64 = 1e-300;
        let qab = a + b;
        let qap = a + 1.0;
        let qam = a - 1.0;
        let mut c = 1.0;
        let mut d = 1.0 - qab * x / qap;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        let mut h = d;
        for m in 1..300 {
            let m = m as f64;
            let m2 = 2.0 * m;
            let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
            d = 1.0 + aa * d;
            if d.abs() < TINY {
                d = TINY;
            }
            c = 1.0 + aa / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            h *= d * c;
            let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
            d = 1.0 + aa * d;
            if d.abs() < TINY {
                d = TINY;
            }
            c = 1.0 + aa / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-15 {
                break;
            }
        }
        h
    }

    /// I_x(a, b) evaluated in its fast regime, with y = 1 - x passed exactly.
    fn direct(&self, a: f64, b: f64, x: f64, y: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let front = (a * x.ln() + b * y.ln() - self.ln_beta).exp() / a;
        front * Self::cf(a, b, x)
    }

    fn switch_point(&self) -> f64 {
        (self.a + 1.0) / (self.a + self.b + 2.0)
    }

    /// I_x(a, b) with y = 1 - x supplied separately.
    pub fn lower(&self, x: f64, y: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if y <= 0.0 {
            1.0
        } else if x < self.switch_point() {
            self.direct(self.a, self.b, x, y)
        } else {
            1.0 - self.direct(self.b, self.a, y, x)
        }
    }

    /// 1 - I_x(a, b) computed without cancellation when it is small.
    pub fn upper(&self, x: f64, y: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else if y <= 0.0 {
            0.0
        } else if x < self.switch_point() {
            1.0 - self.direct(self.a, self.b, x, y)
        } else {
            self.direct(self.b, self.a, y, x)
        }
    }

    /// I_{x0} - I_{x1} for x0 >= x1, given in the ratio form x = z/(1+z).
    /// `z0` may be infinite.
    pub fn diff_z(&self, z0: f64, z1: f64) -> f64 {
        let (x0, y0) = ratio_pair(z0);
        let (x1, y1) = ratio_pair(z1);
        let s = self.switch_point();
        if x1 >= s {
            self.upper(x1, y1) - self.upper(x0, y0)
        } else if x0 < s {
            self.lower(x0, y0) - self.lower(x1, y1)
        } else {
            self.upper(x1, y1) - self.upper(x0, y0)
        }
    }
}

fn ratio_pair(z: f64) -> (f64, f64) {
    if z.is_infinite() {
        (1.0, 0.0)
    } else if z <= 0.0 {
        (0.0, 1.0)
    } else {
        let y = 1.0 / (1.0 + z);
        (z * y, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((s - exact).abs() < 1e-13, "n={n} deg={deg} {s} {exact}");
            }
        }
    }

    #[test]
    fn graded_rule_handles_endpoint_power() {
        let g = Grading { order: 8, levels: 18, ratio: 0.3, power: 20.0 };
        let r = graded_rule(0.0, 1.0, &g, true);
        let v = r.integrate(|t| t.powf(-0.9) + (1.0 - t).powf(-0.5));
        assert!((v - 12.0).abs() < 1e-7, "{v}");
        // Offset interval; the singularity is milder since float spacing
        // near 2 cannot resolve t^{-0.9} mass below 1e-16.
        let r = graded_rule(2.0, 3.0, &g, true);
        let v = r.integrate(|t| (t - 2.0).powf(-0.5) + (3.0 - t).powf(-0.5));
        assert!((v - 4.0).abs() < 1e-7, "{v}");
        assert!(r.nodes.iter().all(|&t| t > 2.0 && t < 3.0));
    }

    #[test]
    fn adaptive_gk_sqrt_singularity() {
        let q = adaptive_gk(|x: f64| 1.0 / x.sqrt(), &[0.0, 1.0], 1e-10, 60, 1000);
        assert!((q.value - 2.0).abs() < 1e-9, "{q:?}");
    }

    #[test]
    fn incomplete_beta_against_statrs() {
        for &(a, b) in &[(0.3, 0.4), (0.25, 0.5), (0.4, 0.2), (2.0, 3.0)] {
            let ib = IncBeta::new(a, b);
            for i in 1..40 {
                let x = i as f64 / 40.0;
                let want = statrs::function::beta::beta_reg(a, b, x);
                let got = ib.lower(x, 1.0 - x);
                assert!((got - want).abs() < 1e-12, "a={a} b={b} x={x}: {got} vs {want}");
                assert!((ib.upper(x, 1.0 - x) - (1.0 - want)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn diff_z_consistent() {
        let ib = IncBeta::new(0.3, 0.4);
        let z0 = 1e12;
        let z1 = 1e11;
        let d = ib.diff_z(z0, z1);
        // tail of I near 1 behaves like (1/z)^b / (b B)
        let approx = (z1.powf(-0.4) - z0.powf(-0.4)) / (0.4 * ib.beta());
        assert!((d / approx - 1.0).abs() < 1e-3, "{d} {approx}");
        assert!((ib.diff_z(f64::INFINITY, 0.0) - 1.0).abs() < 1e-15);
    }
}
