//! Squared-kernel masses through the time-pair reduction.
//!
//! For a window W = [t0, t1] and noise cells c, the L² mass of the kernel
//! ∫_W ∏_p (s − x_p)_+^α ds over a product of cells factorizes after
//! expanding the square:
//!
//!   ∫_{c_1×…×c_N} (∫_W ∏ (s−x_p)_+^α ds)² dx = ∫∫_{W²} ∏_p G_{c_p}(s, u) ds du,
//!   G_c(s, u) = ∫_c (s−x)_+^α (u−x)_+^α dx,
//!
//! and G_c has a closed form through the incomplete beta function
//! B(H−1/2, 2−2H). The remaining two-dimensional integral is symmetric in
//! (s, u) and is integrated over u ∈ W, g = s − u ∈ (0, t1 − u) with rules
//! graded toward g = 0 and toward the kinks of G at cell edges.

use crate::hermite::HermiteParams;
use crate::quad::{graded_rule, Grading, IncBeta};

/// Closed-form pair overlap G_c.
#[derive(Debug, Clone, Copy)]
pub struct Overlap {
    /// 2α + 1 = 2H − 2.
    power: f64,
    beta: f64,
    ib: IncBeta,
}

impl Overlap {
    pub fn new(params: &HermiteParams) -> Self {
        let h = params.hurst();
        let ib = IncBeta::new(h - 0.5, 2.0 - 2.0 * h);
        Overlap { power: 2.0 * h - 2.0, beta: ib.beta(), ib }
    }

    /// G_c(u + g, u) for the cell [c0, c1], g > 0. `c0` may be −∞.
    pub fn eval(&self, c0: f64, c1: f64, u: f64, g: f64) -> f64 {
        if u <= c0 {
            return 0.0;
        }
        let top = c1.min(u);
        let z0 = (u - c0) / g;
        let z1 = (u - top) / g;
        g.powf(self.power) * self.beta * self.ib.diff_z(z0, z1)
    }

    /// ∫_{−∞}^{u} (u+g−x)^α (u−x)^α dx = B g^{2H−2}.
    pub fn full(&self, g: f64) -> f64 {
        self.beta * g.powf(self.power)
    }
}

/// Nodes (u, g) with weights for ∫∫_{W²} φ(s, u) ds du = 2∫_W ∫_0^{t1−u} φ(u+g, u) dg du,
/// the factor 2 folded into the weights.
#[derive(Debug, Clone, Default)]
pub struct PairRule {
    pub u: Vec<f64>,
    pub g: Vec<f64>,
    pub w: Vec<f64>,
}

impl PairRule {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Grading for the two directions of a pair rule.
#[derive(Debug, Clone, Copy)]
pub struct PairGrading {
    pub u: Grading,
    pub g: Grading,
}

impl PairGrading {
    /// Grading tuned to the exponents of (N, H): the innermost panels absorb
    /// the g^{2N(H−1)} blow-up on the diagonal.
    pub fn for_params(params: &HermiteParams, order: usize) -> Self {
        let beta = 2.0 * params.rank() as f64 * (params.hurst() - 1.0);
        let power = (3.0 / (1.0 + beta)).ceil().clamp(3.0, 60.0);
        PairGrading {
            u: Grading { order, levels: 10, ratio: 0.35, power },
            g: Grading { order, levels: 14, ratio: 0.35, power },
        }
    }

    /// Cheaper grading for the many-cell rules of the direct simulator.
    pub fn coarse(params: &HermiteParams) -> Self {
        let mut g = Self::for_params(params, 6);
        g.u.levels = 5;
        g.g.levels = 8;
        g.u.ratio = 0.25;
        g.g.ratio = 0.25;
        g
    }

    pub fn refined(&self) -> Self {
        PairGrading { u: self.u.refined(), g: self.g.refined() }
    }
}

/// Pair rule on [t0, t1]², with u-panels split at `breaks` (cell edges
/// strictly inside the window).
pub fn pair_rule(t0: f64, t1: f64, breaks: &[f64], grading: &PairGrading) -> PairRule {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&b| b > t0 && b < t1).collect();
    pts.push(t0);
    pts.push(t1);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut rule = PairRule::default();
    for panel in pts.windows(2) {
        let ur = graded_rule(panel[0], panel[1], &grading.u, true);
        for (&u, &wu) in ur.nodes.iter().zip(&ur.weights) {
            let len = t1 - u;
            if len <= 0.0 {
                continue;
            }
            let gr = graded_rule(0.0, len, &grading.g, false);
            for (&g, &wg) in gr.nodes.iter().zip(&gr.weights) {
                rule.u.push(u);
                rule.g.push(g);
                rule.w.push(2.0 * wu * wg);
            }
        }
    }
    rule
}

/// G_c at every node of the rule.
pub fn overlap_column(ov: &Overlap, rule: &PairRule, c0: f64, c1: f64) -> Vec<f64> {
    rule.u.iter().zip(&rule.g).map(|(&u, &g)| ov.eval(c0, c1, u, g)).collect()
}

/// ∫∫_{W²} G_c(s,u)^N ds du for a single cell.
pub fn single_cell_moment(ov: &Overlap, rule: &PairRule, c0: f64, c1: f64, rank: u32) -> f64 {
    let mut acc = 0.0;
    for i in 0..rule.len() {
        acc += rule.w[i] * ov.eval(c0, c1, rule.u[i], rule.g[i]).powi(rank as i32);
    }
    acc
}

/// Accumulates Σ_T w·∏_{c∈T} col_c over all multisets T of `rank` columns,
/// calling `sink(tuple, mass)` in lexicographic order of the sorted tuple.
pub fn multiset_masses<F: FnMut(&[usize], f64)>(
    cols: &[Vec<f64>],
    weights: &[f64],
    rank: usize,
    mut sink: F,
) {
    let n = cols.len();
    if n == 0 || rank == 0 {
        return;
    }
    let mut stack: Vec<Vec<f64>> = vec![weights.to_vec()];
    let mut tuple: Vec<usize> = Vec::with_capacity(rank);
    fn rec<F: FnMut(&[usize], f64)>(
        cols: &[Vec<f64>],
        rank: usize,
        start: usize,
        stack: &mut Vec<Vec<f64>>,
        tuple: &mut Vec<usize>,
        sink: &mut F,
    ) {
        let n = cols.len();
        for c in start..n {
            tuple.push(c);
            let prev = stack.last().unwrap();
            if tuple.len() == rank {
                let m: f64 = prev.iter().zip(&cols[c]).map(|(a, b)| a * b).sum();
                sink(tuple, m);
            } else {
                let next: Vec<f64> = prev.iter().zip(&cols[c]).map(|(a, b)| a * b).collect();
                if next.iter().any(|&v| v != 0.0) {
                    stack.push(next);
                    rec(cols, rank, c, stack, tuple, sink);
                    stack.pop();
                }
            }
            tuple.pop();
        }
    }
    rec(cols, rank, 0, &mut stack, &mut tuple, &mut sink);
}
