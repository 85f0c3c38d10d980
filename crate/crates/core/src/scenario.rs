//! Discretized driving noise: a partition of [−T_cut, hi] into cells and one
//! Gaussian increment per cell.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Cell edges e_0 < e_1 < … < e_M; cell i is [e_i, e_{i+1}].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseGrid {
    edges: Vec<f64>,
    fine_step: f64,
}

/// Layout of a graded grid: step `fine_step` on the focus intervals, cells
/// growing like `growth` × (distance to the nearest focus) elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_cut: f64,
    pub hi: f64,
    pub fine_step: f64,
    pub growth: f64,
    pub focus: Vec<(f64, f64)>,
    /// Points that must be cell edges.
    pub required: Vec<f64>,
}

impl NoiseGrid {
    /// ⌈(hi + T_cut)/h⌉ cells of width h ending at `hi`.
    pub fn uniform(t_cut: f64, h: f64, hi: f64) -> Result<Self> {
        if !(t_cut > 0.0 && h > 0.0 && hi > -t_cut) {
            return Err(Error::InvalidParams(format!("uniform grid: T_cut {t_cut}, h {h}, hi {hi}")));
        }
        let m = ((hi + t_cut) / h).ceil() as usize;
        let edges = (0..=m).rev().map(|k| hi - k as f64 * h).collect();
        Ok(NoiseGrid { edges, fine_step: h })
    }

    pub fn graded(spec: &GridSpec) -> Result<Self> {
        let GridSpec { t_cut, hi, fine_step: h, growth, .. } = *spec;
        let lo = -t_cut;
        if !(t_cut > 0.0 && h > 0.0 && growth > 0.0 && hi > lo) {
            return Err(Error::InvalidParams(format!("graded grid: {spec:?}")));
        }
        let mut focus = spec.focus.clone();
        for &(a, b) in &focus {
            if !(a < b && a >= lo && b <= hi) {
                return Err(Error::InvalidParams(format!("focus [{a}, {b}] outside [{lo}, {hi}]")));
            }
        }
        focus.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (a, b) in focus {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }

        let mut fixed = vec![lo, hi];
        for &r in &spec.required {
            if r > lo && r < hi {
                fixed.push(r);
            }
        }
        for &(a, b) in &merged {
            let n = ((b - a) / h).round().max(1.0) as usize;
            fixed.extend((0..=n).map(|k| a + (b - a) * k as f64 / n as f64));
        }
        fixed.sort_by(f64::total_cmp);
        fixed.dedup();

        let dist = |x: f64| -> f64 {
            merged
                .iter()
                .map(|&(a, b)| if x < a { a - x } else if x > b { x - b } else { 0.0 })
                .fold(f64::INFINITY, f64::min)
        };
        let mut edges = vec![fixed[0]];
        for w in fixed.windows(2) {
            let (p, q) = (w[0], w[1]);
            if merged.is_empty() {
                fill_uniform(p, q, h, &mut edges);
                continue;
            }
            if q - p <= h * (1.0 + 1e-9) || (dist(p) == 0.0 && dist(q) == 0.0 && q - p < 2.0 * h) {
                edges.push(q);
                continue;
            }
            // split at the farthest point from any focus, fill each half outward
            let mid = farthest_point(p, q, &merged);
            let left = graded_offsets(dist(p), mid - p, h, growth);
            edges.extend(left.iter().skip(1).map(|&o| p + o));
            let right = graded_offsets(dist(q), q - mid, h, growth);
            let n = right.len();
            edges.extend(right.iter().rev().skip(1).take(n.saturating_sub(2)).map(|&o| q - o));
            edges.push(q);
        }
        edges.dedup();
        Ok(NoiseGrid { edges, fine_step: h })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn cells(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    pub fn cell(&self, i: usize) -> (f64, f64) {
        (self.edges[i], self.edges[i + 1])
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn t_cut(&self) -> f64 {
        -self.edges[0]
    }

    pub fn fine_step(&self) -> f64 {
        self.fine_step
    }

    /// True if `x` is an edge, exactly.
    pub fn has_edge(&self, x: f64) -> bool {
        self.edges.binary_search_by(|e| e.total_cmp(&x)).is_ok()
    }

    /// Cells lying inside [a, b].
    pub fn cells_within(&self, a: f64, b: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.cells()).filter(move |&i| self.edges[i] >= a && self.edges[i + 1] <= b)
    }
}

fn fill_uniform(p: f64, q: f64, h: f64, edges: &mut Vec<f64>) {
    let n = ((q - p) / h).ceil().max(1.0) as usize;
    edges.extend((1..=n).map(|k| if k == n { q } else { p + (q - p) * k as f64 / n as f64 }));
}

fn farthest_point(p: f64, q: f64, focus: &[(f64, f64)]) -> f64 {
    let left = focus.iter().filter(|f| f.1 <= p).map(|f| f.1).fold(f64::NEG_INFINITY, f64::max);
    let right = focus.iter().filter(|f| f.0 >= q).map(|f| f.0).fold(f64::INFINITY, f64::min);
    match (left.is_finite(), right.is_finite()) {
        (true, true) => (0.5 * (left + right)).clamp(p, q),
        (true, false) => q,
        (false, true) => p,
        (false, false) => 0.5 * (p + q),
    }
}

/// Offsets 0 = o_0 < … < o_n = len with widths ≈ max(h, growth·(d0 + o)),
/// stretched to end exactly at `len`.
fn graded_offsets(d0: f64, len: f64, h: f64, growth: f64) -> Vec<f64> {
    if len <= 0.0 {
        return vec![0.0];
    }
    let mut o = vec![0.0];
    let mut x = 0.0;
    while x < len {
        x += f64::max(h, growth * (d0 + x));
        o.push(x);
    }
    // drop the last edge if it overshoots by more than half a cell
    let n = o.len();
    if n > 2 && (o[n - 1] - len) > 0.5 * (o[n - 1] - o[n - 2]) {
        o.pop();
    }
    let s = len / *o.last().unwrap();
    for v in &mut o {
        *v *= s;
    }
    *o.last_mut().unwrap() = len;
    o
}

/// Seeded Gaussian increments over a noise grid, one per cell, each with
/// variance equal to the cell width.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianScenario {
    grid: std::sync::Arc<NoiseGrid>,
    pub seed: u64,
    pub index: u64,
    increments: Vec<f64>,
}

impl BrownianScenario {
    pub fn generate(grid: std::sync::Arc<NoiseGrid>, seed: u64, index: u64) -> Self {
        let mut rng = stream_rng(seed, index);
        let increments = (0..grid.cells())
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                grid.width(i).sqrt() * z
            })
            .collect();
        BrownianScenario { grid, seed, index, increments }
    }

    pub fn from_increments(grid: std::sync::Arc<NoiseGrid>, increments: Vec<f64>) -> Result<Self> {
        if increments.len() != grid.cells() {
            return Err(Error::GridMismatch(format!(
                "{} increments for {} cells",
                increments.len(),
                grid.cells()
            )));
        }
        Ok(BrownianScenario { grid, seed: 0, index: 0, increments })
    }

    pub fn grid(&self) -> &NoiseGrid {
        &self.grid
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn negated(&self) -> Self {
        let mut s = self.clone();
        s.increments.iter_mut().for_each(|v| *v = -*v);
        s
    }
}
