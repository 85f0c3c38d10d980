//! Dyadic increments, the D / D̄ split of their chaos kernels, and the block
//! partition of the index set.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::direct::{default_truncation, DiagonalMode, DirectOptions, WickTable, WindowExpansion};
use crate::error::{Error, Result};
use crate::hermite::HermiteParams;
use crate::path::ChaosPath;
use crate::scenario::{BrownianScenario, GridSpec, NoiseGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicIndex {
    j: u32,
    k: u64,
}

impl DyadicIndex {
    pub fn new(j: u32, k: u64) -> Result<Self> {
        if j == 0 || j > 62 {
            return Err(Error::OutOfRange(format!("level {j}")));
        }
        if k >= 1 << j {
            return Err(Error::OutOfRange(format!("position {k} at level {j}")));
        }
        Ok(DyadicIndex { j, k })
    }

    pub fn level(&self) -> u32 {
        self.j
    }

    pub fn position(&self) -> u64 {
        self.k
    }

    /// d_{j,k} = k / 2^j.
    pub fn point(&self) -> f64 {
        dyadic(self.j, self.k)
    }
}

pub fn dyadic(j: u32, k: u64) -> f64 {
    k as f64 / (1u64 << j) as f64
}

/// L^j = {1, …, ⌊2^j/e_j − 1⌋}, as an inclusive range.
pub fn index_set(j: u32, e_j: u64) -> Result<std::ops::RangeInclusive<u64>> {
    if e_j == 0 || j > 62 {
        return Err(Error::InvalidParams(format!("j = {j}, e_j = {e_j}")));
    }
    let two_j = 1u64 << j;
    if two_j <= 2 * e_j {
        return Err(Error::EmptyIndexSet { j, e_j });
    }
    Ok(1..=two_j / e_j - 1)
}

/// Path index of time `origin + t`, which must be a grid point.
fn grid_index(path: &ChaosPath, origin: f64, t: f64) -> Result<usize> {
    let x = (origin + t) * path.steps_per_unit() as f64;
    let i = x.round();
    if (x - i).abs() > 1e-9 * x.abs().max(1.0) || i < 0.0 || i as usize >= path.len() {
        return Err(Error::GridMismatch(format!(
            "time {} is not a point of a grid with {} steps per unit and span {}",
            origin + t,
            path.steps_per_unit(),
            path.span()
        )));
    }
    Ok(i as usize)
}

/// Δ(j, k) = X(d_{j,k+1}) − X(d_{j,k}); no interpolation.
pub fn increment(path: &ChaosPath, j: u32, k: u64) -> Result<f64> {
    increment_from(path, 0.0, j, k)
}

/// Δ(j, k) for the unit interval placed at `origin` on the path's time axis.
pub fn increment_from(path: &ChaosPath, origin: f64, j: u32, k: u64) -> Result<f64> {
    if j > 62 || k >= 1 << j {
        return Err(Error::OutOfRange(format!("(j, k) = ({j}, {k})")));
    }
    let spu = path.steps_per_unit();
    if j >= 64 || spu % (1u64 << j) != 0 {
        return Err(Error::GridMismatch(format!("{spu} steps per unit cannot resolve level {j}")));
    }
    let a = grid_index(path, origin, dyadic(j, k))?;
    let b = grid_index(path, origin, dyadic(j, k + 1))?;
    Ok(path.values()[b] - path.values()[a])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRecord {
    pub j: u32,
    pub l: u64,
    pub e_j: u64,
    pub delta: f64,
    pub delta_tilde: f64,
    pub delta_breve: f64,
    /// D = [d_lo, d_hi]^N.
    pub d_lo: f64,
    pub d_hi: f64,
    /// Lower truncation of I = (−∞, d_hi]^N.
    pub t_cut: f64,
}

impl DecompositionRecord {
    pub fn in_d(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| v >= self.d_lo && v <= self.d_hi)
    }

    /// In I but not in D; D̄ is never materialized.
    pub fn in_d_bar(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| v <= self.d_hi) && !self.in_d(x)
    }

    /// |Δ − Δ̃ − Δ̆| relative to max(|Δ|, |Δ̃| + |Δ̆|), the scale at which
    /// the two sums are rounded.
    pub fn split_residual(&self) -> f64 {
        let scale = self.delta.abs().max(self.delta_tilde.abs() + self.delta_breve.abs());
        if scale == 0.0 {
            return 0.0;
        }
        (self.delta - self.delta_tilde - self.delta_breve).abs() / scale
    }
}

/// (d_{j,(l−1)e_j+1}, d_{j,le_j}, d_{j,le_j+1}).
fn layout(j: u32, l: u64, e_j: u64) -> (f64, f64, f64) {
    (dyadic(j, (l - 1) * e_j + 1), dyadic(j, l * e_j), dyadic(j, l * e_j + 1))
}

/// Precomputed expansions of Δ(j, l e_j) for a set of l, on one shared
/// noise grid, with every block marked as inside D or not.
#[derive(Debug, Clone)]
pub struct Decomposer {
    params: HermiteParams,
    j: u32,
    e_j: u64,
    grid: Arc<NoiseGrid>,
    items: Vec<(u64, WindowExpansion, Vec<bool>)>,
    mode: DiagonalMode,
}

#[derive(Debug, Clone, Copy)]
pub struct DecomposerOptions {
    /// Noise cells per dyadic step 2^{-j} near the windows.
    pub cells_per_step: u32,
    /// Growth of cell widths away from the windows.
    pub growth: f64,
    /// Relative tail mass allowed by the truncation.
    pub tail_rel: f64,
    pub direct: DirectOptions,
}

impl Default for DecomposerOptions {
    fn default() -> Self {
        DecomposerOptions { cells_per_step: 8, growth: 0.5, tail_rel: 1e-6, direct: DirectOptions::default() }
    }
}

impl Decomposer {
    pub fn new(params: HermiteParams, j: u32, e_j: u64, ls: &[u64], opts: &DecomposerOptions) -> Result<Self> {
        let set = index_set(j, e_j)?;
        if ls.is_empty() {
            return Err(Error::InvalidParams("no l requested".into()));
        }
        if let Some(&l) = ls.iter().find(|l| !set.contains(l)) {
            return Err(Error::OutOfRange(format!("l = {l} not in L^{j} = [1, {}]", set.end())));
        }
        let step = dyadic(j, 1);
        let t_cut = default_truncation(&params, step, opts.tail_rel)?;
        let mut focus = Vec::new();
        let mut required = Vec::new();
        for &l in ls {
            let (d_lo, t0, t1) = layout(j, l, e_j);
            focus.push((t0, t1));
            required.extend([d_lo, t0, t1]);
        }
        let hi = focus.iter().map(|f| f.1).fold(f64::NEG_INFINITY, f64::max);
        let grid = NoiseGrid::graded(&GridSpec {
            t_cut,
            hi,
            fine_step: step / opts.cells_per_step as f64,
            growth: opts.growth,
            focus,
            required,
        })?;
        Self::on_grid(params, j, e_j, ls, Arc::new(grid), &opts.direct)
    }

    /// Uses a given noise grid, which must have the D boundaries as edges.
    pub fn on_grid(
        params: HermiteParams,
        j: u32,
        e_j: u64,
        ls: &[u64],
        grid: Arc<NoiseGrid>,
        opts: &DirectOptions,
    ) -> Result<Self> {
        let set = index_set(j, e_j)?;
        let items = ls
            .par_iter()
            .map(|&l| {
                if !set.contains(&l) {
                    return Err(Error::OutOfRange(format!("l = {l} not in L^{j}")));
                }
                let (d_lo, t0, t1) = layout(j, l, e_j);
                for x in [d_lo, t0, t1] {
                    if !grid.has_edge(x) {
                        return Err(Error::GridMismatch(format!("{x} is not a noise cell edge")));
                    }
                }
                let exp = WindowExpansion::build(&params, &grid, t0, t1, opts)?;
                let inside = (0..exp.len())
                    .map(|t| {
                        exp.block(t).iter().all(|&c| {
                            let (a, b) = grid.cell(c as usize);
                            a >= d_lo && b <= t1
                        })
                    })
                    .collect();
                Ok((l, exp, inside))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Decomposer { params, j, e_j, grid, items, mode: opts.diagonal })
    }

    pub fn grid(&self) -> &Arc<NoiseGrid> {
        &self.grid
    }

    pub fn ls(&self) -> Vec<u64> {
        self.items.iter().map(|i| i.0).collect()
    }

    pub fn records(&self, scenario: &BrownianScenario) -> Result<Vec<DecompositionRecord>> {
        if scenario.grid() != self.grid.as_ref() {
            return Err(Error::GridMismatch("scenario grid differs from decomposer grid".into()));
        }
        let table = WickTable::new(scenario, self.params.rank() as usize);
        Ok(self
            .items
            .iter()
            .map(|(l, exp, inside)| {
                let delta = exp.evaluate_table(&table, self.mode);
                let (tilde, breve) = exp.evaluate_split(&table, self.mode, inside);
                let (d_lo, _, d_hi) = layout(self.j, *l, self.e_j);
                DecompositionRecord {
                    j: self.j,
                    l: *l,
                    e_j: self.e_j,
                    delta,
                    delta_tilde: tilde,
                    delta_breve: breve,
                    d_lo,
                    d_hi,
                    t_cut: self.grid.t_cut(),
                }
            })
            .collect())
    }

    /// Records for scenarios `0..count` of `master_seed`, one row per
    /// scenario.
    pub fn ensemble(&self, master_seed: u64, count: u64) -> Vec<Vec<DecompositionRecord>> {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let sc = BrownianScenario::generate(self.grid.clone(), master_seed, i);
                self.records(&sc).expect("scenario built on the decomposer grid")
            })
            .collect()
    }

    /// Exact variances (Δ, Δ̃, Δ̆) of the discretized increment for the
    /// k-th requested l.
    pub fn variances(&self, k: usize) -> (f64, f64, f64) {
        let (_, exp, inside) = &self.items[k];
        let outside: Vec<bool> = inside.iter().map(|b| !b).collect();
        (
            exp.variance(self.mode, None),
            exp.variance(self.mode, Some(inside)),
            exp.variance(self.mode, Some(&outside)),
        )
    }
}

/// Single record on the grid of a given scenario.
pub fn decompose_increment(
    params: &HermiteParams,
    scenario: &BrownianScenario,
    j: u32,
    l: u64,
    e_j: u64,
    opts: &DirectOptions,
) -> Result<DecompositionRecord> {
    let grid = Arc::new(scenario.grid().clone());
    let d = Decomposer::on_grid(*params, j, e_j, &[l], grid, opts)?;
    Ok(d.records(scenario)?.remove(0))
}

/// Blocks L_m = ℕ ∩ [U_{m−1}, U_m], m = 1..=M_j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub j: u32,
    pub e_j: u64,
    pub n0: u64,
    pub m_j: u64,
    /// U_0, …, U_{M_j}; the last point is 2^j/e_j − 1 and need not be an
    /// integer.
    pub u: Vec<f64>,
    /// Inclusive integer ranges of the blocks.
    pub blocks: Vec<(u64, u64)>,
}

pub fn block_partition(j: u32, e_j: u64, n0: u64) -> Result<BlockPartition> {
    if n0 < 2 {
        return Err(Error::InvalidParams(format!("n0 = {n0} < 2")));
    }
    if e_j == 0 || j == 0 || j > 62 {
        return Err(Error::InvalidParams(format!("j = {j}, e_j = {e_j}")));
    }
    let ratio = (1u64 << j) as f64 / e_j as f64;
    let width = n0 * j as u64;
    let diam = ratio - 2.0;
    if diam < 10.0 * width as f64 {
        return Err(Error::BelowThreshold(format!(
            "2^{j}/{e_j} - 2 = {diam} < {} = 10 * n0 * j with n0 = {n0}",
            10 * width
        )));
    }
    let m_j = (diam / width as f64).floor() as u64;
    let mut u: Vec<f64> = (0..m_j).map(|m| (1 + m * width) as f64).collect();
    u.push(ratio - 1.0);
    let blocks = (1..=m_j as usize)
        .map(|m| (u[m - 1] as u64, u[m].floor() as u64))
        .collect();
    Ok(BlockPartition { j, e_j, n0, m_j, u, blocks })
}

impl BlockPartition {
    /// Every stated invariant, with the first violation reported.
    pub fn verify(&self) -> std::result::Result<(), String> {
        let w = (self.n0 * self.j as u64) as f64;
        let ratio = (1u64 << self.j) as f64 / self.e_j as f64;
        if self.m_j != ((ratio - 2.0) / w).floor() as u64 || self.m_j < 10 {
            return Err(format!("M_j = {} inconsistent", self.m_j));
        }
        for m in 0..self.m_j as usize {
            if self.u[m] != 1.0 + m as f64 * w {
                return Err(format!("U_{m} = {}", self.u[m]));
            }
        }
        let last = self.u[self.m_j as usize] - self.u[self.m_j as usize - 1];
        if !(last >= w && last < 2.0 * w) {
            return Err(format!("last block width {last} outside [{w}, {})", 2.0 * w));
        }
        for (m, &(a, b)) in self.blocks.iter().enumerate() {
            if ((b - a + 1) as f64) <= w {
                return Err(format!("block {} has {} elements", m + 1, b - a + 1));
            }
        }
        let set = index_set(self.j, self.e_j).map_err(|e| e.to_string())?;
        if self.blocks[0].0 != *set.start() || self.blocks.last().unwrap().1 != *set.end() {
            return Err("blocks do not cover L^j".into());
        }
        for w2 in self.blocks.windows(2) {
            if w2[1].0 != w2[0].1 {
                return Err(format!("blocks {:?} and {:?} do not share an endpoint", w2[0], w2[1]));
            }
        }
        Ok(())
    }

    /// Smallest m (1-based) with l ∈ L_m.
    pub fn block_of(&self, l: u64) -> Option<usize> {
        self.blocks.iter().position(|&(a, b)| l >= a && l <= b).map(|m| m + 1)
    }
}

/// Per-block maxima of |v_l|; `value(l)` must cover every l.
pub fn block_suprema<F: Fn(u64) -> Option<f64>>(partition: &BlockPartition, value: F) -> Result<Vec<f64>> {
    partition
        .blocks
        .iter()
        .map(|&(a, b)| {
            (a..=b).try_fold(0.0f64, |acc, l| value(l).map(|v| acc.max(v.abs())).ok_or(Error::MissingIndex(l)))
        })
        .collect()
}

/// Λ_m^j = sup_{l ∈ L_m} |Δ(j, l e_j)| read off a path.
pub fn path_block_suprema(path: &ChaosPath, origin: f64, partition: &BlockPartition) -> Result<Vec<f64>> {
    let (j, e) = (partition.j, partition.e_j);
    let incs: Vec<(u64, f64)> = (partition.blocks[0].0..=partition.blocks.last().unwrap().1)
        .map(|l| Ok((l, increment_from(path, origin, j, l * e)?)))
        .collect::<Result<_>>()?;
    let first = incs[0].0;
    block_suprema(partition, |l| incs.get((l - first) as usize).map(|x| x.1))
}

/// (l_j(τ), m_j(τ)) with l_j(τ) = ⌊2^j τ / e_j⌋.
pub fn locate_block(tau: f64, partition: &BlockPartition) -> Result<(u64, usize)> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::OutOfRange(format!("tau = {tau} outside (0, 1)")));
    }
    let (j, e) = (partition.j, partition.e_j);
    let l = ((1u64 << j) as f64 * tau / e as f64).floor() as u64;
    let set = index_set(j, e)?;
    if !set.contains(&l) {
        return Err(Error::OutOfRange(format!("l_j(tau) = {l} not in L^{j} = [1, {}] for tau = {tau}", set.end())));
    }
    let m = partition.block_of(l).ok_or(Error::MissingIndex(l))?;
    Ok((l, m))
}
