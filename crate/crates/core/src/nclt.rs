//! Hermite processes as normalized partial sums of H_N(G_k) for a
//! long-memory stationary Gaussian sequence (G_k).
//!
//! The driving correlation is ρ(k) = r_γ(k)^{1/N}, with r_γ the
//! autocovariance of fractional Gaussian noise of index γ = N(H−1)+1. Then
//! H_N(G_k) has covariance N!·r_γ(k), partial sums of length m have variance
//! exactly N!·m^{2γ}, and ρ(k) ~ c·k^{−2(1−H)}, so the non-central limit is
//! the rank-N Hermite process with index H. For N = 1 this is plain
//! fractional Gaussian noise.

use rayon::prelude::*;

use crate::constants::{compute_c_nh_with, ConstantMethod, ConstantOptions};
use crate::error::{Error, Result};
use crate::fgn::{fgn_autocov, CirculantSampler};
use crate::hermite::{HermiteParams, QuadratureConfig};
use crate::path::{ChaosPath, Provenance, SimulatorKind};
use crate::rng::stream_rng;

/// Probabilists' Hermite polynomial He_n(x).
pub fn hermite_polynomial(order: u32, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if order == 0 {
        return p0;
    }
    for n in 1..order {
        let p2 = x * p1 - n as f64 * p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

pub const MIN_STEPS_PER_UNIT: u64 = 64;

pub struct NcltSimulator {
    params: HermiteParams,
    steps_per_unit: u64,
    total_steps: usize,
    sampler: CirculantSampler,
    scale: f64,
    c_nh: f64,
}

impl NcltSimulator {
    /// Simulator for paths on [0, span_units] with `steps_per_unit` points
    /// per unit time. `c_nh` is the target E X(1)².
    pub fn with_constant(
        params: HermiteParams,
        steps_per_unit: u64,
        span_units: u64,
        c_nh: f64,
    ) -> Result<Self> {
        if steps_per_unit < MIN_STEPS_PER_UNIT {
            return Err(Error::InvalidParams(format!(
                "{steps_per_unit} steps per unit, need at least {MIN_STEPS_PER_UNIT}"
            )));
        }
        if span_units == 0 {
            return Err(Error::InvalidParams("empty span".into()));
        }
        let total = (steps_per_unit * span_units) as usize;
        let n = params.rank() as f64;
        let g = params.gamma();
        let cov: Vec<f64> = (0..=total).map(|k| fgn_autocov(g, k).powf(1.0 / n)).collect();
        let sampler = CirculantSampler::new(&cov)?;
        let fact: f64 = (1..=params.rank()).map(f64::from).product();
        let scale = (c_nh / fact).sqrt() * (steps_per_unit as f64).powf(-g);
        Ok(NcltSimulator { params, steps_per_unit, total_steps: total, sampler, scale, c_nh })
    }

    /// As `with_constant`, with c_{N,H} computed by quadrature.
    pub fn new(params: HermiteParams, steps_per_unit: u64, span_units: u64) -> Result<Self> {
        let c = compute_c_nh_with(
            &params,
            &QuadratureConfig::default().with_tol(1e-9),
            &ConstantOptions::with_method(ConstantMethod::Tensor),
        )?;
        Self::with_constant(params, steps_per_unit, span_units, c.value)
    }

    pub fn c_nh(&self) -> f64 {
        self.c_nh
    }

    pub fn clipped_mass(&self) -> f64 {
        self.sampler.clipped_mass()
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    /// Path `index` of the ensemble keyed by `master_seed`.
    pub fn path(&self, master_seed: u64, index: u64) -> ChaosPath {
        let mut rng = stream_rng(master_seed, index);
        let g = self.sampler.sample(&mut rng);
        let rank = self.params.rank();
        let mut values = Vec::with_capacity(self.total_steps + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for x in g {
            acc += hermite_polynomial(rank, x);
            values.push(self.scale * acc);
        }
        let note = format!(
            "driver correlation r_gamma^(1/N); exact finite-n normalization to c_NH = {}; clipped mass {:e}",
            self.c_nh,
            self.sampler.clipped_mass()
        );
        let prov = Provenance {
            kind: SimulatorKind::Nclt,
            master_seed,
            index,
            steps_per_unit: self.steps_per_unit,
            note,
        };
        ChaosPath::new(self.params, self.steps_per_unit, values, prov)
            .expect("partial sums of finite Gaussians are finite")
    }

    /// Paths `0..count`, generated in parallel; the result does not depend
    /// on the worker count.
    pub fn ensemble(&self, master_seed: u64, count: u64) -> Vec<ChaosPath> {
        (0..count).into_par_iter().map(|i| self.path(master_seed, i)).collect()
    }
}

/// Single path on [0, 1].
pub fn simulate_nclt(params: &HermiteParams, steps_per_unit: u64, seed: u64) -> Result<ChaosPath> {
    Ok(NcltSimulator::new(*params, steps_per_unit, 1)?.path(seed, 0))
}
