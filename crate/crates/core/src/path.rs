use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::HermiteParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulatorKind {
    Direct,
    Nclt,
    /// Paths built from explicit values (tests, imported data).
    External,
}

impl SimulatorKind {
    pub fn tag(self) -> u8 {
        match self {
            SimulatorKind::Direct => 1,
            SimulatorKind::Nclt => 2,
            SimulatorKind::External => 0,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(SimulatorKind::External),
            1 => Ok(SimulatorKind::Direct),
            2 => Ok(SimulatorKind::Nclt),
            t => Err(Error::Format(format!("unknown simulator tag {t}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: SimulatorKind,
    pub master_seed: u64,
    pub index: u64,
    pub steps_per_unit: u64,
    pub note: String,
}

/// Sample path on the uniform grid k / steps_per_unit, k = 0..values.len().
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosPath {
    pub params: HermiteParams,
    steps_per_unit: u64,
    values: Vec<f64>,
    pub provenance: Provenance,
}

impl ChaosPath {
    pub fn new(
        params: HermiteParams,
        steps_per_unit: u64,
        values: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if steps_per_unit == 0 {
            return Err(Error::GridMismatch("zero steps per unit".into()));
        }
        if values.len() < 2 {
            return Err(Error::GridMismatch("path needs at least two points".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!("non-finite path value at index {i}")));
        }
        Ok(ChaosPath { params, steps_per_unit, values, provenance })
    }

    /// Path sampled from a function, mostly for tests.
    pub fn from_fn<F: Fn(f64) -> f64>(
        params: HermiteParams,
        steps_per_unit: u64,
        span_steps: u64,
        f: F,
    ) -> Result<Self> {
        let values = (0..=span_steps).map(|k| f(k as f64 / steps_per_unit as f64)).collect();
        let prov = Provenance {
            kind: SimulatorKind::External,
            master_seed: 0,
            index: 0,
            steps_per_unit,
            note: String::new(),
        };
        Self::new(params, steps_per_unit, values, prov)
    }

    pub fn steps_per_unit(&self) -> u64 {
        self.steps_per_unit
    }

    pub fn step(&self) -> f64 {
        1.0 / self.steps_per_unit as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.steps_per_unit as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.time(i)).collect()
    }

    /// Right end of the time span.
    pub fn span(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}
