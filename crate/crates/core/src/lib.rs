pub mod constants;
pub mod direct;
pub mod dyadic;
pub mod error;
pub mod fgn;
pub mod hermite;
pub mod io;
pub mod nclt;
pub mod osc;
pub mod overlap;
pub mod path;
pub mod qmc;
pub mod quad;
pub mod rng;
pub mod scale;
pub mod scenario;
pub mod stats;

pub use error::{Error, Result};
pub use hermite::{derived_exponents, kernel_from_gaps, kernel_time_integral, truncated_power, HermiteParams, QuadratureConfig};
