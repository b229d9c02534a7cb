//! Monte Carlo quantiles of `sup_t w(t)|B(t)|` for a Brownian bridge `B` and
//! weights `w(t) = 1_{]eta, 1-eta[}(t) * (t(1-t))^(-gamma)`, computed with an
//! adaptive path discretization, and the weighted CUSUM change-point test
//! that uses them as critical values.

pub mod bench;
pub mod calibration;
pub mod cusum;
pub mod error;
pub mod quantile;
pub mod reference_math;
pub mod sampler;
pub mod score;
pub mod sup_approx;
pub mod weights;

pub use error::{Error, Result};
pub use quantile::{compute_quantile, Engine, QuantileRequest, QuantileResult};
pub use sampler::{NormalSource, RandomStream};
pub use weights::{Interval, WeightParams};
