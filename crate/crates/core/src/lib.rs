//! CUSUM test for change points in the autocovariance structure of strong
//! mixing time series (CSSM).
//!
//! The pipeline is:
//!
//! 1. [`autocov`]: sample autocovariances of the full series and of every prefix.
//! 2. [`longrun`]: a model-free estimate `Ĉ` of the long-run covariance matrix
//!    of the autocovariance estimators, plus the closed-form Bartlett matrix
//!    for linear processes.
//! 3. [`cusum`]: the normalized CUSUM path and the statistic `T̂_n`.
//! 4. [`critval`]: critical values of `sup_t Σ_j W⁰_j(t)²`.
//!
//! [`models`] and [`mc`] provide the simulators and the power-study harness,
//! and [`cli`] the command-line front end.

pub mod autocov;
pub mod cli;
pub mod critval;
pub mod cusum;
mod error;
pub mod longrun;
pub mod mc;
pub mod models;
pub mod rng;

pub use autocov::{AutocovVector, TimeSeries};
pub use critval::{BridgeConfig, CriticalTable};
pub use cusum::{cssm_test, CusumPath, TestResult};
pub use error::{Error, Result};
pub use longrun::{CovMatrix, EstimatorConfig};
pub use models::{ChangeSpec, ModelSpec};
