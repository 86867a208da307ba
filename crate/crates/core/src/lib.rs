//! Dilation of finite families of observables to commuting projectors on a
//! weighted inner-product space, with the verification machinery and the
//! classical-statistics applications built on top of it.

pub mod applications;
pub mod bridge;
pub mod config;
pub mod dilation;
pub mod error;
pub mod fixtures;
mod lstsq;
pub mod model;
pub mod operator;
pub mod report;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use operator::{CMatrix, CVector, GramMetric, Observable, Spectrum};
pub use report::{Metric, Report, Verdict};
