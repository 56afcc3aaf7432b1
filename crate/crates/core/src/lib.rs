//! Markov-switching vector error correction models with Normal-Gamma shrinkage on
//! regime differences, probit transition probabilities and density forecasting.

// Negated comparisons are used on purpose so that NaN fails positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dgp;
pub mod distributions;
pub mod error;
pub mod forecast;
pub mod io;
pub mod linalg;
pub mod model;
pub mod sampler;
pub mod scalar;
pub mod statefilter;

#[cfg(test)]
#[path = "../tests/common/oracle.rs"]
mod oracle;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Dataset64 = model::Dataset<f64>;
pub type Dataset32 = model::Dataset<f32>;
pub type RegimeParams64 = model::RegimeParams<f64>;
pub type RegimeParams32 = model::RegimeParams<f32>;
pub type PosteriorDraws64 = sampler::PosteriorDraws<f64>;
pub type PosteriorDraws32 = sampler::PosteriorDraws<f32>;
pub type TrueParams64 = dgp::TrueParams<f64>;
pub type TrueParams32 = dgp::TrueParams<f32>;
pub type VintageStore64 = io::VintageStore<f64>;
pub type VintageStore32 = io::VintageStore<f32>;
pub type PredictiveMixture64 = forecast::PredictiveMixture<f64>;
pub type PredictiveMixture32 = forecast::PredictiveMixture<f32>;
