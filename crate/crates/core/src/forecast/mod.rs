//! One-step-ahead density forecasts, log predictive scores and the recursive
//! real-time evaluation against benchmark models.

mod benchmarks;
mod mixture;
mod recursive;

pub use benchmarks::{
    bvar_fit, bvar_fit_predict, univariate_predict, BvarPosterior, MinnesotaHyper, UnivariateFit, UnivariateKind,
    UnivariatePredictive,
};
pub use mixture::{log_predictive_score, next_regressors, predictive_mixture, DrawPredictive, PredictiveMixture};
pub use recursive::{
    expanding_vintages, run_recursive_exercise, table_models, vintage_id_for, ExerciseSettings, LpsReport, LpsRow,
    ModelSpec, RealizedValue, BENCHMARK_ID,
};
