//! Rao-Blackwellized one-step-ahead predictive densities from posterior draws.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::sampler::PosteriorDraws;
use crate::scalar::Real;
use crate::statefilter::transition_matrix;

/// Gaussian mixture for `Δy_{T+1}` contributed by one posterior draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawPredictive<T: Real> {
    /// Regime weights `Pr(S_{T+1} = j)`; they sum to one.
    pub weights: Vec<T>,
    pub means: Vec<DVector<T>>,
    pub covs: Vec<DMatrix<T>>,
}

impl<T: Real> DrawPredictive<T> {
    /// Probability of regime 1 at `T+1` (0 for single-regime draws).
    pub fn regime1_prob(&self) -> T {
        self.weights.get(1).copied().unwrap_or(T::zero())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveMixture<T: Real> {
    pub draws: Vec<DrawPredictive<T>>,
}

/// Regressor vector `x_{T+1}` built from the last `P+1` levels of `levels`.
pub fn next_regressors<T: Real>(
    levels: &DMatrix<T>,
    b: &DMatrix<T>,
    lags: usize,
    include_intercept: bool,
) -> Result<DVector<T>> {
    let (n, m) = levels.shape();
    if n < lags + 1 {
        return Err(Error::dim(format!("need {} observations to form the forecast regressors", lags + 1)));
    }
    let r = b.ncols();
    let kx = r + m * lags + usize::from(include_intercept);
    let mut x = DVector::zeros(kx);
    let last = levels.row(n - 1).transpose();
    x.rows_mut(0, r).copy_from(&b.tr_mul(&last));
    for lag in 1..=lags {
        let d = levels.row(n - lag) - levels.row(n - lag - 1);
        x.rows_mut(r + (lag - 1) * m, m).copy_from(&d.transpose());
    }
    if include_intercept {
        x[kx - 1] = T::one();
    }
    Ok(x)
}

/// Predictive mixture for the period after the last row of `data`, which must be the
/// last period of the estimation sample.
pub fn predictive_mixture<T: Real>(draws: &PosteriorDraws<T>, data: &Dataset<T>) -> Result<PredictiveMixture<T>> {
    if draws.is_empty() {
        return Err(Error::invalid("no posterior draws"));
    }
    let cfg = &draws.config;
    if data.dim() != cfg.m {
        return Err(Error::dim(format!("data has {} variables, draws have {}", data.dim(), cfg.m)));
    }
    if draws.dates.last() != data.dates.last() {
        return Err(Error::dim(format!(
            "draws end at {:?} but data end at {:?}",
            draws.dates.last(),
            data.dates.last()
        )));
    }
    let out = draws
        .draws
        .iter()
        .map(|d| {
            let basis = d.basis();
            let b = basis.b();
            let x = next_regressors(&data.levels, &b, cfg.lags, cfg.include_intercept)?;
            if d.coefficients[0].ncols() != x.len() {
                return Err(Error::dim("draw coefficients do not match the regressor count"));
            }
            let means: Vec<DVector<T>> = d.coefficients.iter().map(|a| a * &x).collect();
            let weights = if d.coefficients.len() == 1 {
                vec![T::one()]
            } else {
                let w = b.tr_mul(&data.levels.row(data.n_obs() - 1).transpose());
                let p = transition_matrix(&d.transition, &w);
                let s = *d.states.last().ok_or_else(|| Error::invalid("empty state path"))? as usize;
                vec![p[(s, 0)], p[(s, 1)]]
            };
            Ok(DrawPredictive { weights, means, covs: d.sigma.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PredictiveMixture { draws: out })
}

/// `log[(1/M) Σ_m Σ_j ω_mj N(realized; μ_mj[target], Σ_mj[target, target])]`, where
/// `realized` is the observed change of the target variable.
pub fn log_predictive_score<T: Real>(mix: &PredictiveMixture<T>, realized: T, target: usize) -> Result<f64> {
    let mut terms = Vec::new();
    for d in &mix.draws {
        if target >= d.means.first().map_or(0, |v| v.len()) {
            return Err(Error::invalid(format!("target index {target} out of range")));
        }
        for ((w, mu), cov) in d.weights.iter().zip(&d.means).zip(&d.covs) {
            let w = w.as_f64();
            if w <= 0.0 {
                continue;
            }
            let lp = crate::distributions::normal_log_pdf(realized.as_f64(), mu[target].as_f64(), cov[(target, target)].as_f64());
            terms.push(w.ln() + lp);
        }
    }
    let score = log_sum_exp(&terms) - (mix.draws.len() as f64).ln();
    if !score.is_finite() {
        log::warn!("predictive density is not finite at the realized value");
        return Ok(f64::NEG_INFINITY);
    }
    Ok(score)
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
