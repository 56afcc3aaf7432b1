//! Benchmark forecasters: a Minnesota-prior BVAR in levels, AR(1) and random walk.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::{normal_log_pdf, student_t_log_pdf};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ols_residual_variances, Dataset};
use crate::scalar::Real;

/// One-step predictive density for the level of a single variable: Student-t when
/// `dof` is set, Gaussian otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivariatePredictive {
    pub mean: f64,
    pub scale: f64,
    pub dof: Option<f64>,
}

impl UnivariatePredictive {
    pub fn log_density(&self, y: f64) -> f64 {
        match self.dof {
            Some(nu) => student_t_log_pdf(y, self.mean, self.scale, nu),
            None => normal_log_pdf(y, self.mean, self.scale * self.scale),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinnesotaHyper {
    pub lags: usize,
    /// Overall tightness.
    pub tightness: f64,
    /// Lag-decay exponent.
    pub decay: f64,
    /// Prior mean of the own first lag.
    pub own_lag_mean: f64,
    pub intercept_var: f64,
}

impl Default for MinnesotaHyper {
    fn default() -> Self {
        Self { lags: 5, tightness: 0.2, decay: 1.0, own_lag_mean: 1.0, intercept_var: 100.0 }
    }
}

/// Conjugate normal-inverse-Wishart posterior of a VAR in levels.
#[derive(Debug, Clone, PartialEq)]
pub struct BvarPosterior {
    /// `K × m`, rows ordered (lag 1 of all variables, …, lag p, intercept).
    pub coefficients: DMatrix<f64>,
    /// `Ω̄`, the row covariance factor of the coefficients.
    pub omega: DMatrix<f64>,
    pub scale: DMatrix<f64>,
    pub dof: f64,
    pub lags: usize,
}

fn levels_f64<T: Real>(data: &Dataset<T>) -> DMatrix<f64> {
    data.levels.map(|v| v.as_f64())
}

fn var_regressors(y: &DMatrix<f64>, t: usize, lags: usize) -> DVector<f64> {
    let m = y.ncols();
    let mut x = DVector::zeros(m * lags + 1);
    for l in 1..=lags {
        x.rows_mut((l - 1) * m, m).copy_from(&y.row(t - l).transpose());
    }
    x[m * lags] = 1.0;
    x
}

pub fn bvar_fit<T: Real>(data: &Dataset<T>, hyper: &MinnesotaHyper) -> Result<BvarPosterior> {
    let y = levels_f64(data);
    let (n, m) = y.shape();
    let p = hyper.lags;
    if p == 0 || n < p + m + 3 {
        return Err(Error::dim(format!("BVAR({p}) needs more than {} observations, got {n}", p + m + 2)));
    }
    if !(hyper.tightness > 0.0 && hyper.intercept_var > 0.0) {
        return Err(Error::invalid("Minnesota tightness and intercept variance must be positive"));
    }
    let ar = ols_residual_variances(data, p)?;
    if !ar.degenerate.is_empty() {
        return Err(Error::Degenerate(format!("constant series in BVAR data: columns {:?}", ar.degenerate)));
    }
    let sig2: Vec<f64> = ar.values.iter().map(|v| v.as_f64()).collect();
    let k = m * p + 1;
    let rows = n - p;
    let x = DMatrix::from_fn(rows, k, |i, c| var_regressors(&y, p + i, p)[c]);
    let yy = y.rows(p, rows).into_owned();

    let mut omega0_inv = DVector::zeros(k);
    for l in 1..=p {
        for j in 0..m {
            let v = (hyper.tightness / (l as f64).powf(hyper.decay)).powi(2) / sig2[j];
            omega0_inv[(l - 1) * m + j] = 1.0 / v;
        }
    }
    omega0_inv[k - 1] = 1.0 / hyper.intercept_var;
    let mut b0 = DMatrix::zeros(k, m);
    for j in 0..m {
        b0[(j, j)] = hyper.own_lag_mean;
    }
    let nu0 = (m + 2) as f64;
    let s0 = DMatrix::from_diagonal(&DVector::from_vec(sig2.clone())) * (nu0 - m as f64 - 1.0);

    let mut prec = x.tr_mul(&x);
    for i in 0..k {
        prec[(i, i)] += omega0_inv[i];
    }
    let omega0_inv_b0 = DMatrix::from_diagonal(&omega0_inv) * &b0;
    let chol = linalg::factor(&prec, "BVAR posterior precision")
        .map_err(|_| Error::Numerical("ill-conditioned BVAR posterior".into()))?;
    let coefficients = chol.solve(&(&omega0_inv_b0 + x.tr_mul(&yy)));
    let omega = chol.inverse();
    let resid = &yy - &x * &coefficients;
    let shift = &coefficients - &b0;
    let mut scale = s0 + resid.tr_mul(&resid) + shift.tr_mul(&(DMatrix::from_diagonal(&omega0_inv) * &shift));
    linalg::symmetrize(&mut scale);
    if scale.diagonal().iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Numerical("BVAR posterior scale is not positive definite".into()));
    }
    Ok(BvarPosterior { coefficients, omega, scale, dof: nu0 + rows as f64, lags: p })
}

impl BvarPosterior {
    /// Marginal Student-t predictive of variable `target` one period after the last row.
    pub fn predict<T: Real>(&self, data: &Dataset<T>, target: usize) -> Result<UnivariatePredictive> {
        let y = levels_f64(data);
        let m = y.ncols();
        if target >= m || self.coefficients.ncols() != m {
            return Err(Error::dim("BVAR target or dimension mismatch"));
        }
        let x = var_regressors(&y, y.nrows(), self.lags);
        let mean = x.dot(&self.coefficients.column(target));
        let nu = self.dof - m as f64 + 1.0;
        let q = 1.0 + (x.transpose() * &self.omega * &x)[(0, 0)];
        let scale = (q * self.scale[(target, target)] / nu).sqrt();
        Ok(UnivariatePredictive { mean, scale, dof: Some(nu) })
    }
}

pub fn bvar_fit_predict<T: Real>(data: &Dataset<T>, hyper: &MinnesotaHyper, target: usize) -> Result<UnivariatePredictive> {
    bvar_fit(data, hyper)?.predict(data, target)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnivariateKind {
    Ar1,
    Rw,
}

/// Predictive plus, for AR(1), the posterior mean and sd of the slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnivariateFit {
    pub predictive: UnivariatePredictive,
    pub slope: Option<(f64, f64)>,
}

pub fn univariate_predict(series: &[f64], kind: UnivariateKind) -> Result<UnivariateFit> {
    let n = series.len();
    if n < 10 {
        return Err(Error::invalid(format!("univariate benchmark needs at least 10 observations, got {n}")));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in series"));
    }
    if series.iter().all(|v| *v == series[0]) {
        return Err(Error::Degenerate("constant series has zero predictive variance".into()));
    }
    match kind {
        UnivariateKind::Rw => {
            let d: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
            if !(var > 0.0) {
                return Err(Error::Degenerate("first differences have zero variance".into()));
            }
            let predictive = UnivariatePredictive { mean: series[n - 1], scale: var.sqrt(), dof: None };
            Ok(UnivariateFit { predictive, slope: None })
        }
        UnivariateKind::Ar1 => {
            let rows = n - 1;
            let x = DMatrix::from_fn(rows, 2, |i, c| if c == 0 { 1.0 } else { series[i] });
            let y = DVector::from_fn(rows, |i, _| series[i + 1]);
            let chol = linalg::factor(&x.tr_mul(&x), "AR(1) cross-product")
                .map_err(|_| Error::Degenerate("AR(1) regressor is constant".into()))?;
            let beta = chol.solve(&x.tr_mul(&y));
            let xtx_inv = chol.inverse();
            let dof = (rows - 2) as f64;
            let s2 = (&y - &x * &beta).norm_squared() / dof;
            if !(s2 > 0.0) {
                return Err(Error::Degenerate("AR(1) fit has zero residual variance".into()));
            }
            let xn = DVector::from_vec(vec![1.0, series[n - 1]]);
            let q = 1.0 + (xn.transpose() * &xtx_inv * &xn)[(0, 0)];
            let predictive = UnivariatePredictive { mean: xn.dot(&beta), scale: (s2 * q).sqrt(), dof: Some(dof) };
            let slope_sd = (s2 * xtx_inv[(1, 1)] * dof / (dof - 2.0)).sqrt();
            Ok(UnivariateFit { predictive, slope: Some((beta[1], slope_sd)) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn white_noise(n: usize, m: usize, seed: u64) -> Dataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let levels = DMatrix::from_fn(n, m, |_, _| f64::std_normal(&mut rng));
        Dataset::new(levels, (0..m).map(|j| format!("v{j}")).collect(), (0..n).map(|i| format!("t{i}")).collect())
            .unwrap()
    }

    #[test]
    fn dogmatic_prior_gives_random_walk_mean() {
        let d = white_noise(80, 3, 1);
        let hyper = MinnesotaHyper { tightness: 1e-9, intercept_var: 1e-12, ..MinnesotaHyper::default() };
        for target in 0..3 {
            let p = bvar_fit_predict(&d, &hyper, target).unwrap();
            assert_relative_eq!(p.mean, d.levels[(79, target)], epsilon = 1e-6);
        }
    }

    #[test]
    fn diffuse_prior_matches_ols() {
        let d = white_noise(400, 2, 2);
        let hyper = MinnesotaHyper { tightness: 1e6, intercept_var: 1e12, lags: 2, ..MinnesotaHyper::default() };
        let post = bvar_fit(&d, &hyper).unwrap();
        let y = &d.levels;
        let rows = 398;
        let x = DMatrix::from_fn(rows, 5, |i, c| var_regressors(y, 2 + i, 2)[c]);
        let yy = y.rows(2, rows).into_owned();
        let ols = (x.tr_mul(&x)).try_inverse().unwrap() * x.tr_mul(&yy);
        assert_relative_eq!(post.coefficients, ols, epsilon = 1e-8);
        let xn = var_regressors(y, 400, 2);
        let p = post.predict(&d, 1).unwrap();
        assert_relative_eq!(p.mean, xn.dot(&ols.column(1)), epsilon = 1e-8);
        // white noise: the predictive mean sits near the sample mean
        let mean = y.column(1).mean();
        assert!((p.mean - mean).abs() < 0.3);
    }

    #[test]
    fn bvar_predictive_scale_formula() {
        let d = white_noise(60, 2, 3);
        let post = bvar_fit(&d, &MinnesotaHyper::default()).unwrap();
        let p = post.predict(&d, 0).unwrap();
        let x = var_regressors(&d.levels, 60, 5);
        let nu = post.dof - 1.0;
        assert_eq!(p.dof, Some(nu));
        let q = 1.0 + x.dot(&(&post.omega * &x));
        assert_relative_eq!(p.scale * p.scale, q * post.scale[(0, 0)] / nu, epsilon = 1e-12);
        assert_eq!(post.dof, 4.0 + 55.0);
    }

    #[test]
    fn bvar_rejects_constant_column() {
        let mut d = white_noise(60, 2, 4);
        d.levels.column_mut(1).fill(3.0);
        assert!(matches!(bvar_fit(&d, &MinnesotaHyper::default()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn random_walk_mean_is_last_value() {
        let s: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin() + 0.1 * i as f64).collect();
        let f = univariate_predict(&s, UnivariateKind::Rw).unwrap();
        assert_eq!(f.predictive.mean, s[19]);
        assert!(f.predictive.dof.is_none());
    }

    #[test]
    fn constant_series_is_degenerate() {
        let s = vec![2.5; 30];
        for kind in [UnivariateKind::Rw, UnivariateKind::Ar1] {
            assert!(matches!(univariate_predict(&s, kind), Err(Error::Degenerate(_))));
        }
        assert!(matches!(univariate_predict(&s[..5], UnivariateKind::Rw), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn ar1_slope_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = vec![0.0; 500];
        for t in 1..500 {
            s[t] = 0.5 * s[t - 1] + f64::std_normal(&mut rng);
        }
        let f = univariate_predict(&s, UnivariateKind::Ar1).unwrap();
        let (mean, sd) = f.slope.unwrap();
        assert!((mean - 0.5).abs() < 3.0 * sd, "slope {mean} sd {sd}");
        assert!(sd > 0.02 && sd < 0.06);
    }

    #[test]
    fn student_density_normalizes() {
        let p = UnivariatePredictive { mean: 0.3, scale: 1.7, dof: Some(6.0) };
        let h = 1e-3;
        let mass: f64 = (-40_000..40_000).map(|i| p.log_density(0.3 + i as f64 * h).exp() * h).sum();
        assert_relative_eq!(mass, 1.0, epsilon = 1e-3);
    }
}
