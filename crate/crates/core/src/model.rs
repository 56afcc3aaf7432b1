//! Data containers, VECM design matrices and regime-conditional likelihoods.
//!
//! The regression form is `Δy_t = A_j x_t + H_j η_t` with
//! `x_t = (w_t', Δy_{t-1}', ..., Δy_{t-P}', [1])'` and cointegration errors
//! `w_t = b' y_{t-1}`, where `b = (I_r, Ξ')'`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Panel of level observations, one row per period.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Real> {
    pub levels: DMatrix<T>,
    pub names: Vec<String>,
    pub dates: Vec<String>,
}

impl<T: Real> Dataset<T> {
    pub fn new(levels: DMatrix<T>, names: Vec<String>, dates: Vec<String>) -> Result<Self> {
        if names.len() != levels.ncols() {
            return Err(Error::dim(format!("{} names for {} columns", names.len(), levels.ncols())));
        }
        if dates.len() != levels.nrows() {
            return Err(Error::dim(format!("{} dates for {} rows", dates.len(), levels.nrows())));
        }
        if let Some(i) = levels.iter().position(|v| !v.is_finite()) {
            let (r, c) = (i % levels.nrows(), i / levels.nrows());
            return Err(Error::invalid(format!("missing or non-finite value at row {r}, column {}", names[c])));
        }
        Ok(Self { levels, names, dates })
    }

    pub fn n_obs(&self) -> usize {
        self.levels.nrows()
    }

    pub fn dim(&self) -> usize {
        self.levels.ncols()
    }

    /// First `n` periods.
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.n_obs());
        Self {
            levels: self.levels.rows(0, n).into_owned(),
            names: self.names.clone(),
            dates: self.dates[..n].to_vec(),
        }
    }

    pub fn position(&self, date: &str) -> Option<usize> {
        self.dates.iter().position(|d| d == date)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// Two regimes, probit transition probabilities driven by the cointegration errors.
    Tvp,
    /// Two regimes, intercept-only probit (loadings on the cointegration errors pinned to 0).
    Ftp,
    /// Single regime with a fixed Gaussian prior on the coefficients.
    Linear,
}

/// Statistic whose ordering across regimes pins down the regime labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentStatistic {
    /// Intercept of the identification equation. Requires `include_intercept`.
    Intercept,
    /// Average fitted value of the identification equation over the regime's periods.
    FittedMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentMode {
    /// Relabel the regimes when the ordering is violated.
    Permute,
    /// Discard the sweep and keep the previous state.
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialDistribution {
    Uniform,
    /// Ergodic distribution of the time-averaged transition matrix.
    Ergodic,
}

/// Per-column ingestion transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    None,
    Log,
}

/// Column order of the empirical dataset.
pub const EMPIRICAL_VARIABLES: [&str; 6] = ["HICPXE", "UNEMP", "HICP-EXPEC", "UTILIZ", "OIL", "I3M"];

/// Form of the rate matrix `Q` of the common Wishart scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QScale {
    /// `Q = (100 s / denom) diag(σ̂²)`.
    Literal,
    /// `Q = (100 q / s) diag(1/σ̂²)`, which keeps the prior on `Σ` scale-equivariant.
    Reciprocal,
}

/// Model and sampler configuration. Serialized as a flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub m: usize,
    #[serde(alias = "P")]
    pub lags: usize,
    #[serde(alias = "r")]
    pub rank: usize,
    pub include_intercept: bool,
    pub d0: f64,
    pub d1: f64,
    pub zeta: f64,
    pub v_gamma: f64,
    pub n_regimes: usize,
    /// Total number of sweeps, burn-in included.
    pub n_draws: usize,
    pub n_burn: usize,
    pub thin: usize,
    pub ident_var: usize,
    pub ident_statistic: IdentStatistic,
    pub ident_mode: IdentMode,
    /// Denominator in `Q = (100 s / denom) diag(σ̂²)`; defaults to `q`.
    pub q_denominator: Option<f64>,
    pub q_scale: QScale,
    pub initial_distribution: InitialDistribution,
    pub variant: ModelVariant,
    /// Prior variance of the coefficients in the linear variant.
    pub linear_prior_var: f64,
    /// Holds every shrinkage scale at this value instead of sampling it.
    pub fixed_tau: Option<f64>,
    /// Expected column names, in order. Empty accepts any names.
    pub variables: Vec<String>,
    pub transforms: BTreeMap<String, Transform>,
    /// Variable scored in density forecasts.
    pub target_var: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            m: 6,
            lags: 4,
            rank: 3,
            include_intercept: true,
            d0: 0.1,
            d1: 0.1,
            zeta: 1.0,
            v_gamma: 10.0,
            n_regimes: 2,
            n_draws: 85_000,
            n_burn: 50_000,
            thin: 1,
            ident_var: 1,
            ident_statistic: IdentStatistic::Intercept,
            ident_mode: IdentMode::Permute,
            q_denominator: None,
            q_scale: QScale::Literal,
            initial_distribution: InitialDistribution::Uniform,
            variant: ModelVariant::Tvp,
            linear_prior_var: 10.0,
            fixed_tau: None,
            variables: Vec::new(),
            transforms: BTreeMap::new(),
            target_var: 0,
        }
    }
}

impl ModelConfig {
    /// Six-variable setup with logs of capacity utilization and oil prices.
    pub fn empirical() -> Self {
        Self {
            variables: EMPIRICAL_VARIABLES.iter().map(|s| s.to_string()).collect(),
            transforms: [("UTILIZ", Transform::Log), ("OIL", Transform::Log)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            ..Self::default()
        }
    }

    /// Number of regressors per equation, `K = r + mP (+1)`.
    pub fn n_regressors(&self) -> usize {
        self.rank + self.m * self.lags + usize::from(self.include_intercept)
    }

    /// Number of coefficients per regime, `k = K m`.
    pub fn n_coefficients(&self) -> usize {
        self.n_regressors() * self.m
    }

    pub fn n_retained(&self) -> usize {
        let kept = self.n_draws.saturating_sub(self.n_burn);
        kept.div_ceil(self.thin.max(1))
    }

    pub fn regimes(&self) -> usize {
        if self.variant == ModelVariant::Linear {
            1
        } else {
            2
        }
    }

    /// Wishart shape of the regime precisions, `s = 2.5 + (m-1)/2`.
    pub fn sigma_shape(&self) -> f64 {
        2.5 + (self.m as f64 - 1.0) / 2.0
    }

    /// Wishart shape of the common scale, `q = 0.5 + (m-1)/2`.
    pub fn scale_shape(&self) -> f64 {
        0.5 + (self.m as f64 - 1.0) / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.rank == 0 || self.rank >= self.m {
            return bad(format!("cointegration rank {} must satisfy 0 < r < m = {}", self.rank, self.m));
        }
        if self.lags == 0 {
            return bad("lag order must be at least 1".into());
        }
        for (name, v) in [("d0", self.d0), ("d1", self.d1), ("zeta", self.zeta), ("v_gamma", self.v_gamma)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.linear_prior_var > 0.0) {
            return bad("linear_prior_var must be positive".into());
        }
        if self.n_regimes != 2 {
            return bad(format!("only two regimes are supported, got {}", self.n_regimes));
        }
        if self.n_burn > self.n_draws {
            return bad(format!("burn-in {} exceeds total draws {}", self.n_burn, self.n_draws));
        }
        if self.thin == 0 {
            return bad("thin must be at least 1".into());
        }
        if self.ident_var >= self.m {
            return bad(format!("ident_var {} out of range for m = {}", self.ident_var, self.m));
        }
        if self.ident_statistic == IdentStatistic::Intercept && !self.include_intercept {
            return bad("intercept identification requires include_intercept; use fitted_mean".into());
        }
        if let Some(d) = self.q_denominator {
            if !(d > 0.0) {
                return bad("q_denominator must be positive".into());
            }
        }
        if !self.variables.is_empty() && self.variables.len() != self.m {
            return bad(format!("{} variable names for m = {}", self.variables.len(), self.m));
        }
        if self.target_var >= self.m {
            return bad(format!("target_var {} out of range for m = {}", self.target_var, self.m));
        }
        if let Some(t) = self.fixed_tau {
            if !(t > 0.0) {
                return bad("fixed_tau must be positive".into());
            }
        }
        Ok(())
    }

    /// Column labels of `A_j`: `ect1..ectr`, then `<var>.L<p>`, then `const`.
    pub fn regressor_labels(&self, names: &[String]) -> Vec<String> {
        let mut out: Vec<String> = (1..=self.rank).map(|c| format!("ect{c}")).collect();
        for p in 1..=self.lags {
            out.extend(names.iter().map(|n| format!("{n}.L{p}")));
        }
        if self.include_intercept {
            out.push("const".into());
        }
        out
    }

    /// Labels of `vec(A_j)` in column-major order: `<equation>.<regressor>`.
    pub fn coefficient_labels(&self, names: &[String]) -> Vec<String> {
        self.regressor_labels(names)
            .iter()
            .flat_map(|reg| names.iter().map(move |eq| format!("{eq}.{reg}")))
            .collect()
    }
}

/// Free block `Ξ` of the normalized long-run matrix `b = (I_r, Ξ')'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CointegrationBasis<T: Real> {
    /// `(m - r) × r`.
    pub xi: DMatrix<T>,
}

impl<T: Real> CointegrationBasis<T> {
    pub fn zeros(m: usize, r: usize) -> Self {
        Self { xi: DMatrix::zeros(m - r, r) }
    }

    pub fn rank(&self) -> usize {
        self.xi.ncols()
    }

    pub fn dim(&self) -> usize {
        self.xi.nrows() + self.xi.ncols()
    }

    /// The `m × r` matrix `b`.
    pub fn b(&self) -> DMatrix<T> {
        let r = self.rank();
        let mut b = DMatrix::zeros(self.dim(), r);
        b.view_mut((0, 0), (r, r)).fill_with_identity();
        b.view_mut((r, 0), (self.xi.nrows(), r)).copy_from(&self.xi);
        b
    }

    /// `b' y` for a level vector `y`.
    pub fn errors(&self, y: &DVector<T>) -> DVector<T> {
        self.b().tr_mul(y)
    }
}

/// Regression data for the effective sample (levels index `t = P+2, ..., T`).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignData<T: Real> {
    pub dy: DMatrix<T>,
    pub x: DMatrix<T>,
    pub w: DMatrix<T>,
    /// Lagged levels `y_{t-1}`, kept so `w` can be rebuilt when `Ξ` changes.
    pub ylag: DMatrix<T>,
    pub dates: Vec<String>,
}

impl<T: Real> DesignData<T> {
    pub fn n_obs(&self) -> usize {
        self.dy.nrows()
    }

    pub fn rank(&self) -> usize {
        self.w.ncols()
    }

    /// Recomputes `w` and the matching columns of `x` for a new basis.
    pub fn set_basis(&mut self, basis: &CointegrationBasis<T>) {
        let w = &self.ylag * basis.b();
        self.x.columns_mut(0, w.ncols()).copy_from(&w);
        self.w = w;
    }
}

pub fn build_design<T: Real>(
    data: &Dataset<T>,
    basis: &CointegrationBasis<T>,
    config: &ModelConfig,
) -> Result<DesignData<T>> {
    let (n, m) = (data.n_obs(), data.dim());
    let (p, r) = (config.lags, config.rank);
    if m != config.m {
        return Err(Error::dim(format!("data has {m} variables, config expects {}", config.m)));
    }
    if basis.dim() != m || basis.rank() != r {
        return Err(Error::dim(format!(
            "basis is {}x{}, expected {}x{r}",
            basis.xi.nrows(),
            basis.xi.ncols(),
            m - r
        )));
    }
    if n <= p + 2 {
        return Err(Error::dim(format!("need more than P+2 = {} observations, got {n}", p + 2)));
    }
    let start = p + 1;
    let t_eff = n - start;
    let k = config.n_regressors();
    let y = &data.levels;
    let diff = |i: usize| y.row(i) - y.row(i - 1);

    let mut dy = DMatrix::zeros(t_eff, m);
    let mut x = DMatrix::zeros(t_eff, k);
    let mut ylag = DMatrix::zeros(t_eff, m);
    for row in 0..t_eff {
        let i = start + row;
        dy.row_mut(row).copy_from(&diff(i));
        ylag.row_mut(row).copy_from(&y.row(i - 1));
        for lag in 1..=p {
            x.view_mut((row, r + (lag - 1) * m), (1, m)).copy_from(&diff(i - lag));
        }
        if config.include_intercept {
            x[(row, k - 1)] = T::one();
        }
    }
    let mut design = DesignData {
        dy,
        x,
        w: DMatrix::zeros(t_eff, r),
        ylag,
        dates: data.dates[start..].to_vec(),
    };
    design.set_basis(basis);
    Ok(design)
}

/// Per-regime coefficients and covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams<T: Real> {
    /// `m × K`: loadings, lag blocks, then intercept.
    pub a: DMatrix<T>,
    pub sigma: DMatrix<T>,
    /// Lower Cholesky factor of `sigma`.
    pub h: DMatrix<T>,
}

impl<T: Real> RegimeParams<T> {
    pub fn new(a: DMatrix<T>, sigma: DMatrix<T>) -> Result<Self> {
        if sigma.nrows() != a.nrows() {
            return Err(Error::dim("covariance and coefficient matrices disagree on m"));
        }
        let h = linalg::cholesky(&sigma, "regime covariance")?;
        Ok(Self { a, sigma, h })
    }

    /// Log density of `dy` given regressors `x`, using the stored factor.
    pub fn log_density(&self, dy: &DVector<T>, x: &DVector<T>) -> T {
        let e = dy - &self.a * x;
        gaussian_log_density_chol(&e, &self.h)
    }

    /// Log densities for every row of the design.
    pub fn log_densities(&self, design: &DesignData<T>) -> DVector<T> {
        let m = self.a.nrows();
        let resid = (&design.dy - &design.x * self.a.transpose()).transpose();
        let z = self
            .h
            .solve_lower_triangular(&resid)
            .expect("Cholesky factor has positive diagonal");
        let c = -T::lit(0.5 * m as f64) * T::two_pi().ln() - linalg::log_det_from_chol(&self.h) * T::lit(0.5);
        DVector::from_iterator(z.ncols(), z.column_iter().map(|col| c - col.norm_squared() * T::lit(0.5)))
    }
}

fn gaussian_log_density_chol<T: Real>(e: &DVector<T>, l: &DMatrix<T>) -> T {
    let m = e.len();
    let z = l.solve_lower_triangular(e).expect("Cholesky factor has positive diagonal");
    -T::lit(0.5 * m as f64) * T::two_pi().ln() - linalg::log_det_from_chol(l) * T::lit(0.5)
        - z.norm_squared() * T::lit(0.5)
}

/// `log N(dy; A x, Σ)` evaluated through the Cholesky factor of `Σ`.
pub fn log_likelihood_regime<T: Real>(dy: &DVector<T>, x: &DVector<T>, params: &RegimeParams<T>) -> Result<T> {
    let (m, k) = params.a.shape();
    if dy.len() != m || x.len() != k || params.sigma.shape() != (m, m) {
        return Err(Error::dim(format!(
            "dy has {} entries, x has {}, A is {m}x{k}, Σ is {:?}",
            dy.len(),
            x.len(),
            params.sigma.shape()
        )));
    }
    let l = linalg::cholesky(&params.sigma, "regime covariance")?;
    Ok(gaussian_log_density_chol(&(dy - &params.a * x), &l))
}

/// Residual variances of univariate AR(P) fits with intercept, one per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVariances<T: Real> {
    pub values: DVector<T>,
    /// Columns that were constant; their variance is reported as zero.
    pub degenerate: Vec<usize>,
}

pub fn ols_residual_variances<T: Real>(data: &Dataset<T>, lags: usize) -> Result<ResidualVariances<T>> {
    let n = data.n_obs();
    if n <= lags + 2 {
        return Err(Error::dim(format!("need more than P+2 = {} observations, got {n}", lags + 2)));
    }
    let rows = n - lags;
    let mut values = DVector::zeros(data.dim());
    let mut degenerate = Vec::new();
    for j in 0..data.dim() {
        let col = data.levels.column(j);
        if col.iter().all(|v| *v == col[0]) {
            log::warn!("variable {} is constant; residual variance set to zero", data.names[j]);
            degenerate.push(j);
            continue;
        }
        let x = DMatrix::from_fn(rows, lags + 1, |i, c| if c == 0 { T::one() } else { col[lags + i - c] });
        let y = DVector::from_fn(rows, |i, _| col[lags + i]);
        let xtx = x.tr_mul(&x);
        let chol = linalg::factor(&xtx, "AR regressor cross-product").map_err(|_| {
            Error::Numerical(format!("rank-deficient AR({lags}) regressors for {}", data.names[j]))
        })?;
        let beta = chol.solve(&x.tr_mul(&y));
        let resid = y - x * beta;
        let dof = rows as f64 - (lags + 1) as f64;
        if dof <= 0.0 {
            return Err(Error::dim("no residual degrees of freedom in AR fit"));
        }
        values[j] = resid.norm_squared() / T::lit(dof);
    }
    Ok(ResidualVariances { values, degenerate })
}
