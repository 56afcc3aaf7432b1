//! Full conditional draws of the Gibbs sampler, one function per block.
//!
//! Moment functions (`*_posterior`) are separate from the draws so the conjugate
//! algebra can be checked without Monte Carlo noise.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{sample_gig, sample_wishart, GigParams, WishartParams};
use crate::error::{Error, Result};
use crate::linalg::{self, GaussianPosterior};
use crate::model::{CointegrationBasis, Dataset, DesignData, ModelConfig, QScale, RegimeParams};
use crate::scalar::Real;

/// Lower bound on the GIG `chi` argument of the shrinkage-scale update.
pub const CHI_FLOOR: f64 = 1e-10;

/// Common mean, shrinkage scales and common Wishart scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyState<T: Real> {
    pub a: DVector<T>,
    pub tau: DVector<T>,
    pub s_common: DMatrix<T>,
}

/// Hyperparameters fixed for the whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct Priors<T: Real> {
    pub d0: T,
    pub d1: T,
    pub zeta: T,
    pub v_gamma: T,
    pub s_shape: T,
    pub q_shape: T,
    pub q_matrix: DMatrix<T>,
    pub linear_prior_var: T,
}

impl<T: Real> Priors<T> {
    /// Builds `Q` from univariate AR(P) residual variances of `data`.
    pub fn from_config(config: &ModelConfig, data: &Dataset<T>) -> Result<Self> {
        let s = config.sigma_shape();
        let q = config.scale_shape();
        let var = crate::model::ols_residual_variances(data, config.lags)?;
        if !var.degenerate.is_empty() {
            log::warn!("constant series in columns {:?}; Q has zero diagonal entries there", var.degenerate);
        }
        let diag = match config.q_scale {
            QScale::Literal => {
                let denom = config.q_denominator.unwrap_or(q);
                var.values.map(|v| v * T::lit(100.0 * s / denom))
            }
            QScale::Reciprocal => var.values.map(|v| {
                if v > T::zero() {
                    T::lit(100.0 * q / s) / v
                } else {
                    T::zero()
                }
            }),
        };
        Ok(Self {
            d0: T::lit(config.d0),
            d1: T::lit(config.d1),
            zeta: T::lit(config.zeta),
            v_gamma: T::lit(config.v_gamma),
            s_shape: T::lit(s),
            q_shape: T::lit(q),
            q_matrix: DMatrix::from_diagonal(&diag),
            linear_prior_var: T::lit(config.linear_prior_var),
        })
    }
}

pub(crate) fn regime_rows(states: &[u8], regime: u8) -> Vec<usize> {
    states.iter().enumerate().filter(|(_, s)| **s == regime).map(|(t, _)| t).collect()
}

fn select_rows<T: Real>(m: &DMatrix<T>, rows: &[usize]) -> DMatrix<T> {
    m.select_rows(rows.iter())
}

/// Gaussian conditional of `vec(A_j)` (column-major) with prior `N(prior_mean, diag(prior_var))`.
pub fn regime_coefficient_posterior<T: Real>(
    design: &DesignData<T>,
    states: &[u8],
    regime: u8,
    sigma_inv: &DMatrix<T>,
    prior_mean: &DVector<T>,
    prior_var: &DVector<T>,
) -> Result<GaussianPosterior<T>> {
    let (m, kx) = (design.dy.ncols(), design.x.ncols());
    let k = m * kx;
    if prior_mean.len() != k || prior_var.len() != k || sigma_inv.shape() != (m, m) {
        return Err(Error::dim(format!("expected {k} coefficients and a {m}x{m} precision")));
    }
    if states.len() != design.n_obs() {
        return Err(Error::dim("state path length differs from the effective sample"));
    }
    let rows = regime_rows(states, regime);
    let x = select_rows(&design.x, &rows);
    let dy = select_rows(&design.dy, &rows);
    let xtx = x.tr_mul(&x);
    let mut precision = xtx.kronecker(sigma_inv);
    let cross = sigma_inv * dy.tr_mul(&x);
    let mut rhs = DVector::from_column_slice(cross.as_slice());
    for i in 0..k {
        let inv = T::one() / prior_var[i];
        precision[(i, i)] += inv;
        rhs[i] += prior_mean[i] * inv;
    }
    GaussianPosterior::from_canonical(&precision, &rhs, "regime coefficient precision")
}

/// Draws `A_j` (`m × K`); the flag reports whether the precision needed a diagonal floor.
pub fn draw_regime_coefficients<T: Real, R: Rng + ?Sized>(
    design: &DesignData<T>,
    states: &[u8],
    regime: u8,
    sigma_inv: &DMatrix<T>,
    prior_mean: &DVector<T>,
    prior_var: &DVector<T>,
    rng: &mut R,
) -> Result<(DMatrix<T>, bool)> {
    let post = regime_coefficient_posterior(design, states, regime, sigma_inv, prior_mean, prior_var)?;
    let v = post.sample(rng);
    Ok((DMatrix::from_column_slice(design.dy.ncols(), design.x.ncols(), v.as_slice()), post.floored))
}

/// Gaussian conditional of `ξ = vec(Ξ)` given loadings, short-run terms and states, with
/// prior `N(0, ζ I)`.
pub fn cointegration_posterior<T: Real>(
    design: &DesignData<T>,
    regimes: &[RegimeParams<T>],
    precisions: &[DMatrix<T>],
    states: &[u8],
    zeta: T,
) -> Result<GaussianPosterior<T>> {
    let m = design.dy.ncols();
    let r = design.rank();
    let n2 = m - r;
    let v = n2 * r;
    let mut precision = DMatrix::identity(v, v) / zeta;
    let mut rhs = DVector::zeros(v);
    for (j, (reg, sinv)) in regimes.iter().zip(precisions).enumerate() {
        let rows = regime_rows(states, j as u8);
        if rows.is_empty() {
            continue;
        }
        let lambda = reg.a.columns(0, r);
        let short = reg.a.columns(r, reg.a.ncols() - r);
        let ylag = select_rows(&design.ylag, &rows);
        let y1 = ylag.columns(0, r);
        let y2 = ylag.columns(r, n2);
        let xs = select_rows(&design.x, &rows);
        // residual after removing everything that does not involve Ξ, one row per period
        let resid = select_rows(&design.dy, &rows) - xs.columns(r, xs.ncols() - r) * short.transpose() - y1 * lambda.transpose();
        let g = lambda.transpose() * sinv * lambda;
        let y2y2 = y2.tr_mul(&y2);
        precision += g.kronecker(&y2y2);
        // Σ_t y2_t u_t' with u_t = λ' Σ⁻¹ r_t
        let u = resid * sinv * lambda;
        let cross = y2.tr_mul(&u);
        rhs += DVector::from_column_slice(cross.as_slice());
    }
    GaussianPosterior::from_canonical(&precision, &rhs, "cointegration precision")
}

pub fn draw_cointegration<T: Real, R: Rng + ?Sized>(
    design: &DesignData<T>,
    regimes: &[RegimeParams<T>],
    precisions: &[DMatrix<T>],
    states: &[u8],
    zeta: T,
    rng: &mut R,
) -> Result<(CointegrationBasis<T>, bool)> {
    let post = cointegration_posterior(design, regimes, precisions, states, zeta)?;
    let xi = post.sample(rng);
    let m = design.dy.ncols();
    let r = design.rank();
    Ok((CointegrationBasis { xi: DMatrix::from_column_slice(m - r, r, xi.as_slice()) }, post.floored))
}

/// `a ~ N((a0 + a1)/2, diag(τ)/2)`.
pub fn draw_common_mean<T: Real, R: Rng + ?Sized>(
    a0: &DVector<T>,
    a1: &DVector<T>,
    tau: &DVector<T>,
    rng: &mut R,
) -> DVector<T> {
    let half = T::lit(0.5);
    DVector::from_fn(a0.len(), |i, _| (a0[i] + a1[i]) * half + (tau[i] * half).sqrt() * T::std_normal(rng))
}

/// `τ_i ~ GIG(d0 − 1, Σ_j (a_{j,i} − a_i)², 2 d1)` with `chi` floored at [`CHI_FLOOR`].
pub fn draw_tau<T: Real, R: Rng + ?Sized>(
    a: &DVector<T>,
    a0: &DVector<T>,
    a1: &DVector<T>,
    d0: T,
    d1: T,
    rng: &mut R,
) -> Result<DVector<T>> {
    let p = d0 - T::one();
    let psi = d1 * T::lit(2.0);
    let floor = T::lit(CHI_FLOOR);
    let mut out = DVector::zeros(a.len());
    for i in 0..a.len() {
        let chi = ((a0[i] - a[i]).powi(2) + (a1[i] - a[i]).powi(2)).max(floor);
        out[i] = sample_gig(&GigParams::new(p, chi, psi)?, rng)?;
    }
    Ok(out)
}

/// Wishart conditional of `Σ_j⁻¹`: rate `S + ½ Σ e e'`, shape `s + N_j/2`.
pub fn sigma_posterior<T: Real>(
    design: &DesignData<T>,
    states: &[u8],
    regime: u8,
    a_j: &DMatrix<T>,
    s_common: &DMatrix<T>,
    s_shape: T,
) -> Result<WishartParams<T>> {
    let rows = regime_rows(states, regime);
    let e = select_rows(&design.dy, &rows) - select_rows(&design.x, &rows) * a_j.transpose();
    let mut rate = s_common + e.tr_mul(&e) * T::lit(0.5);
    linalg::symmetrize(&mut rate);
    WishartParams::new(s_shape + T::lit(rows.len() as f64 * 0.5), rate)
}

/// Returns `(Σ_j, Σ_j⁻¹)`.
pub fn draw_sigma<T: Real, R: Rng + ?Sized>(
    design: &DesignData<T>,
    states: &[u8],
    regime: u8,
    a_j: &DMatrix<T>,
    s_common: &DMatrix<T>,
    s_shape: T,
    rng: &mut R,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let params = sigma_posterior(design, states, regime, a_j, s_common, s_shape)?;
    let precision = sample_wishart(&params, rng)?;
    let sigma = linalg::spd_inverse(&precision, "regime precision draw")?;
    Ok((sigma, precision))
}

/// Wishart conditional of `S`: rate `Q + Σ_j Σ_j⁻¹`, shape `q + n_regimes · s`.
pub fn common_scale_posterior<T: Real>(
    precisions: &[DMatrix<T>],
    q_matrix: &DMatrix<T>,
    q_shape: T,
    s_shape: T,
) -> Result<WishartParams<T>> {
    let mut rate = q_matrix.clone();
    for p in precisions {
        rate += p;
    }
    linalg::symmetrize(&mut rate);
    WishartParams::new(q_shape + s_shape * T::lit(precisions.len() as f64), rate)
}

pub fn draw_common_scale<T: Real, R: Rng + ?Sized>(
    precisions: &[DMatrix<T>],
    q_matrix: &DMatrix<T>,
    q_shape: T,
    s_shape: T,
    rng: &mut R,
) -> Result<DMatrix<T>> {
    sample_wishart(&common_scale_posterior(precisions, q_matrix, q_shape, s_shape)?, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_design(n: usize, beta: f64, sd: f64, rng: &mut ChaCha8Rng) -> DesignData<f64> {
        let x = DMatrix::from_fn(n, 1, |_, _| f64::std_normal(rng));
        let dy = DMatrix::from_fn(n, 1, |i, _| beta * x[(i, 0)] + sd * f64::std_normal(rng));
        DesignData { dy, x, w: DMatrix::zeros(n, 0), ylag: DMatrix::zeros(n, 1), dates: vec![String::new(); n] }
    }

    #[test]
    fn scalar_coefficient_conjugate_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = scalar_design(50, 0.7, 1.5, &mut rng);
        let states: Vec<u8> = (0..50).map(|t| (t % 3 == 0) as u8).collect();
        let (sig2, a, tau) = (2.0, 0.3, 0.8);
        let post = regime_coefficient_posterior(
            &d,
            &states,
            1,
            &DMatrix::from_element(1, 1, 1.0 / sig2),
            &DVector::from_element(1, a),
            &DVector::from_element(1, tau),
        )
        .unwrap();
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for t in 0..50 {
            if states[t] == 1 {
                sxx += d.x[(t, 0)].powi(2);
                sxy += d.x[(t, 0)] * d.dy[(t, 0)];
            }
        }
        let var = 1.0 / (sxx / sig2 + 1.0 / tau);
        let mean = var * (sxy / sig2 + a / tau);
        assert_relative_eq!(post.mean[0], mean, epsilon = 1e-10);
        assert_relative_eq!(post.covariance()[(0, 0)], var, epsilon = 1e-10);
    }

    #[test]
    fn empty_regime_draws_from_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = scalar_design(20, 1.0, 1.0, &mut rng);
        let states = vec![0u8; 20];
        let prior_mean = DVector::from_element(1, -2.0);
        let prior_var = DVector::from_element(1, 3.0);
        let post = regime_coefficient_posterior(&d, &states, 1, &DMatrix::identity(1, 1), &prior_mean, &prior_var).unwrap();
        assert_relative_eq!(post.mean[0], -2.0, epsilon = 1e-14);
        assert_relative_eq!(post.covariance()[(0, 0)], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn tiny_tau_pins_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = scalar_design(200, 1.0, 1.0, &mut rng);
        let states = vec![0u8; 200];
        let (a, _) = draw_regime_coefficients(
            &d,
            &states,
            0,
            &DMatrix::identity(1, 1),
            &DVector::from_element(1, 0.25),
            &DVector::from_element(1, 1e-12),
            &mut rng,
        )
        .unwrap();
        assert!((a[(0, 0)] - 0.25).abs() < 1e-4);
    }

    #[test]
    fn multivariate_posterior_matches_dense_regression() {
        // vec(A) regression written out row by row with (x' ⊗ I_m)
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (n, m, k) = (30, 2, 3);
        let x = DMatrix::from_fn(n, k, |_, _| f64::std_normal(&mut rng));
        let dy = DMatrix::from_fn(n, m, |_, _| f64::std_normal(&mut rng));
        let d = DesignData { dy, x, w: DMatrix::zeros(n, 0), ylag: DMatrix::zeros(n, m), dates: vec![String::new(); n] };
        let states: Vec<u8> = (0..n).map(|t| (t % 2) as u8).collect();
        let sinv = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let pm = DVector::from_fn(m * k, |i, _| 0.1 * i as f64);
        let pv = DVector::from_fn(m * k, |i, _| 0.5 + i as f64);
        let post = regime_coefficient_posterior(&d, &states, 0, &sinv, &pm, &pv).unwrap();
        let mut prec = DMatrix::from_diagonal(&pv.map(|v| 1.0 / v));
        let mut rhs = pm.component_div(&pv);
        for t in (0..n).filter(|t| states[*t] == 0) {
            let xt = d.x.row(t).transpose();
            let z = xt.transpose().kronecker(&DMatrix::<f64>::identity(m, m));
            prec += z.transpose() * &sinv * &z;
            rhs += z.transpose() * &sinv * d.dy.row(t).transpose();
        }
        let mean = prec.clone().try_inverse().unwrap() * rhs;
        assert_relative_eq!(post.mean, mean, epsilon = 1e-10);
    }

    #[test]
    fn cointegration_posterior_matches_dense_regression() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (n, m, r, p) = (25, 3, 1, 1);
        let kx = r + m * p + 1;
        let ylag = DMatrix::from_fn(n, m, |_, _| f64::std_normal(&mut rng));
        let mut x = DMatrix::from_fn(n, kx, |_, _| f64::std_normal(&mut rng));
        x.column_mut(kx - 1).fill(1.0);
        let dy = DMatrix::from_fn(n, m, |_, _| f64::std_normal(&mut rng));
        let d = DesignData { dy, x, w: DMatrix::zeros(n, r), ylag, dates: vec![String::new(); n] };
        let states: Vec<u8> = (0..n).map(|t| (t % 3 == 0) as u8).collect();
        let regs: Vec<RegimeParams<f64>> = (0..2)
            .map(|j| {
                let a = DMatrix::from_fn(m, kx, |_, _| f64::std_normal(&mut rng) * (1.0 + j as f64));
                RegimeParams::new(a, DMatrix::identity(m, m) * (1.0 + j as f64)).unwrap()
            })
            .collect();
        let precs: Vec<_> = regs.iter().map(|g| g.sigma.clone().try_inverse().unwrap()).collect();
        let post = cointegration_posterior(&d, &regs, &precs, &states, 2.0).unwrap();
        let v = (m - r) * r;
        let mut prec = DMatrix::identity(v, v) / 2.0;
        let mut rhs = DVector::zeros(v);
        for t in 0..n {
            let j = states[t] as usize;
            let a = &regs[j].a;
            let lambda = a.columns(0, r);
            let mut resid = d.dy.row(t).transpose();
            for c in r..kx {
                resid -= a.column(c) * d.x[(t, c)];
            }
            for c in 0..r {
                resid -= lambda.column(c) * d.ylag[(t, c)];
            }
            let z = DMatrix::from_fn(m, v, |i, col| lambda[(i, col / (m - r))] * d.ylag[(t, r + col % (m - r))]);
            prec += z.transpose() * &precs[j] * &z;
            rhs += z.transpose() * &precs[j] * resid;
        }
        assert_relative_eq!(post.mean, prec.try_inverse().unwrap() * rhs, epsilon = 1e-10);
    }

    #[test]
    fn zero_loadings_leave_cointegration_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (n, m) = (20, 3);
        let d = DesignData {
            dy: DMatrix::from_fn(n, m, |_, _| f64::std_normal(&mut rng)),
            x: DMatrix::from_fn(n, 4, |_, _| f64::std_normal(&mut rng)),
            w: DMatrix::zeros(n, 1),
            ylag: DMatrix::from_fn(n, m, |_, _| f64::std_normal(&mut rng)),
            dates: vec![String::new(); n],
        };
        let mut a = DMatrix::from_fn(m, 4, |_, _| 1.0);
        a.column_mut(0).fill(0.0);
        let regs = vec![RegimeParams::new(a.clone(), DMatrix::identity(m, m)).unwrap(); 2];
        let precs = vec![DMatrix::identity(m, m); 2];
        let post = cointegration_posterior(&d, &regs, &precs, &vec![0; n], 0.7).unwrap();
        assert_relative_eq!(post.mean, DVector::zeros(2), epsilon = 1e-14);
        assert_relative_eq!(post.covariance(), DMatrix::identity(2, 2) * 0.7, epsilon = 1e-14);
        let (b, _) = draw_cointegration(&d, &regs, &precs, &vec![0; n], 1e-12, &mut rng).unwrap();
        assert!(b.xi.amax() < 1e-4);
    }

    #[test]
    fn common_mean_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let a0 = DVector::from_vec(vec![0.0, 1.0]);
        let a1 = DVector::from_vec(vec![4.0, 1.0]);
        let tau = DVector::from_vec(vec![1.0, 2.0]);
        let (mut s, mut ss) = ([0.0; 2], [0.0; 2]);
        for _ in 0..n {
            let d = draw_common_mean(&a0, &a1, &tau, &mut rng);
            for i in 0..2 {
                s[i] += d[i];
                ss[i] += d[i] * d[i];
            }
        }
        let mean = [s[0] / n as f64, s[1] / n as f64];
        let var1 = ss[1] / n as f64 - mean[1] * mean[1];
        assert!((mean[0] - 2.0).abs() < 0.01);
        assert!((mean[1] - 1.0).abs() < 0.01);
        assert!((var1 - 1.0).abs() < 0.02);
    }

    #[test]
    fn tau_mean_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = DVector::from_element(1, 0.0);
        let a0 = DVector::from_element(1, 1.0);
        let a1 = DVector::from_element(1, -1.0);
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += draw_tau(&a, &a0, &a1, 0.1, 0.1, &mut rng).unwrap()[0];
        }
        let expected = oracle::gig_moment(-0.9, 2.0, 0.2, 1.0);
        assert!((sum / n as f64 - expected).abs() / expected < 0.01, "{} vs {expected}", sum / n as f64);
    }

    #[test]
    fn tau_at_homogeneous_boundary_is_tiny_and_positive() {
        // chi is floored, so the draw comes from GIG(d0 - 1, 1e-10, 2 d1), which has almost
        // all of its mass near zero.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = DVector::from_element(200, 0.5);
        let t = draw_tau(&a, &a, &a, 0.1, 0.1, &mut rng).unwrap();
        assert!(t.iter().all(|v| *v > 0.0));
        let mut sorted: Vec<f64> = t.iter().cloned().collect();
        sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!(sorted[100] < 1e-6, "median {}", sorted[100]);
    }

    #[test]
    fn sigma_scalar_conjugate_posterior() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 100;
        let d = scalar_design(n, 0.0, 2.0, &mut rng);
        let states = vec![0u8; n];
        let a = DMatrix::zeros(1, 1);
        let s_common = DMatrix::from_element(1, 1, 1.5);
        let params = sigma_posterior(&d, &states, 0, &a, &s_common, 2.5).unwrap();
        let ssr: f64 = d.dy.iter().map(|v| v * v).sum();
        assert_relative_eq!(params.shape, 2.5 + 50.0, epsilon = 1e-14);
        assert_relative_eq!(params.rate[(0, 0)], 1.5 + 0.5 * ssr, epsilon = 1e-12);
        let draws = 100_000;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..draws {
            let (_, p) = draw_sigma(&d, &states, 0, &a, &s_common, 2.5, &mut rng).unwrap();
            acc += p[(0, 0)];
            acc2 += p[(0, 0)].powi(2);
        }
        let mean = acc / draws as f64;
        let sd = (acc2 / draws as f64 - mean * mean).sqrt();
        let exact = params.shape / params.rate[(0, 0)];
        assert!((mean - exact).abs() < 3.0 * sd / (draws as f64).sqrt(), "{mean} vs {exact}");
        assert!((exact - 0.25).abs() < 0.1);
    }

    #[test]
    fn sigma_empty_regime_is_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = scalar_design(10, 0.0, 1.0, &mut rng);
        let s_common = DMatrix::from_row_slice(1, 1, &[2.0]);
        let p = sigma_posterior(&d, &[0; 10], 1, &DMatrix::zeros(1, 1), &s_common, 5.0).unwrap();
        assert_eq!(p.shape, 5.0);
        assert_relative_eq!(p.mean().unwrap()[(0, 0)], 2.5, epsilon = 1e-14);
    }

    #[test]
    fn common_scale_shape_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]);
        let p0 = DMatrix::from_row_slice(2, 2, &[2.0, -0.3, -0.3, 1.0]);
        let p1 = DMatrix::from_row_slice(2, 2, &[0.7, 0.1, 0.1, 1.4]);
        let params = common_scale_posterior(&[p0.clone(), p1.clone()], &q, 1.0, 3.0).unwrap();
        assert_eq!(params.shape, 7.0);
        let target = params.mean().unwrap();
        let n = 100_000;
        let mut acc = DMatrix::zeros(2, 2);
        for _ in 0..n {
            acc += draw_common_scale(&[p0.clone(), p1.clone()], &q, 1.0, 3.0, &mut rng).unwrap();
        }
        let emp = acc / n as f64;
        assert!((emp - &target).norm() / target.norm() < 0.02);
    }

    #[test]
    fn q_matrix_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 300;
        let levels = DMatrix::from_fn(n, 6, |_, _| f64::std_normal(&mut rng));
        let data = Dataset::new(levels, (0..6).map(|i| i.to_string()).collect(), (0..n).map(|i| i.to_string()).collect()).unwrap();
        let cfg = ModelConfig::default();
        let pr = Priors::from_config(&cfg, &data).unwrap();
        assert_eq!(pr.s_shape, 5.0);
        assert_eq!(pr.q_shape, 3.0);
        let var = crate::model::ols_residual_variances(&data, 4).unwrap();
        assert_relative_eq!(pr.q_matrix[(2, 2)], 100.0 * 5.0 / 3.0 * var.values[2], epsilon = 1e-12);
        let cfg = ModelConfig { q_scale: QScale::Reciprocal, ..cfg };
        let pr = Priors::from_config(&cfg, &data).unwrap();
        assert_relative_eq!(pr.q_matrix[(2, 2)], 100.0 * 3.0 / 5.0 / var.values[2], epsilon = 1e-12);
    }
}
