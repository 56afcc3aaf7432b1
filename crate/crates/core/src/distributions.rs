//! Random variate generators and densities used by the Gibbs sampler.
//!
//! Conventions:
//! * Wishart is parameterized by *rate*: `p(X) ∝ |X|^(s-(m+1)/2) exp(-tr(S X))`, so
//!   `E[X] = s S^-1`. This equals the textbook Wishart with `n = 2s` degrees of
//!   freedom and scale `V = (2S)^-1`.
//! * GIG(p, chi, psi) has density `∝ x^(p-1) exp(-(chi/x + psi x)/2)` on `x > 0`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Standard normal CDF, accurate in the far tails.
pub fn normal_cdf<T: Real>(x: T) -> T {
    use libm::erfc;
    let v = x.as_f64() / std::f64::consts::SQRT_2;
    // erfc is evaluated on the tail side only; it loses accuracy for negative arguments.
    T::lit(if v < 0.0 { 0.5 * erfc(-v) } else { 1.0 - 0.5 * erfc(v) })
}

pub fn normal_log_pdf<T: Real>(x: T, mean: T, var: T) -> T {
    let d = x - mean;
    -T::lit(0.5) * (T::two_pi() * var).ln() - d * d / (T::lit(2.0) * var)
}

/// Log density of a location-scale Student-t.
pub fn student_t_log_pdf<T: Real>(x: T, loc: T, scale: T, dof: T) -> T {
    use libm::lgamma as ln_gamma;
    let nu = dof.as_f64();
    let z = ((x - loc) / scale).as_f64();
    let v = ln_gamma((nu + 1.0) / 2.0)
        - ln_gamma(nu / 2.0)
        - 0.5 * (nu * std::f64::consts::PI).ln()
        - (nu + 1.0) / 2.0 * (z * z / nu).ln_1p();
    T::lit(v) - scale.ln()
}

/// Draws from `N(mean, L L')` given a lower-triangular `L`. Zero pivots give a
/// degenerate (exact) coordinate.
pub fn sample_mvn<T: Real, R: Rng + ?Sized>(
    mean: &DVector<T>,
    cov_chol: &DMatrix<T>,
    rng: &mut R,
) -> Result<DVector<T>> {
    let n = mean.len();
    if cov_chol.nrows() != n || cov_chol.ncols() != n {
        return Err(Error::dim(format!(
            "mean has length {n}, factor is {}x{}",
            cov_chol.nrows(),
            cov_chol.ncols()
        )));
    }
    if mean.iter().chain(cov_chol.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("sample_mvn: non-finite input"));
    }
    for i in 0..n {
        if cov_chol[(i, i)] < T::zero() {
            return Err(Error::invalid("sample_mvn: negative pivot in covariance factor"));
        }
        if (i + 1..n).any(|j| cov_chol[(i, j)] != T::zero()) {
            return Err(Error::invalid("sample_mvn: covariance factor is not lower triangular"));
        }
    }
    let z = DVector::from_fn(n, |_, _| T::std_normal(rng));
    Ok(mean + cov_chol * z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WishartParams<T: Real> {
    /// Shape `s`; must exceed `(m-1)/2`.
    pub shape: T,
    /// Symmetric positive definite rate matrix `S`.
    pub rate: DMatrix<T>,
}

impl<T: Real> WishartParams<T> {
    pub fn new(shape: T, rate: DMatrix<T>) -> Result<Self> {
        let p = Self { shape, rate };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.rate.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.rate.nrows();
        if !self.rate.is_square() {
            return Err(Error::dim("Wishart rate matrix must be square"));
        }
        if !self.shape.is_finite() || self.shape <= T::lit((m as f64 - 1.0) / 2.0) {
            return Err(Error::invalid(format!(
                "Wishart shape {} must exceed (m-1)/2 = {}",
                self.shape,
                (m as f64 - 1.0) / 2.0
            )));
        }
        Ok(())
    }

    pub fn mean(&self) -> Result<DMatrix<T>> {
        Ok(linalg::spd_inverse(&self.rate, "Wishart rate")? * self.shape)
    }
}

/// Bartlett decomposition with `n = 2s` and `V = (2S)^-1`.
pub fn sample_wishart<T: Real, R: Rng + ?Sized>(
    params: &WishartParams<T>,
    rng: &mut R,
) -> Result<DMatrix<T>> {
    params.validate()?;
    let m = params.dim();
    let l_rate = linalg::cholesky(&params.rate, "Wishart rate")?;
    let dof = params.shape * T::lit(2.0);
    let mut a = DMatrix::<T>::zeros(m, m);
    for i in 0..m {
        // chi-square(dof - i) = 2 Gamma((dof - i)/2, 1)
        let k = (dof - T::lit(i as f64)) * T::lit(0.5);
        a[(i, i)] = (T::std_gamma(k, rng) * T::lit(2.0)).sqrt();
        for j in 0..i {
            a[(i, j)] = T::std_normal(rng);
        }
    }
    // (2S)^-1 = (1/2) L^-T L^-1, so L^-T A / sqrt(2) is a square root of V.
    let root = l_rate
        .tr_solve_lower_triangular(&a)
        .ok_or_else(|| Error::Decomposition("Wishart rate".into()))?;
    let mut x = (&root * root.transpose()) * T::lit(0.5);
    linalg::symmetrize(&mut x);
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GigParams<T: Real> {
    pub p: T,
    pub chi: T,
    pub psi: T,
}

impl<T: Real> GigParams<T> {
    pub fn new(p: T, chi: T, psi: T) -> Result<Self> {
        let g = Self { p, chi, psi };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let (p, chi, psi) = (self.p, self.chi, self.psi);
        let z = T::zero();
        let finite = p.is_finite() && chi.is_finite() && psi.is_finite();
        let ok = finite
            && chi >= z
            && psi >= z
            && ((chi > z && psi > z) || (chi > z && psi == z && p < z) || (chi == z && psi > z && p > z));
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("GIG parameters out of range: p={p}, chi={chi}, psi={psi}")))
        }
    }

    /// Unnormalized log density.
    pub fn log_kernel(&self, x: T) -> T {
        (self.p - T::one()) * x.ln() - T::lit(0.5) * (self.chi / x + self.psi * x)
    }
}

/// Draws from GIG(p, chi, psi).
///
/// The boundary cases reduce to Gamma (`chi = 0`) and inverse Gamma (`psi = 0`). Otherwise
/// the draw is `sqrt(chi/psi) * Y` with `Y` from the one-parameter family
/// `y^(λ-1) exp(-ω(y + 1/y)/2)`, `ω = sqrt(chi psi)`, using `1/Y` for negative `λ`.
/// The generator for `Y` follows Hörmann & Leydold (2014): ratio-of-uniforms with mode
/// shift for large `λ` or `ω`, without shift in the middle range, and a three-piece
/// rejection hat for `λ < 1` with small `ω`, which is where the shrinkage scales live.
/// Internal arithmetic is carried out in `f64`.
pub fn sample_gig<T: Real, R: Rng + ?Sized>(params: &GigParams<T>, rng: &mut R) -> Result<T> {
    params.validate()?;
    let p = params.p.as_f64();
    let chi = params.chi.as_f64();
    let psi = params.psi.as_f64();

    let x = if chi == 0.0 {
        // x^(p-1) exp(-psi x / 2): Gamma(p, rate psi/2)
        f64::std_gamma(p, rng) / (0.5 * psi)
    } else if psi == 0.0 {
        // x^(p-1) exp(-chi / (2x)): inverse Gamma(-p, scale chi/2)
        (0.5 * chi) / f64::std_gamma(-p, rng)
    } else {
        let lambda = p.abs();
        let omega = (chi * psi).sqrt();
        let alpha = (chi / psi).sqrt();
        let y = if lambda > 2.0 || omega > 3.0 {
            gig_rou_shift(lambda, omega, rng)
        } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
            gig_rou_noshift(lambda, omega, rng)
        } else if omega > 0.0 {
            gig_concave_hat(lambda, omega, rng)
        } else {
            return Err(Error::invalid("GIG: omega underflowed to zero"));
        };
        if p < 0.0 {
            alpha / y
        } else {
            alpha * y
        }
    };
    let x = T::lit(x);
    if x > T::zero() && x.is_finite() {
        Ok(x)
    } else {
        // Only reachable through over/underflow when casting to a narrower scalar.
        Err(Error::Numerical(format!("GIG draw {x} not representable for {params:?}")))
    }
}

fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0) * (lambda - 1.0) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda) * (1.0 - lambda) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

fn gig_rou_noshift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0) * (lambda + 1.0) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * f64::std_uniform(rng);
        let v = f64::std_uniform(rng);
        let x = u / v;
        if v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn gig_rou_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);

    // Extremes of v(x)(x - xm) are the roots of a cubic in (0, xm) and (xm, inf).
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();

    loop {
        let u = uminus + f64::std_uniform(rng) * (uplus - uminus);
        let v = f64::std_uniform(rng);
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// Rejection from a hat that is constant below the point `x0 = ω/(1-λ)`, follows
/// `x^(λ-1)` up to `2/ω` and `exp(-ω x / 2)` beyond. Requires `0 <= λ < 1`.
fn gig_concave_hat<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let xm = gig_mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let two_over_omega = 2.0 / omega;

    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;
    let (k1, a1, k2, a2) = if x0 >= two_over_omega {
        let k2 = x0.powf(lambda - 1.0);
        (0.0, 0.0, k2, k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega)
    } else {
        let k1 = (-omega).exp();
        let a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * (two_over_omega.powf(lambda) - x0.powf(lambda))
        };
        let k2 = two_over_omega.powf(lambda - 1.0);
        (k1, a1, k2, k2 * 2.0 * (-1.0f64).exp() / omega)
    };
    let total = a0 + a1 + a2;

    loop {
        let mut v = total * f64::std_uniform(rng);
        let (x, hx) = if v <= a0 {
            (x0 * v / a0, k0)
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    let x = omega * (omega.exp() * v).exp();
                    (x, k1 / x)
                } else {
                    let x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    (x, k1 * x.powf(lambda - 1.0))
                }
            } else {
                v -= a1;
                let lo = x0.max(two_over_omega);
                let x = -two_over_omega * ((-omega / 2.0 * lo).exp() - omega / (2.0 * k2) * v).ln();
                (x, k2 * (-omega / 2.0 * x).exp())
            }
        };
        let u = f64::std_uniform(rng) * hx;
        if x > 0.0 && u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TruncSide {
    /// Support `(0, ∞)`.
    Positive,
    /// Support `(-∞, 0]`.
    NonPositive,
}

/// Draws from `N(mu, 1)` restricted to one half-line.
///
/// Uses plain rejection when the kept side carries at least half the mass and an
/// exponential proposal (Robert, 1995) in the tail, so the expected number of trials is
/// bounded for every `mu`.
pub fn sample_truncated_normal<T: Real, R: Rng + ?Sized>(
    mu: T,
    side: TruncSide,
    rng: &mut R,
) -> Result<T> {
    if !mu.is_finite() {
        return Err(Error::invalid("sample_truncated_normal: non-finite mean"));
    }
    Ok(match side {
        TruncSide::Positive => positive_part(mu, rng),
        TruncSide::NonPositive => -positive_part(-mu, rng),
    })
}

// N(mu, 1) conditioned on x > 0.
fn positive_part<T: Real, R: Rng + ?Sized>(mu: T, rng: &mut R) -> T {
    if mu >= T::zero() {
        loop {
            let x = mu + T::std_normal(rng);
            if x > T::zero() {
                return x;
            }
        }
    }
    // Lower truncation point of the standardized variable.
    let a = -mu;
    let alpha = (a + (a * a + T::lit(4.0)).sqrt()) * T::lit(0.5);
    loop {
        let x = T::std_exp(rng) / alpha;
        let d = a + x - alpha;
        if x > T::zero() && T::std_uniform(rng).ln() <= -d * d * T::lit(0.5) {
            return x;
        }
    }
}
