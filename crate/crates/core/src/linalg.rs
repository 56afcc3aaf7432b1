//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<T: Real>(m: &DMatrix<T>, what: &str) -> Result<DMatrix<T>> {
    factor(m, what).map(|c| c.unpack())
}

pub(crate) fn factor<T: Real>(m: &DMatrix<T>, what: &str) -> Result<Cholesky<T, Dyn>> {
    if !m.is_square() {
        return Err(Error::dim(format!("{what} is {}x{}, expected square", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{what} has non-finite entries")));
    }
    Cholesky::new(m.clone()).ok_or_else(|| Error::Decomposition(what.to_string()))
}

/// Inverse of an SPD matrix through its Cholesky factor; the result is exactly symmetric.
pub fn spd_inverse<T: Real>(m: &DMatrix<T>, what: &str) -> Result<DMatrix<T>> {
    let mut inv = factor(m, what)?.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

pub fn symmetrize<T: Real>(m: &mut DMatrix<T>) {
    let n = m.nrows();
    let half = T::lit(0.5);
    for i in 0..n {
        for j in 0..i {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Cholesky of a posterior precision, adding diagonal jitter when the plain factorization
/// fails. Returns the factor and whether jitter was needed.
pub(crate) fn factor_with_floor<T: Real>(
    precision: &DMatrix<T>,
    what: &str,
) -> Result<(Cholesky<T, Dyn>, bool)> {
    match factor(precision, what) {
        Ok(c) => Ok((c, false)),
        Err(Error::Decomposition(_)) => {
            let scale = precision
                .diagonal()
                .iter()
                .fold(T::zero(), |acc, v| acc.max(v.abs()))
                .max(T::one());
            let mut jitter = scale * T::lit(1e-10);
            for _ in 0..12 {
                let mut p = precision.clone();
                for i in 0..p.nrows() {
                    p[(i, i)] += jitter;
                }
                if let Some(c) = Cholesky::new(p) {
                    log::warn!("{what}: not positive definite, applied diagonal floor {jitter}");
                    return Ok((c, true));
                }
                jitter *= T::lit(10.0);
            }
            Err(Error::Decomposition(what.to_string()))
        }
        Err(e) => Err(e),
    }
}

/// Gaussian in canonical form: precision `P` and mean `P^{-1} b`, stored via the
/// Cholesky factor of `P`.
#[derive(Debug, Clone)]
pub struct GaussianPosterior<T: Real> {
    pub mean: DVector<T>,
    /// Lower Cholesky factor of the precision.
    pub precision_chol: DMatrix<T>,
    /// Whether a diagonal floor had to be added to the precision.
    pub floored: bool,
}

impl<T: Real> GaussianPosterior<T> {
    pub fn from_canonical(precision: &DMatrix<T>, rhs: &DVector<T>, what: &str) -> Result<Self> {
        let (chol, floored) = factor_with_floor(precision, what)?;
        let mean = chol.solve(rhs);
        Ok(Self { mean, precision_chol: chol.unpack(), floored })
    }

    pub fn covariance(&self) -> DMatrix<T> {
        let n = self.mean.len();
        let l = &self.precision_chol;
        let linv = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .expect("triangular factor has positive diagonal");
        let mut cov = linv.transpose() * linv;
        symmetrize(&mut cov);
        cov
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<T> {
        let z = DVector::from_fn(self.mean.len(), |_, _| T::std_normal(rng));
        let shift = self
            .precision_chol
            .tr_solve_lower_triangular(&z)
            .expect("triangular factor has positive diagonal");
        &self.mean + shift
    }
}

/// `log |M|` from a lower Cholesky factor of `M`.
pub fn log_det_from_chol<T: Real>(l: &DMatrix<T>) -> T {
    l.diagonal().iter().fold(T::zero(), |acc, d| acc + d.ln()) * T::lit(2.0)
}
