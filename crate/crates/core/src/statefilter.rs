//! Regime-path inference under probit time-varying transition probabilities:
//! Hamilton filter, forward-filtering backward-sampling and the probit update of the
//! transition coefficients.
//!
//! Convention: `Pr(S_t = 1 | S_{t-1} = i) = Φ(c_{0i} + γ' w_t)`, so regime 1 is the
//! regime that the probit index pushes towards.

use nalgebra::{DMatrix, DVector, Matrix2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{normal_cdf, sample_truncated_normal, TruncSide};
use crate::error::{Error, Result};
use crate::linalg::GaussianPosterior;
use crate::model::InitialDistribution;
use crate::scalar::Real;

/// Probit coefficients `Γ = (c_00, c_01, γ')'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionParams<T: Real> {
    pub c0: [T; 2],
    pub gamma: DVector<T>,
}

impl<T: Real> TransitionParams<T> {
    pub fn zeros(r: usize) -> Self {
        Self { c0: [T::zero(); 2], gamma: DVector::zeros(r) }
    }

    pub fn rank(&self) -> usize {
        self.gamma.len()
    }

    /// Stacked `(c_00, c_01, γ')'`.
    pub fn stacked(&self) -> DVector<T> {
        let mut v = DVector::zeros(2 + self.rank());
        v[0] = self.c0[0];
        v[1] = self.c0[1];
        v.rows_mut(2, self.rank()).copy_from(&self.gamma);
        v
    }

    pub fn from_stacked(v: &DVector<T>) -> Self {
        Self { c0: [v[0], v[1]], gamma: v.rows(2, v.len() - 2).into_owned() }
    }

    /// Probability of entering regime 1 from regime `from`.
    pub fn enter_prob(&self, from: usize, w: &DVector<T>) -> T {
        normal_cdf(self.c0[from] + self.gamma.dot(w))
    }

    /// Regime relabelling: `Φ(c) ↔ 1 − Φ(−c)` maps `(c_00, c_01, γ)` to `(−c_01, −c_00, −γ)`.
    pub fn swapped(&self) -> Self {
        Self { c0: [-self.c0[1], -self.c0[0]], gamma: -&self.gamma }
    }

    pub fn is_finite(&self) -> bool {
        self.c0.iter().all(|c| c.is_finite()) && self.gamma.iter().all(|g| g.is_finite())
    }
}

/// 2×2 transition matrix with rows `(1 − p_i, p_i)`, `p_i = Φ(c_{0i} + γ'w)`.
pub fn transition_matrix<T: Real>(params: &TransitionParams<T>, w: &DVector<T>) -> Matrix2<T> {
    let p0 = params.enter_prob(0, w);
    let p1 = params.enter_prob(1, w);
    Matrix2::new(T::one() - p0, p0, T::one() - p1, p1)
}

/// Per-period transition matrices; entry `t` governs the move from `t − 1` to `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrixSeq<T: Real> {
    pub mats: Vec<Matrix2<T>>,
}

impl<T: Real> TransitionMatrixSeq<T> {
    /// One matrix per row of `w` (the cointegration errors of the effective sample).
    pub fn from_params(params: &TransitionParams<T>, w: &DMatrix<T>) -> Self {
        let mats = (0..w.nrows())
            .map(|t| transition_matrix(params, &w.row(t).transpose()))
            .collect();
        Self { mats }
    }

    pub fn constant(p: Matrix2<T>, n: usize) -> Self {
        Self { mats: vec![p; n] }
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    /// Time average of the matrices that enter the recursion (`t ≥ 1`).
    pub fn average(&self) -> Matrix2<T> {
        let used = if self.mats.len() > 1 { &self.mats[1..] } else { &self.mats[..] };
        let sum = used.iter().fold(Matrix2::zeros(), |acc, p| acc + p);
        sum / T::lit(used.len().max(1) as f64)
    }
}

/// Stationary distribution of a 2×2 stochastic matrix; uniform if the chain is reducible.
pub fn ergodic<T: Real>(p: &Matrix2<T>) -> [T; 2] {
    let (p01, p10) = (p[(0, 1)], p[(1, 0)]);
    let denom = p01 + p10;
    if denom <= T::lit(T::TINY) {
        return [T::lit(0.5); 2];
    }
    [p10 / denom, p01 / denom]
}

pub fn initial_distribution<T: Real>(kind: InitialDistribution, pmats: &TransitionMatrixSeq<T>) -> [T; 2] {
    match kind {
        InitialDistribution::Uniform => [T::lit(0.5); 2],
        InitialDistribution::Ergodic => ergodic(&pmats.average()),
    }
}

/// Regime path and the probit latent utilities for `t = 1, ..., T_eff − 1` (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePath<T: Real> {
    pub s: Vec<u8>,
    pub zstar: Vec<T>,
}

impl<T: Real> StatePath<T> {
    pub fn new(s: Vec<u8>) -> Self {
        let n = s.len().saturating_sub(1);
        Self { s, zstar: vec![T::zero(); n] }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn count(&self, regime: u8) -> usize {
        self.s.iter().filter(|&&s| s == regime).count()
    }

    pub fn swap_labels(&mut self) {
        self.s.iter_mut().for_each(|s| *s = 1 - *s);
        self.zstar.iter_mut().for_each(|z| *z = -*z);
    }

    /// True when every latent utility has the sign implied by the realized state.
    pub fn signs_consistent(&self) -> bool {
        self.zstar.iter().enumerate().all(|(i, z)| {
            if self.s[i + 1] == 1 {
                *z > T::zero()
            } else {
                *z <= T::zero()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput<T: Real> {
    /// `T_eff × 2` filtered probabilities `Pr(S_t = j | data_{1:t})`.
    pub filtered: DMatrix<T>,
    pub log_likelihood: T,
}

/// Forward recursion in log space with per-step normalization. `init` is the
/// distribution of the first state; `pmats.mats[0]` is not used.
pub fn hamilton_filter<T: Real>(
    loglik: &DMatrix<T>,
    pmats: &TransitionMatrixSeq<T>,
    init: [T; 2],
) -> Result<FilterOutput<T>> {
    let n = loglik.nrows();
    if loglik.ncols() != 2 || pmats.len() != n {
        return Err(Error::dim(format!(
            "likelihood is {}x{}, {} transition matrices",
            n,
            loglik.ncols(),
            pmats.len()
        )));
    }
    let mut filtered = DMatrix::zeros(n, 2);
    let mut total = T::zero();
    let mut prev = init;
    for t in 0..n {
        let pred = if t == 0 {
            init
        } else {
            let p = &pmats.mats[t];
            [
                prev[0] * p[(0, 0)] + prev[1] * p[(1, 0)],
                prev[0] * p[(0, 1)] + prev[1] * p[(1, 1)],
            ]
        };
        let lj = [pred[0].ln() + loglik[(t, 0)], pred[1].ln() + loglik[(t, 1)]];
        if lj.iter().any(|v| !v.is_finite() && !(*v < T::zero())) {
            return Err(Error::Numerical(format!("non-finite likelihood at t = {t}")));
        }
        if !lj.iter().any(|v| v.is_finite()) {
            return Err(Error::Underflow { t });
        }
        let max = lj[0].max(lj[1]);
        let e = [(lj[0] - max).exp(), (lj[1] - max).exp()];
        let sum = e[0] + e[1];
        total += max + sum.ln();
        prev = [e[0] / sum, e[1] / sum];
        filtered[(t, 0)] = prev[0];
        filtered[(t, 1)] = prev[1];
    }
    Ok(FilterOutput { filtered, log_likelihood: total })
}

/// Smoothed probabilities `Pr(S_t = j | data_{1:T})` by the backward (Kim) recursion.
pub fn smoothed_probabilities<T: Real>(filtered: &DMatrix<T>, pmats: &TransitionMatrixSeq<T>) -> DMatrix<T> {
    let n = filtered.nrows();
    let mut out = filtered.clone();
    for t in (0..n.saturating_sub(1)).rev() {
        let p = &pmats.mats[t + 1];
        let f = [filtered[(t, 0)], filtered[(t, 1)]];
        let mut acc = [T::zero(); 2];
        for j in 0..2 {
            let pred = f[0] * p[(0, j)] + f[1] * p[(1, j)];
            if pred <= T::zero() {
                continue;
            }
            let ratio = out[(t + 1, j)] / pred;
            for (i, a) in acc.iter_mut().enumerate() {
                *a += f[i] * p[(i, j)] * ratio;
            }
        }
        let sum = acc[0] + acc[1];
        out[(t, 0)] = acc[0] / sum;
        out[(t, 1)] = acc[1] / sum;
    }
    out
}

fn draw_binary<T: Real, R: Rng + ?Sized>(w0: T, w1: T, rng: &mut R) -> u8 {
    let p1 = w1 / (w0 + w1);
    u8::from(T::std_uniform(rng) < p1)
}

/// Backward sampling of a regime path from filtered probabilities.
pub fn ffbs_sample<T: Real, R: Rng + ?Sized>(
    filtered: &DMatrix<T>,
    pmats: &TransitionMatrixSeq<T>,
    rng: &mut R,
) -> Vec<u8> {
    let n = filtered.nrows();
    let mut s = vec![0u8; n];
    if n == 0 {
        return s;
    }
    s[n - 1] = draw_binary(filtered[(n - 1, 0)], filtered[(n - 1, 1)], rng);
    for t in (0..n - 1).rev() {
        let j = s[t + 1] as usize;
        let p = &pmats.mats[t + 1];
        let w0 = p[(0, j)] * filtered[(t, 0)];
        let w1 = p[(1, j)] * filtered[(t, 1)];
        s[t] = draw_binary(w0, w1, rng);
    }
    s
}

/// Draws `z*_t` for `t = 1, ..., T_eff − 1` from truncated normals around the current
/// probit index.
pub fn draw_latent_utilities<T: Real, R: Rng + ?Sized>(
    states: &[u8],
    w: &DMatrix<T>,
    params: &TransitionParams<T>,
    rng: &mut R,
) -> Result<Vec<T>> {
    (1..states.len())
        .map(|t| {
            let mu = params.c0[states[t - 1] as usize] + params.gamma.dot(&w.row(t).transpose());
            let side = if states[t] == 1 { TruncSide::Positive } else { TruncSide::NonPositive };
            sample_truncated_normal(mu, side, rng)
        })
        .collect()
}

/// Gaussian full conditional of `Γ` given latent utilities, with prior `N(0, v_gamma I)`.
/// With `pin_gamma` only the two intercepts are free (γ fixed at 0).
pub fn transition_posterior<T: Real>(
    states: &[u8],
    w: &DMatrix<T>,
    zstar: &[T],
    v_gamma: T,
    pin_gamma: bool,
) -> Result<GaussianPosterior<T>> {
    if zstar.len() + 1 != states.len() || w.nrows() != states.len() {
        return Err(Error::dim("state path, latent utilities and cointegration errors disagree"));
    }
    let r = w.ncols();
    let dim = if pin_gamma { 2 } else { 2 + r };
    let mut precision = DMatrix::identity(dim, dim) / v_gamma;
    let mut rhs = DVector::zeros(dim);
    let mut row = DVector::zeros(dim);
    for t in 1..states.len() {
        row.fill(T::zero());
        row[states[t - 1] as usize] = T::one();
        if !pin_gamma {
            row.rows_mut(2, r).copy_from(&w.row(t).transpose());
        }
        precision.ger(T::one(), &row, &row, T::one());
        rhs.axpy(zstar[t - 1], &row, T::one());
    }
    GaussianPosterior::from_canonical(&precision, &rhs, "transition coefficient precision")
}

/// Probit data-augmentation step: fresh `z*` given the current coefficients, then a
/// draw of the coefficients given `z*`.
pub fn draw_transition_params<T: Real, R: Rng + ?Sized>(
    states: &[u8],
    w: &DMatrix<T>,
    current: &TransitionParams<T>,
    v_gamma: T,
    pin_gamma: bool,
    rng: &mut R,
) -> Result<(TransitionParams<T>, Vec<T>)> {
    let zstar = draw_latent_utilities(states, w, current, rng)?;
    let post = transition_posterior(states, w, &zstar, v_gamma, pin_gamma)?;
    let draw = post.sample(rng);
    let params = if pin_gamma {
        TransitionParams { c0: [draw[0], draw[1]], gamma: DVector::zeros(w.ncols()) }
    } else {
        TransitionParams::from_stacked(&draw)
    };
    Ok((params, zstar))
}
