//! Forward simulation of the Markov-switching VECM and the fixtures used in tests.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CointegrationBasis, Dataset, IdentStatistic, ModelConfig, RegimeParams};
use crate::scalar::Real;
use crate::statefilter::TransitionParams;

/// Largest admissible modulus of the levels companion matrix.
pub const SPECTRAL_RADIUS_GUARD: f64 = 1.02;

/// Levels beyond this magnitude abort a simulation.
pub const EXPLOSIVE_BOUND: f64 = 1e10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueParams<T: Real> {
    pub regimes: Vec<RegimeParams<T>>,
    pub basis: CointegrationBasis<T>,
    pub transition: TransitionParams<T>,
    pub lags: usize,
    pub include_intercept: bool,
    /// Pre-sample levels `y_{-P}, ..., y_0`, one row each.
    pub initial_levels: DMatrix<T>,
    /// Regime before the first simulated period.
    pub initial_state: u8,
    pub names: Vec<String>,
}

impl<T: Real> TrueParams<T> {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    /// Model configuration matching the DGP's dimensions.
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            m: self.dim(),
            lags: self.lags,
            rank: self.rank(),
            include_intercept: self.include_intercept,
            ident_statistic: if self.include_intercept {
                IdentStatistic::Intercept
            } else {
                IdentStatistic::FittedMean
            },
            ..ModelConfig::default()
        }
    }

    /// Spectral radius of regime `j`'s dynamics written as a VAR(P+1) in levels.
    pub fn spectral_radius(&self, j: usize) -> f64 {
        let (m, p, r) = (self.dim(), self.lags, self.rank());
        let a = self.regimes[j].a.map(|v| v.as_f64());
        let b = self.basis.b().map(|v| v.as_f64());
        let pi = a.columns(0, r) * b.transpose();
        let lag = |i: usize| a.columns(r + (i - 1) * m, m).into_owned();
        // y_t = (I + Π + B_1) y_{t-1} + Σ_{i=2}^{P} (B_i − B_{i-1}) y_{t-i} − B_P y_{t-P-1}
        let order = p + 1;
        let mut comp = DMatrix::<f64>::zeros(m * order, m * order);
        for i in 1..=order {
            let block = if i == 1 {
                DMatrix::identity(m, m) + &pi + lag(1)
            } else if i <= p {
                lag(i) - lag(i - 1)
            } else {
                -lag(p)
            };
            comp.view_mut((0, (i - 1) * m), (m, m)).copy_from(&block);
        }
        for i in 1..order {
            comp.view_mut((i * m, (i - 1) * m), (m, m)).fill_with_identity();
        }
        comp.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, r) = (self.dim(), self.rank());
        let kx = r + m * self.lags + usize::from(self.include_intercept);
        if self.regimes.len() != 2 {
            return Err(Error::invalid("a DGP needs exactly two regimes"));
        }
        for reg in &self.regimes {
            if reg.a.shape() != (m, kx) || reg.sigma.shape() != (m, m) || reg.h.shape() != (m, m) {
                return Err(Error::dim(format!("regime matrices must be {m}x{kx} and {m}x{m}")));
            }
        }
        if self.transition.rank() != r {
            return Err(Error::dim("transition loadings must have r entries"));
        }
        if self.initial_levels.shape() != (self.lags + 1, m) {
            return Err(Error::dim(format!("initial levels must be {}x{m}", self.lags + 1)));
        }
        if self.names.len() != m {
            return Err(Error::dim("one name per variable is required"));
        }
        for j in 0..2 {
            let rho = self.spectral_radius(j);
            if rho > SPECTRAL_RADIUS_GUARD {
                return Err(Error::invalid(format!("regime {j} has spectral radius {rho:.4} > {SPECTRAL_RADIUS_GUARD}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation<T: Real> {
    pub data: Dataset<T>,
    /// True regime of each row of `data`.
    pub states: Vec<u8>,
}

/// Quarterly labels `YYYY-Qq`, starting at `year`-Q`quarter`.
pub fn quarterly_dates(year: i32, quarter: u32, n: usize) -> Vec<String> {
    let start = year * 4 + (quarter as i32 - 1);
    (0..n as i32)
        .map(|i| {
            let k = start + i;
            format!("{}-Q{}", k.div_euclid(4), k.rem_euclid(4) + 1)
        })
        .collect()
}

/// Simulates `n` periods. State and shock draws use two generators seeded from `rng`.
pub fn simulate_msvecm<T: Real, R: Rng + ?Sized>(params: &TrueParams<T>, n: usize, rng: &mut R) -> Result<Simulation<T>> {
    let mut states = ChaCha8Rng::seed_from_u64(rng.next_u64());
    let mut shocks = ChaCha8Rng::seed_from_u64(rng.next_u64());
    simulate_with(params, n, &mut states, &mut shocks)
}

/// Simulation with separate generators for the regime path and for the innovations.
pub fn simulate_with<T: Real, R1: Rng + ?Sized, R2: Rng + ?Sized>(
    params: &TrueParams<T>,
    n: usize,
    state_rng: &mut R1,
    shock_rng: &mut R2,
) -> Result<Simulation<T>> {
    params.validate()?;
    let (m, p, r) = (params.dim(), params.lags, params.rank());
    let kx = r + m * p + usize::from(params.include_intercept);
    let b = params.basis.b();
    // history holds y_{-P}, ..., y_{t-1}
    let mut history: Vec<DVector<T>> = params.initial_levels.row_iter().map(|row| row.transpose()).collect();
    let mut levels = DMatrix::zeros(n, m);
    let mut path = Vec::with_capacity(n);
    let mut prev_state = params.initial_state as usize;
    let bound = T::lit(EXPLOSIVE_BOUND);
    for t in 0..n {
        let h = history.len();
        let ylag = &history[h - 1];
        let w = b.tr_mul(ylag);
        let mut x = DVector::zeros(kx);
        x.rows_mut(0, r).copy_from(&w);
        for lag in 1..=p {
            let d = &history[h - lag] - &history[h - lag - 1];
            x.rows_mut(r + (lag - 1) * m, m).copy_from(&d);
        }
        if params.include_intercept {
            x[kx - 1] = T::one();
        }
        let p1 = params.transition.enter_prob(prev_state, &w);
        let s = usize::from(T::std_uniform(state_rng) < p1);
        let eta = DVector::from_fn(m, |_, _| T::std_normal(shock_rng));
        let reg = &params.regimes[s];
        let y = ylag + &reg.a * x + &reg.h * eta;
        if y.iter().any(|v| !v.is_finite() || v.abs() > bound) {
            return Err(Error::Explosive { t });
        }
        levels.row_mut(t).copy_from(&y.transpose());
        history.push(y);
        path.push(s as u8);
        prev_state = s;
    }
    let data = Dataset::new(levels, params.names.clone(), quarterly_dates(1980, 1, n))?;
    Ok(Simulation { data, states: path })
}

fn regime<T: Real>(a: DMatrix<f64>, sigma: DMatrix<f64>) -> RegimeParams<T> {
    RegimeParams::new(a.map(T::lit), sigma.map(T::lit)).expect("fixture covariance is positive definite")
}

fn names(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("y{i}")).collect()
}

/// Canonical small fixture: `m = 3`, `r = 1`, `P = 1`, with intercept.
///
/// * `b = (1, −1, 0.5)'`
/// * loadings `λ_0 = (−0.30, 0.10, 0)'`, `λ_1 = (−0.10, 0.30, 0)'`
/// * common lag matrix `B_1` with diagonal `(0.2, 0.3, 0.1)` and a 0.05 spillover from `y1` to `y2`
/// * intercepts `(0, −0.05, 0.02)` in regime 0 and `(0, 0.25, 0.02)` in regime 1
/// * `Σ_0 = 0.01 R`, `Σ_1 = 0.04 R` with `R` a correlation matrix (ρ12 = 0.3, ρ23 = 0.2)
/// * probit `c_0 = (−1.6, 1.2)`, `γ = 0.5`; zero pre-sample levels, initial regime 0
pub fn default_test_params<T: Real>() -> TrueParams<T> {
    let lag = [[0.2, 0.0, 0.0], [0.05, 0.3, 0.0], [0.0, 0.0, 0.1]];
    let build = |lambda: [f64; 3], c: [f64; 3]| {
        DMatrix::from_fn(3, 5, |i, j| match j {
            0 => lambda[i],
            1..=3 => lag[i][j - 1],
            _ => c[i],
        })
    };
    let corr = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 1.0]);
    TrueParams {
        regimes: vec![
            regime(build([-0.30, 0.10, 0.0], [0.0, -0.05, 0.02]), &corr * 0.01),
            regime(build([-0.10, 0.30, 0.0], [0.0, 0.25, 0.02]), &corr * 0.04),
        ],
        basis: CointegrationBasis { xi: DMatrix::from_column_slice(2, 1, &[T::lit(-1.0), T::lit(0.5)]) },
        transition: TransitionParams { c0: [T::lit(-1.6), T::lit(1.2)], gamma: DVector::from_element(1, T::lit(0.5)) },
        lags: 1,
        include_intercept: true,
        initial_levels: DMatrix::zeros(2, 3),
        initial_state: 0,
        names: names(3),
    }
}

/// Fixture without intercept whose two regimes differ in exactly two of the twelve
/// coefficients (the loadings of `y1` and `y2`). Covariances also differ across regimes.
pub fn selection_test_params<T: Real>() -> TrueParams<T> {
    let base = default_test_params::<f64>();
    let strip = |a: &DMatrix<f64>| a.columns(0, 4).into_owned();
    let mut a0 = strip(&base.regimes[0].a);
    let mut a1 = strip(&base.regimes[0].a);
    a0[(0, 0)] = -0.35;
    a0[(1, 0)] = 0.0;
    a1[(0, 0)] = 0.0;
    a1[(1, 0)] = 0.35;
    TrueParams {
        regimes: vec![regime(a0, base.regimes[0].sigma.clone()), regime(a1, base.regimes[1].sigma.clone())],
        basis: CointegrationBasis { xi: base.basis.xi.map(T::lit) },
        transition: TransitionParams { c0: [T::lit(-1.6), T::lit(1.2)], gamma: DVector::zeros(1) },
        lags: 1,
        include_intercept: false,
        initial_levels: DMatrix::zeros(2, 3),
        initial_state: 0,
        names: names(3),
    }
}

/// Fixture whose regime switches are driven mostly by the cointegration error, so that a
/// model with time-varying transition probabilities has a forecasting edge.
pub fn tvp_forecast_params<T: Real>() -> TrueParams<T> {
    let mut p = default_test_params::<T>();
    p.transition = TransitionParams { c0: [T::lit(-0.8), T::lit(0.8)], gamma: DVector::from_element(1, T::lit(3.0)) };
    p
}

/// Scalar `w` path plus probit states for the transition-recovery check: `r = 3`,
/// `γ = (0.8, −0.5, 0)`, `c_0 = (−1.2, 0.6)`, `w_t ~ N(0, I_3)`.
pub fn probit_fixture<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (DMatrix<f64>, Vec<u8>, TransitionParams<f64>) {
    let truth = TransitionParams { c0: [-1.2, 0.6], gamma: DVector::from_vec(vec![0.8, -0.5, 0.0]) };
    let w = DMatrix::from_fn(n, 3, |_, _| f64::std_normal(rng));
    let mut s = vec![0u8; n];
    for t in 1..n {
        let p = truth.enter_prob(s[t - 1] as usize, &w.row(t).transpose());
        s[t] = u8::from(f64::std_uniform(rng) < p);
    }
    (w, s, truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fixtures_are_valid() {
        for p in [default_test_params::<f64>(), selection_test_params(), tvp_forecast_params()] {
            p.validate().unwrap();
            assert!(p.spectral_radius(0) <= SPECTRAL_RADIUS_GUARD);
            assert!(p.spectral_radius(1) <= SPECTRAL_RADIUS_GUARD);
        }
        let d = default_test_params::<f64>();
        assert_eq!(d.dim(), 3);
        let s = selection_test_params::<f64>();
        let diff = (&s.regimes[0].a - &s.regimes[1].a).iter().filter(|v| **v != 0.0).count();
        assert_eq!(s.regimes[0].a.len(), 12);
        assert_eq!(diff, 2);
        s.model_config().validate().unwrap();
    }

    #[test]
    fn cointegrated_system_has_unit_roots() {
        // m − r = 2 unit roots in the levels representation
        let p = default_test_params::<f64>();
        assert_relative_eq!(p.spectral_radius(0), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn explosive_guard() {
        let mut p = default_test_params::<f64>();
        p.regimes[0].a[(0, 0)] = 0.8;
        assert!(p.validate().is_err());
    }

    #[test]
    fn dates() {
        assert_eq!(quarterly_dates(1999, 3, 3), vec!["1999-Q3", "1999-Q4", "2000-Q1"]);
    }

    #[test]
    fn noiseless_path_matches_recursion() {
        let mut p = default_test_params::<f64>();
        for reg in p.regimes.iter_mut() {
            reg.sigma.fill(0.0);
            reg.h.fill(0.0);
        }
        p.transition = TransitionParams { c0: [-40.0, -40.0], gamma: DVector::zeros(1) };
        p.initial_levels = DMatrix::from_row_slice(2, 3, &[0.5, -0.2, 1.0, 0.7, 0.1, 0.9]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sim = simulate_msvecm(&p, 40, &mut rng).unwrap();
        assert!(sim.states.iter().all(|s| *s == 0));
        let a = &p.regimes[0].a;
        let b = DVector::from_vec(vec![1.0, -1.0, 0.5]);
        let (mut y2, mut y1) = (p.initial_levels.row(0).transpose(), p.initial_levels.row(1).transpose());
        for t in 0..40 {
            let w = b.dot(&y1);
            let d = &y1 - &y2;
            let mut next = y1.clone();
            for i in 0..3 {
                next[i] += a[(i, 0)] * w + a[(i, 4)];
                for j in 0..3 {
                    next[i] += a[(i, 1 + j)] * d[j];
                }
            }
            for i in 0..3 {
                assert_relative_eq!(sim.data.levels[(t, i)], next[i], epsilon = 1e-12);
            }
            y2 = y1;
            y1 = next;
        }
    }

    #[test]
    fn identical_regimes_ignore_state_draws() {
        let mut p = default_test_params::<f64>();
        p.regimes[1] = p.regimes[0].clone();
        let a = simulate_with(&p, 50, &mut ChaCha8Rng::seed_from_u64(1), &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = simulate_with(&p, 50, &mut ChaCha8Rng::seed_from_u64(2), &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_ne!(a.states, b.states);
        assert_eq!(a.data.levels, b.data.levels);
    }

    #[test]
    fn explosive_path_names_period() {
        let mut p = default_test_params::<f64>();
        p.regimes[0].a[(0, 4)] = 1e9;
        p.regimes[1].a[(0, 4)] = 1e9;
        let r = simulate_msvecm(&p, 30, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(matches!(r, Err(Error::Explosive { t }) if t > 0 && t < 30), "{r:?}");
    }

    #[test]
    fn transition_frequencies_follow_probit() {
        let p = default_test_params::<f64>();
        let n = 100_000;
        let sim = simulate_msvecm(&p, n, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = p.basis.b();
        // bins over w for transitions out of regime 0
        let mut bins: Vec<(f64, usize, usize)> = vec![(0.0, 0, 0); 8];
        let mut prev = p.initial_levels.row(1).transpose();
        let mut prev_s = 0usize;
        let edges = [-0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6];
        for t in 0..n {
            let w = b.tr_mul(&prev)[0];
            if prev_s == 0 {
                let k = edges.iter().filter(|e| w > **e).count();
                let p1 = p.transition.enter_prob(0, &DVector::from_element(1, w));
                bins[k].0 += p1;
                bins[k].1 += sim.states[t] as usize;
                bins[k].2 += 1;
            }
            prev = sim.data.levels.row(t).transpose();
            prev_s = sim.states[t] as usize;
        }
        for (expected, hits, count) in bins {
            if count > 2000 {
                let freq = hits as f64 / count as f64;
                assert!((freq - expected / count as f64).abs() < 0.02, "{freq} vs {}", expected / count as f64);
            }
        }
    }
}
