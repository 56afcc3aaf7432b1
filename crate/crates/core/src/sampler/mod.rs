//! Gibbs sampler for the hierarchical Markov-switching VECM.
//!
//! One sweep runs, in order: regime coefficients, cointegration vector, common mean,
//! shrinkage scales, regime covariances, common Wishart scale, regime path, and the
//! probit transition coefficients; the regime labels are then identified.

mod draws;
mod steps;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use draws::{ChainNotes, Draw, PosteriorDraws};
pub use steps::{
    cointegration_posterior, common_scale_posterior, draw_cointegration, draw_common_mean, draw_common_scale,
    draw_regime_coefficients, draw_sigma, draw_tau, regime_coefficient_posterior, sigma_posterior, HierarchyState,
    Priors, CHI_FLOOR,
};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{
    build_design, CointegrationBasis, Dataset, DesignData, IdentMode, IdentStatistic, ModelConfig, ModelVariant,
    RegimeParams,
};
use crate::scalar::Real;
use crate::statefilter::{
    draw_transition_params, ffbs_sample, hamilton_filter, initial_distribution, StatePath, TransitionMatrixSeq,
    TransitionParams,
};

/// Mutable state of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState<T: Real> {
    pub regimes: Vec<RegimeParams<T>>,
    /// `Σ_j⁻¹`, kept alongside `regimes`.
    pub precisions: Vec<DMatrix<T>>,
    pub hierarchy: HierarchyState<T>,
    pub basis: CointegrationBasis<T>,
    pub transition: TransitionParams<T>,
    pub states: StatePath<T>,
}

impl<T: Real> ChainState<T> {
    /// Relabels the two regimes.
    pub fn swap_regimes(&mut self) {
        self.regimes.swap(0, 1);
        self.precisions.swap(0, 1);
        self.states.swap_labels();
        self.transition = self.transition.swapped();
    }

    pub fn to_draw(&self) -> Draw<T> {
        Draw {
            coefficients: self.regimes.iter().map(|r| r.a.clone()).collect(),
            sigma: self.regimes.iter().map(|r| r.sigma.clone()).collect(),
            common_mean: self.hierarchy.a.clone(),
            tau: self.hierarchy.tau.clone(),
            common_scale: self.hierarchy.s_common.clone(),
            xi: self.basis.xi.clone(),
            transition: self.transition.clone(),
            states: self.states.s.clone(),
        }
    }

    fn vec_coefficients(&self, j: usize) -> DVector<T> {
        DVector::from_column_slice(self.regimes[j].a.as_slice())
    }
}

/// What happened during one sweep.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SweepReport {
    /// Blocks whose posterior precision needed a diagonal floor.
    pub floored: Vec<&'static str>,
    pub swapped: bool,
    pub rejected: bool,
}

/// Identification statistic of each regime (see [`IdentStatistic`]).
pub fn identification_statistics<T: Real>(
    chain: &ChainState<T>,
    design: &DesignData<T>,
    config: &ModelConfig,
) -> Vec<T> {
    let i = config.ident_var;
    chain
        .regimes
        .iter()
        .enumerate()
        .map(|(j, reg)| match config.ident_statistic {
            IdentStatistic::Intercept => reg.a[(i, reg.a.ncols() - 1)],
            IdentStatistic::FittedMean => {
                let mut rows = steps::regime_rows(&chain.states.s, j as u8);
                if rows.is_empty() {
                    rows = (0..design.n_obs()).collect();
                }
                let row = reg.a.row(i);
                let sum = rows.iter().fold(T::zero(), |acc, &t| acc + row.dot(&design.x.row(t)));
                sum / T::lit(rows.len().max(1) as f64)
            }
        })
        .collect()
}

/// Whether regime 0 has the lower identification statistic.
pub fn identification_holds<T: Real>(chain: &ChainState<T>, design: &DesignData<T>, config: &ModelConfig) -> bool {
    let stats = identification_statistics(chain, design, config);
    stats.len() < 2 || stats[0] <= stats[1]
}

/// Relabels the regimes when regime 0 has the higher statistic. Returns whether a swap
/// took place.
pub fn enforce_identification<T: Real>(chain: &mut ChainState<T>, design: &DesignData<T>, config: &ModelConfig) -> bool {
    if identification_holds(chain, design, config) {
        return false;
    }
    chain.swap_regimes();
    true
}

fn check_finite<'a, T: Real + 'a>(block: &str, values: impl IntoIterator<Item = &'a T>, sweep: usize) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { block: block.to_string(), sweep })
    }
}

/// Starting values: states split at the median change of the identification variable,
/// both regimes at the full-sample least-squares fit, `τ = 1`, `Ξ = 0`, `Γ = 0`.
pub fn initialize<T: Real>(design: &DesignData<T>, config: &ModelConfig, priors: &Priors<T>) -> Result<ChainState<T>> {
    let n = design.n_obs();
    let (m, kx) = (design.dy.ncols(), design.x.ncols());
    let regimes = config.regimes();
    let states = if regimes == 1 {
        vec![0u8; n]
    } else {
        let col: Vec<f64> = design.dy.column(config.ident_var).iter().map(|v| v.as_f64()).collect();
        let med = draws::median(col.clone());
        col.iter().map(|v| u8::from(*v > med)).collect()
    };

    let mut xtx = design.x.tr_mul(&design.x);
    let ridge = xtx.diagonal().amax().max(T::one()) * T::lit(1e-8);
    for i in 0..kx {
        xtx[(i, i)] += ridge;
    }
    let chol = linalg::factor(&xtx, "initial regressor cross-product")?;
    let a_ols = chol.solve(&design.x.tr_mul(&design.dy)).transpose();
    let resid = &design.dy - &design.x * a_ols.transpose();
    let dof = if n > kx { n - kx } else { n };
    let mut sigma = resid.tr_mul(&resid) / T::lit(dof as f64);
    let jitter = sigma.diagonal().amax().max(T::lit(1e-12)) * T::lit(1e-6);
    for i in 0..m {
        sigma[(i, i)] += jitter;
    }
    linalg::symmetrize(&mut sigma);
    let precision = linalg::spd_inverse(&sigma, "initial covariance")?;
    let reg = RegimeParams::new(a_ols.clone(), sigma.clone())?;

    let k = m * kx;
    let hierarchy = if config.variant == ModelVariant::Linear {
        HierarchyState {
            a: DVector::zeros(k),
            tau: DVector::from_element(k, priors.linear_prior_var),
            s_common: sigma.clone() * priors.s_shape,
        }
    } else {
        let tau0 = config.fixed_tau.map_or(T::one(), T::lit);
        HierarchyState {
            a: DVector::from_column_slice(a_ols.as_slice()),
            tau: DVector::from_element(k, tau0),
            s_common: sigma.clone() * priors.s_shape,
        }
    };
    Ok(ChainState {
        regimes: vec![reg; regimes],
        precisions: vec![precision; regimes],
        hierarchy,
        basis: CointegrationBasis::zeros(m, config.rank),
        transition: TransitionParams::zeros(config.rank),
        states: StatePath::new(states),
    })
}

/// One Gibbs sweep. `design` is kept in sync with `chain.basis`.
pub fn gibbs_sweep<T: Real, R: Rng + ?Sized>(
    chain: &mut ChainState<T>,
    design: &mut DesignData<T>,
    config: &ModelConfig,
    priors: &Priors<T>,
    sweep: usize,
    rng: &mut R,
) -> Result<SweepReport> {
    let backup = (config.ident_mode == IdentMode::Reject).then(|| chain.clone());
    let mut report = SweepReport::default();
    let n_reg = chain.regimes.len();
    let two = n_reg == 2;

    // 1. regime coefficients
    for j in 0..n_reg {
        let (a, floored) = draw_regime_coefficients(
            design,
            &chain.states.s,
            j as u8,
            &chain.precisions[j],
            &chain.hierarchy.a,
            &chain.hierarchy.tau,
            rng,
        )?;
        check_finite("regime coefficients", a.iter(), sweep)?;
        if floored {
            report.floored.push("regime coefficients");
        }
        chain.regimes[j].a = a;
    }

    // 2. cointegration vector, then refresh the design
    let (basis, floored) =
        draw_cointegration(design, &chain.regimes, &chain.precisions, &chain.states.s, priors.zeta, rng)?;
    check_finite("cointegration", basis.xi.iter(), sweep)?;
    if floored {
        report.floored.push("cointegration");
    }
    chain.basis = basis;
    design.set_basis(&chain.basis);

    // 3-4. common mean and shrinkage scales
    if two {
        let a0 = chain.vec_coefficients(0);
        let a1 = chain.vec_coefficients(1);
        chain.hierarchy.a = draw_common_mean(&a0, &a1, &chain.hierarchy.tau, rng);
        check_finite("common mean", chain.hierarchy.a.iter(), sweep)?;
        if config.fixed_tau.is_none() {
            chain.hierarchy.tau = draw_tau(&chain.hierarchy.a, &a0, &a1, priors.d0, priors.d1, rng)?;
            check_finite("shrinkage scales", chain.hierarchy.tau.iter(), sweep)?;
        }
    }

    // 5. regime covariances
    for j in 0..n_reg {
        let (sigma, precision) = draw_sigma(
            design,
            &chain.states.s,
            j as u8,
            &chain.regimes[j].a,
            &chain.hierarchy.s_common,
            priors.s_shape,
            rng,
        )?;
        check_finite("regime covariance", sigma.iter(), sweep)?;
        chain.regimes[j] = RegimeParams::new(chain.regimes[j].a.clone(), sigma)?;
        chain.precisions[j] = precision;
    }

    // 6. common Wishart scale
    chain.hierarchy.s_common =
        draw_common_scale(&chain.precisions, &priors.q_matrix, priors.q_shape, priors.s_shape, rng)?;
    check_finite("common scale", chain.hierarchy.s_common.iter(), sweep)?;

    if two {
        // 7. regime path
        let n = design.n_obs();
        let mut loglik = DMatrix::zeros(n, 2);
        for j in 0..2 {
            loglik.set_column(j, &chain.regimes[j].log_densities(design));
        }
        let pmats = TransitionMatrixSeq::from_params(&chain.transition, &design.w);
        let init = initial_distribution(config.initial_distribution, &pmats);
        let filt = hamilton_filter(&loglik, &pmats, init)?;
        chain.states.s = ffbs_sample(&filt.filtered, &pmats, rng);

        // 8. latent utilities and transition coefficients
        let pin = config.variant == ModelVariant::Ftp;
        let (tp, zstar) =
            draw_transition_params(&chain.states.s, &design.w, &chain.transition, priors.v_gamma, pin, rng)?;
        if !tp.is_finite() {
            return Err(Error::NonFinite { block: "transition coefficients".into(), sweep });
        }
        chain.transition = tp;
        chain.states.zstar = zstar;

        match backup {
            Some(prev) if !identification_holds(chain, design, config) => {
                *chain = prev;
                design.set_basis(&chain.basis);
                report.rejected = true;
            }
            Some(_) => {}
            None => report.swapped = enforce_identification(chain, design, config),
        }
    }
    Ok(report)
}

/// A chain together with its design matrices and priors.
pub struct Sampler<T: Real> {
    pub config: ModelConfig,
    pub priors: Priors<T>,
    pub design: DesignData<T>,
    pub chain: ChainState<T>,
    pub notes: ChainNotes,
    names: Vec<String>,
}

impl<T: Real> Sampler<T> {
    pub fn new(data: &Dataset<T>, config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let design = build_design(data, &CointegrationBasis::zeros(config.m, config.rank), config)?;
        let priors = Priors::from_config(config, data)?;
        let chain = initialize(&design, config, &priors)?;
        Ok(Self { config: config.clone(), priors, design, chain, notes: ChainNotes::default(), names: data.names.clone() })
    }

    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<SweepReport> {
        let report = gibbs_sweep(&mut self.chain, &mut self.design, &self.config, &self.priors, self.notes.sweeps, rng)?;
        self.notes.sweeps += 1;
        self.notes.swaps += usize::from(report.swapped);
        self.notes.rejections += usize::from(report.rejected);
        for b in &report.floored {
            *self.notes.floors.entry(b.to_string()).or_default() += 1;
        }
        Ok(report)
    }

    /// Runs the configured burn-in and retention schedule.
    pub fn run<R: Rng + ?Sized>(mut self, rng: &mut R) -> Result<PosteriorDraws<T>> {
        let total = self.config.n_draws;
        let mut kept = Vec::with_capacity(self.config.n_retained());
        let step = (total / 10).max(1);
        for it in 0..total {
            let report = self.sweep(rng)?;
            if !report.floored.is_empty() {
                log::warn!("sweep {it}: diagonal floor applied in {:?}", report.floored);
            }
            if it >= self.config.n_burn && (it - self.config.n_burn).is_multiple_of(self.config.thin) {
                kept.push(self.chain.to_draw());
            }
            if (it + 1) % step == 0 {
                log::info!("sweep {}/{} ({} retained)", it + 1, total, kept.len());
            }
        }
        Ok(PosteriorDraws {
            config: self.config,
            names: self.names,
            dates: self.design.dates,
            draws: kept,
            notes: self.notes,
        })
    }
}

/// Generator for chain `stream` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn run_chain<T: Real, R: Rng + ?Sized>(data: &Dataset<T>, config: &ModelConfig, rng: &mut R) -> Result<PosteriorDraws<T>> {
    Sampler::new(data, config)?.run(rng)
}

/// Independent chains in parallel, chain `i` on stream `i` of `seed`.
pub fn run_chains<T: Real>(
    data: &Dataset<T>,
    config: &ModelConfig,
    seed: u64,
    n_chains: usize,
) -> Result<Vec<PosteriorDraws<T>>> {
    (0..n_chains)
        .into_par_iter()
        .map(|i| run_chain(data, config, &mut chain_rng(seed, i as u64)))
        .collect()
}
