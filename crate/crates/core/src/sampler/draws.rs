//! Retained posterior draws and chain bookkeeping.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{CointegrationBasis, ModelConfig, RegimeParams};
use crate::scalar::Real;
use crate::statefilter::TransitionParams;

/// One retained state of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw<T: Real> {
    /// `A_j`, one `m × K` matrix per regime.
    pub coefficients: Vec<DMatrix<T>>,
    pub sigma: Vec<DMatrix<T>>,
    pub common_mean: DVector<T>,
    pub tau: DVector<T>,
    pub common_scale: DMatrix<T>,
    pub xi: DMatrix<T>,
    pub transition: TransitionParams<T>,
    pub states: Vec<u8>,
}

impl<T: Real> Draw<T> {
    pub fn regime(&self, j: usize) -> Result<RegimeParams<T>> {
        RegimeParams::new(self.coefficients[j].clone(), self.sigma[j].clone())
    }

    pub fn basis(&self) -> CointegrationBasis<T> {
        CointegrationBasis { xi: self.xi.clone() }
    }
}

/// Counters collected while the chain runs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainNotes {
    pub sweeps: usize,
    /// Sweeps after which the regime labels were permuted.
    pub swaps: usize,
    /// Sweeps discarded by the literal rejection rule.
    pub rejections: usize,
    /// Number of diagonal-floor events per block.
    pub floors: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws<T: Real> {
    pub config: ModelConfig,
    pub names: Vec<String>,
    /// Dates of the effective sample, aligned with the state paths.
    pub dates: Vec<String>,
    pub draws: Vec<Draw<T>>,
    pub notes: ChainNotes,
}

impl<T: Real> PosteriorDraws<T> {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Posterior probability of regime 1 in each period.
    pub fn regime_probabilities(&self) -> Vec<f64> {
        let n = self.dates.len();
        let mut acc = vec![0usize; n];
        for d in &self.draws {
            for (a, s) in acc.iter_mut().zip(&d.states) {
                *a += *s as usize;
            }
        }
        acc.iter().map(|c| *c as f64 / self.draws.len().max(1) as f64).collect()
    }

    /// Pointwise posterior mode of the regime path.
    pub fn mode_path(&self) -> Vec<u8> {
        self.regime_probabilities().iter().map(|p| u8::from(*p > 0.5)).collect()
    }

    /// Posterior median of each shrinkage scale.
    pub fn tau_medians(&self) -> Vec<f64> {
        let k = self.draws.first().map_or(0, |d| d.tau.len());
        (0..k)
            .map(|i| median(self.draws.iter().map(|d| d.tau[i].as_f64()).collect()))
            .collect()
    }

    /// Posterior mean of a scalar function of the draws.
    pub fn mean_of<F: Fn(&Draw<T>) -> f64>(&self, f: F) -> f64 {
        self.draws.iter().map(f).sum::<f64>() / self.draws.len().max(1) as f64
    }

    /// Posterior mean and standard deviation of a scalar function of the draws.
    pub fn mean_sd<F: Fn(&Draw<T>) -> f64>(&self, f: F) -> (f64, f64) {
        let vals: Vec<f64> = self.draws.iter().map(f).collect();
        let n = vals.len().max(1) as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (mean, var.sqrt())
    }
}

pub(crate) fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
