//! Posterior summaries and inefficiency factors for scalar chain outputs.

use std::path::Path;

use anyhow::{bail, Result};
use serde::Serialize;

/// Fewest retained draws for which diagnostics are computed.
pub const MIN_DRAWS: usize = 200;

pub const HEADER: [&str; 7] = ["parameter", "mean", "sd", "p16", "p50", "p84", "inefficiency"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSummary {
    pub parameter: String,
    pub mean: f64,
    pub sd: f64,
    pub p16: f64,
    pub p50: f64,
    pub p84: f64,
    /// NaN when the chain is constant.
    pub inefficiency: f64,
}

/// `1 + 2 Σ_{l=1}^{L} ρ̂_l` with `L = min(100, n/10)`.
pub fn inefficiency_factor(x: &[f64]) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let gamma0 = dev.iter().map(|d| d * d).sum::<f64>();
    if !(gamma0 > 0.0) {
        return f64::NAN;
    }
    let lags = (n / 10).min(100);
    let rho_sum: f64 = (1..=lags)
        .map(|l| dev[..n - l].iter().zip(&dev[l..]).map(|(a, b)| a * b).sum::<f64>() / gamma0)
        .sum();
    1.0 + 2.0 * rho_sum
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(name: &str, values: &[f64]) -> ParamSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    ParamSummary {
        parameter: name.to_string(),
        mean,
        sd,
        p16: quantile(&sorted, 0.16),
        p50: quantile(&sorted, 0.50),
        p84: quantile(&sorted, 0.84),
        inefficiency: inefficiency_factor(values),
    }
}

/// Summaries of each named column of draws.
pub fn compute_diagnostics(columns: &[(String, Vec<f64>)]) -> Result<Vec<ParamSummary>> {
    let n = columns.first().map_or(0, |c| c.1.len());
    if n < MIN_DRAWS {
        bail!("diagnostics need at least {MIN_DRAWS} retained draws, got {n}");
    }
    Ok(columns.iter().map(|(name, v)| summarize(name, v)).collect())
}

pub fn to_csv(rows: &[ParamSummary]) -> Vec<u8> {
    let mut out = HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.parameter, r.mean, r.sd, r.p16, r.p50, r.p84, r.inefficiency
        ));
    }
    out.into_bytes()
}

pub fn write(path: &Path, rows: &[ParamSummary]) -> Result<()> {
    regimecast::io::write_atomic(path, &to_csv(rows))?;
    Ok(())
}
