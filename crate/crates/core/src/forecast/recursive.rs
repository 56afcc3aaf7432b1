//! Expanding-window real-time forecast evaluation over a vintage store.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::benchmarks::{bvar_fit_predict, univariate_predict, MinnesotaHyper, UnivariateKind};
use super::mixture::{log_predictive_score, predictive_mixture};
use crate::error::{Error, Result};
use crate::io::{is_vintage_id, write_atomic, VintageStore};
use crate::model::{Dataset, ModelConfig, ModelVariant};
use crate::sampler::{chain_rng, run_chain};
use crate::scalar::Real;

pub const BENCHMARK_ID: &str = "bvar";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelSpec {
    MsVecm { variant: ModelVariant, rank: usize },
    Bvar,
    Ar1,
    Rw,
}

impl ModelSpec {
    pub fn id(&self) -> String {
        match self {
            ModelSpec::MsVecm { variant: ModelVariant::Tvp, rank } => format!("ms-vecm-tvp-r{rank}"),
            ModelSpec::MsVecm { variant: ModelVariant::Ftp, rank } => format!("ms-vecm-ftp-r{rank}"),
            ModelSpec::MsVecm { variant: ModelVariant::Linear, rank } => format!("vecm-r{rank}"),
            ModelSpec::Bvar => BENCHMARK_ID.into(),
            ModelSpec::Ar1 => "ar1".into(),
            ModelSpec::Rw => "rw".into(),
        }
    }

    pub fn parse(id: &str) -> Option<Self> {
        let rank = |s: &str| s.parse::<usize>().ok().filter(|r| *r > 0);
        match id {
            "bvar" => Some(ModelSpec::Bvar),
            "ar1" => Some(ModelSpec::Ar1),
            "rw" => Some(ModelSpec::Rw),
            _ => {
                if let Some(r) = id.strip_prefix("ms-vecm-tvp-r") {
                    rank(r).map(|rank| ModelSpec::MsVecm { variant: ModelVariant::Tvp, rank })
                } else if let Some(r) = id.strip_prefix("ms-vecm-ftp-r") {
                    rank(r).map(|rank| ModelSpec::MsVecm { variant: ModelVariant::Ftp, rank })
                } else {
                    id.strip_prefix("vecm-r")
                        .and_then(rank)
                        .map(|rank| ModelSpec::MsVecm { variant: ModelVariant::Linear, rank })
                }
            }
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// The full comparison set: TVP, FTP and linear VECM for ranks `1..=max_rank`, then
/// BVAR, AR(1) and random walk.
pub fn table_models(max_rank: usize) -> Vec<ModelSpec> {
    let mut v = Vec::new();
    for variant in [ModelVariant::Tvp, ModelVariant::Ftp, ModelVariant::Linear] {
        v.extend((1..=max_rank).map(|rank| ModelSpec::MsVecm { variant, rank }));
    }
    v.extend([ModelSpec::Bvar, ModelSpec::Ar1, ModelSpec::Rw]);
    v
}

/// Which release of `y_{T+1}` the forecasts are scored against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealizedValue {
    /// First release: the earliest vintage containing the period.
    #[default]
    NextVintage,
    FinalVintage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExerciseSettings {
    /// Sampler and data settings shared by all MS-VECM specifications; variant and rank
    /// are overridden per model.
    pub base: ModelConfig,
    /// First forecast origin (inclusive), a date of the store.
    pub first_origin: String,
    pub max_origins: Option<usize>,
    pub realized: RealizedValue,
    pub seed: u64,
    pub minnesota: MinnesotaHyper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpsRow {
    pub origin: String,
    pub model: String,
    pub lps: f64,
    pub cum_rel_lps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpsReport {
    /// Model ids in evaluation order; the benchmark is always present.
    pub models: Vec<String>,
    pub origins: Vec<String>,
    /// One row per origin and model, origin-major.
    pub rows: Vec<LpsRow>,
    /// Origins that could not be evaluated, with the reason.
    pub gaps: Vec<(String, String)>,
}

struct Task {
    origin: String,
    data_end: usize,
    vintage: String,
    realized: f64,
}

/// Vintage id (`YYYYQq`) for a quarterly date (`YYYY-Qq`).
pub fn vintage_id_for(date: &str) -> Result<String> {
    let id = date.replacen("-Q", "Q", 1);
    if is_vintage_id(&id) {
        Ok(id)
    } else {
        Err(Error::invalid(format!("`{date}` is not a YYYY-Qq date")))
    }
}

/// Revision-free store: one vintage per period from `first_len` observations on, each
/// the panel truncated at that period.
pub fn expanding_vintages<T: Real>(data: &Dataset<T>, first_len: usize) -> Result<VintageStore<T>> {
    if first_len == 0 || first_len > data.n_obs() {
        return Err(Error::invalid("first vintage length out of range"));
    }
    let mut v = BTreeMap::new();
    for n in first_len..=data.n_obs() {
        v.insert(vintage_id_for(&data.dates[n - 1])?, data.head(n));
    }
    VintageStore::new(v)
}

fn plan<T: Real>(store: &VintageStore<T>, settings: &ExerciseSettings, gaps: &mut Vec<(String, String)>) -> Vec<Task> {
    let mut dates: Vec<&String> = store.vintages.values().flat_map(|d| d.dates.iter()).collect();
    dates.sort();
    dates.dedup();
    let mut tasks = Vec::new();
    for pair in dates.windows(2) {
        let (origin, next) = (pair[0], pair[1]);
        if origin.as_str() < settings.first_origin.as_str() {
            continue;
        }
        if settings.max_origins.is_some_and(|k| tasks.len() >= k) {
            break;
        }
        let target = settings.base.target_var;
        let Some((vintage, data)) = store.first_release(origin) else {
            gaps.push((origin.clone(), "no vintage contains the origin".into()));
            continue;
        };
        let release = match settings.realized {
            RealizedValue::NextVintage => store.first_release(next).map(|(_, d)| d),
            RealizedValue::FinalVintage => Some(store.latest()).filter(|d| d.position(next).is_some()),
        };
        let Some(release) = release else {
            gaps.push((origin.clone(), format!("no realized value for {next}")));
            continue;
        };
        let pos = data.position(origin).expect("vintage contains origin");
        let row = release.position(next).expect("release contains the next period");
        if target >= release.dim() {
            gaps.push((origin.clone(), format!("target index {target} out of range")));
            continue;
        }
        tasks.push(Task {
            origin: origin.clone(),
            data_end: pos + 1,
            vintage: vintage.to_string(),
            realized: release.levels[(row, target)].as_f64(),
        });
    }
    tasks
}

fn score<T: Real>(
    spec: ModelSpec,
    data: &Dataset<T>,
    realized_level: f64,
    settings: &ExerciseSettings,
    stream: u64,
) -> Result<f64> {
    let target = settings.base.target_var;
    let last = data.levels[(data.n_obs() - 1, target)].as_f64();
    let series = || data.levels.column(target).iter().map(|v| v.as_f64()).collect::<Vec<_>>();
    match spec {
        ModelSpec::MsVecm { variant, rank } => {
            let config = ModelConfig { variant, rank, ..settings.base.clone() };
            let draws = run_chain(data, &config, &mut chain_rng(settings.seed, stream))?;
            let mix = predictive_mixture(&draws, data)?;
            log_predictive_score(&mix, T::lit(realized_level - last), target)
        }
        ModelSpec::Bvar => Ok(bvar_fit_predict(data, &settings.minnesota, target)?.log_density(realized_level)),
        ModelSpec::Ar1 => Ok(univariate_predict(&series(), UnivariateKind::Ar1)?.predictive.log_density(realized_level)),
        ModelSpec::Rw => Ok(univariate_predict(&series(), UnivariateKind::Rw)?.predictive.log_density(realized_level)),
    }
}

/// Runs every model at every origin. Models and origins are evaluated in parallel; task
/// `i` (origin-major) draws from stream `i` of `settings.seed`, so results do not depend
/// on the thread count.
pub fn run_recursive_exercise<T: Real>(
    store: &VintageStore<T>,
    specs: &[ModelSpec],
    settings: &ExerciseSettings,
) -> Result<LpsReport> {
    let mut specs: Vec<ModelSpec> = specs.to_vec();
    if !specs.contains(&ModelSpec::Bvar) {
        specs.push(ModelSpec::Bvar);
    }
    let mut gaps = Vec::new();
    let tasks = plan(store, settings, &mut gaps);
    for (origin, why) in &gaps {
        log::warn!("skipping origin {origin}: {why}");
    }
    let n_models = specs.len();
    let jobs: Vec<(usize, usize)> = (0..tasks.len()).flat_map(|o| (0..n_models).map(move |s| (o, s))).collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(o, s))| {
            let task = &tasks[o];
            let data = store.vintages[&task.vintage].head(task.data_end);
            let lps = score(specs[s], &data, task.realized, settings, i as u64)?;
            log::info!("origin {} model {}: lps {lps:.4}", task.origin, specs[s]);
            Ok(lps)
        })
        .collect::<Result<_>>()?;

    let bench = specs.iter().position(|s| *s == ModelSpec::Bvar).expect("benchmark present");
    let mut cum = vec![0.0; n_models];
    let mut rows = Vec::with_capacity(scores.len());
    for (o, task) in tasks.iter().enumerate() {
        let block = &scores[o * n_models..(o + 1) * n_models];
        for (s, spec) in specs.iter().enumerate() {
            cum[s] += block[s] - block[bench];
            rows.push(LpsRow { origin: task.origin.clone(), model: spec.id(), lps: block[s], cum_rel_lps: cum[s] });
        }
    }
    Ok(LpsReport {
        models: specs.iter().map(ModelSpec::id).collect(),
        origins: tasks.into_iter().map(|t| t.origin).collect(),
        rows,
        gaps,
    })
}

impl LpsReport {
    /// Sum of per-origin scores of `model`.
    pub fn total_lps(&self, model: &str) -> f64 {
        self.rows.iter().filter(|r| r.model == model).map(|r| r.lps).sum()
    }

    /// Cumulative relative score of `model` at the final origin.
    pub fn final_relative(&self, model: &str) -> Option<f64> {
        self.rows.iter().rev().find(|r| r.model == model).map(|r| r.cum_rel_lps)
    }

    pub fn rows_for<'a>(&'a self, model: &'a str) -> impl Iterator<Item = &'a LpsRow> + 'a {
        self.rows.iter().filter(move |r| r.model == model)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["origin", "model", "lps", "cum_rel_lps"]).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([r.origin.clone(), r.model.clone(), format!("{}", r.lps), format!("{}", r.cum_rel_lps)])
                .map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(bytes);
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse { line: i + 2, msg: e.to_string() })?;
            let num = |k: usize| {
                rec.get(k)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::Parse { line: i + 2, msg: format!("bad number in column {k}") })
            };
            rows.push(LpsRow {
                origin: rec.get(0).unwrap_or_default().to_string(),
                model: rec.get(1).unwrap_or_default().to_string(),
                lps: num(2)?,
                cum_rel_lps: num(3)?,
            });
        }
        let mut models = Vec::new();
        let mut origins: Vec<String> = Vec::new();
        for r in &rows {
            if !models.contains(&r.model) {
                models.push(r.model.clone());
            }
            if origins.last() != Some(&r.origin) {
                origins.push(r.origin.clone());
            }
        }
        Ok(Self { models, origins, rows, gaps: Vec::new() })
    }

    /// Final cumulative relative scores laid out as the comparison table: MS-VECM rows
    /// (TVP, FTP, linear) by rank, followed by the benchmarks.
    pub fn summary(&self) -> serde_json::Value {
        let mut grid: BTreeMap<&str, BTreeMap<String, f64>> = BTreeMap::new();
        let mut benchmarks = BTreeMap::new();
        for id in &self.models {
            let value = self.final_relative(id).unwrap_or(0.0);
            match ModelSpec::parse(id) {
                Some(ModelSpec::MsVecm { variant, rank }) => {
                    let row = match variant {
                        ModelVariant::Tvp => "ms_vecm_tvp",
                        ModelVariant::Ftp => "ms_vecm_ftp",
                        ModelVariant::Linear => "vecm",
                    };
                    grid.entry(row).or_default().insert(format!("r{rank}"), value);
                }
                _ => {
                    benchmarks.insert(id.clone(), value);
                }
            }
        }
        let totals: BTreeMap<&String, f64> = self.models.iter().map(|m| (m, self.total_lps(m))).collect();
        serde_json::json!({
            "benchmark": BENCHMARK_ID,
            "n_origins": self.origins.len(),
            "first_origin": self.origins.first(),
            "last_origin": self.origins.last(),
            "relative_lps": { "by_rank": grid, "benchmarks": benchmarks },
            "total_lps": totals,
            "skipped_origins": self.gaps.iter().map(|(o, _)| o).collect::<Vec<_>>(),
        })
    }

    /// Writes `lps.csv` and `lps_summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_atomic(&dir.join("lps.csv"), &self.to_csv()?)?;
        write_atomic(&dir.join("lps_summary.json"), serde_json::to_string_pretty(&self.summary())?.as_bytes())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{default_test_params, simulate_msvecm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn settings(first_origin: &str) -> ExerciseSettings {
        let base = ModelConfig { n_draws: 40, n_burn: 20, ..default_test_params::<f64>().model_config() };
        ExerciseSettings {
            base,
            first_origin: first_origin.into(),
            max_origins: None,
            realized: RealizedValue::NextVintage,
            seed: 3,
            minnesota: MinnesotaHyper { lags: 2, ..MinnesotaHyper::default() },
        }
    }

    fn sim(n: usize) -> Dataset<f64> {
        simulate_msvecm(&default_test_params::<f64>(), n, &mut ChaCha8Rng::seed_from_u64(11)).unwrap().data
    }

    #[test]
    fn ids_round_trip() {
        let all = table_models(5);
        assert_eq!(all.len(), 18);
        for s in all {
            assert_eq!(ModelSpec::parse(&s.id()), Some(s));
        }
        assert_eq!(ModelSpec::parse("vecm-r0"), None);
        assert_eq!(ModelSpec::parse("garch"), None);
    }

    #[test]
    fn two_origins_give_two_rows_per_model() {
        let data = sim(62);
        let store = expanding_vintages(&data, 60).unwrap();
        let s = settings(&data.dates[59]);
        let report = run_recursive_exercise(&store, &[ModelSpec::Rw], &s).unwrap();
        assert_eq!(report.origins, vec![data.dates[59].clone(), data.dates[60].clone()]);
        assert_eq!(report.models, vec!["rw".to_string(), "bvar".to_string()]);
        assert_eq!(report.rows_for("rw").count(), 2);
        assert_eq!(report.rows_for("bvar").count(), 2);
        assert!(report.rows_for("bvar").all(|r| r.cum_rel_lps == 0.0));
    }

    #[test]
    fn cumulative_identity_and_determinism() {
        let data = sim(70);
        let store = expanding_vintages(&data, 64).unwrap();
        let specs = [
            ModelSpec::MsVecm { variant: ModelVariant::Tvp, rank: 1 },
            ModelSpec::MsVecm { variant: ModelVariant::Linear, rank: 1 },
            ModelSpec::Ar1,
        ];
        let s = settings(&data.dates[63]);
        let a = run_recursive_exercise(&store, &specs, &s).unwrap();
        assert_eq!(a.origins.len(), 6);
        for m in &a.models {
            let diff = a.total_lps(m) - a.total_lps(BENCHMARK_ID);
            assert!((a.final_relative(m).unwrap() - diff).abs() < 1e-10);
        }
        let b = run_recursive_exercise(&store, &specs, &s).unwrap();
        assert_eq!(a, b);
        let back = LpsReport::from_csv(&a.to_csv().unwrap()).unwrap();
        assert_eq!(back.rows, a.rows);
        assert_eq!(back.models, a.models);
    }

    #[test]
    fn realized_value_conventions() {
        let data = sim(66);
        let mut store = expanding_vintages(&data, 64).unwrap();
        // revise the last vintage's copy of period 64
        let last = store.vintages.values_mut().next_back().unwrap();
        last.levels[(64, 0)] += 5.0;
        let mut s = settings(&data.dates[63]);
        s.max_origins = Some(1);
        let first = run_recursive_exercise(&store, &[ModelSpec::Rw], &s).unwrap();
        s.realized = RealizedValue::FinalVintage;
        let fin = run_recursive_exercise(&store, &[ModelSpec::Rw], &s).unwrap();
        assert_eq!(first.origins.len(), 1);
        assert!(first.total_lps("rw") > fin.total_lps("rw"));
    }

    #[test]
    fn missing_realized_value_is_a_gap() {
        let data = sim(64);
        let mut v = BTreeMap::new();
        v.insert("1995Q1".to_string(), data.head(61));
        v.insert("1995Q2".to_string(), data.head(60));
        let store = VintageStore::new(v).unwrap();
        let mut s = settings(&data.dates[58]);
        s.realized = RealizedValue::FinalVintage;
        let r = run_recursive_exercise(&store, &[ModelSpec::Rw], &s).unwrap();
        assert_eq!(r.origins, vec![data.dates[58].clone()]);
        assert_eq!(r.gaps.len(), 1);
        assert_eq!(r.gaps[0].0, data.dates[59]);
        s.realized = RealizedValue::NextVintage;
        let r = run_recursive_exercise(&store, &[ModelSpec::Rw], &s).unwrap();
        assert_eq!(r.origins.len(), 2);
        assert!(r.gaps.is_empty());
    }

    #[test]
    fn summary_layout() {
        let report = LpsReport {
            models: vec!["ms-vecm-tvp-r3".into(), "vecm-r1".into(), "bvar".into(), "rw".into()],
            origins: vec!["2000-Q1".into()],
            rows: vec![
                LpsRow { origin: "2000-Q1".into(), model: "ms-vecm-tvp-r3".into(), lps: -1.0, cum_rel_lps: 0.5 },
                LpsRow { origin: "2000-Q1".into(), model: "vecm-r1".into(), lps: -2.0, cum_rel_lps: -0.5 },
                LpsRow { origin: "2000-Q1".into(), model: "bvar".into(), lps: -1.5, cum_rel_lps: 0.0 },
                LpsRow { origin: "2000-Q1".into(), model: "rw".into(), lps: -3.0, cum_rel_lps: -1.5 },
            ],
            gaps: vec![],
        };
        let s = report.summary();
        assert_eq!(s["relative_lps"]["by_rank"]["ms_vecm_tvp"]["r3"], 0.5);
        assert_eq!(s["relative_lps"]["by_rank"]["vecm"]["r1"], -0.5);
        assert_eq!(s["relative_lps"]["benchmarks"]["rw"], -1.5);
        assert_eq!(s["n_origins"], 1);
    }
}
