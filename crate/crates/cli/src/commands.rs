//! Command-line entry points: simulate, estimate, forecast and report.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use regimecast::dgp::{default_test_params, selection_test_params, simulate_msvecm, tvp_forecast_params};
use regimecast::forecast::{
    run_recursive_exercise, table_models, ExerciseSettings, LpsReport, MinnesotaHyper, ModelSpec, RealizedValue,
};
use regimecast::io::{dataset_to_writer, read_dataset, write_atomic, write_states, VintageStore};
use regimecast::model::ModelConfig;
use regimecast::sampler::{chain_rng, run_chains, ChainNotes, PosteriorDraws};
use regimecast::{Dataset64, PosteriorDraws64, TrueParams64};

use crate::diagnostics;
use crate::manifest::RunManifest;
use crate::rundir;

/// Raised for bad invocations: unreadable inputs, malformed config files, bad flag values.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

#[derive(Debug, Parser)]
#[command(name = "regimecast", version, about = "Markov-switching VECM estimation and density forecasting")]
pub struct Cli {
    /// Seed for every random number drawn by the command.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a dataset from a data-generating process.
    Simulate(SimulateArgs),
    /// Run the Gibbs sampler and write a run directory.
    Estimate(EstimateArgs),
    /// Recursive real-time forecast evaluation over a vintage directory.
    Forecast(ForecastArgs),
    /// Summarize an existing run directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Fixture {
    Default,
    Selection,
    Tvp,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Parameter file (JSON); overrides --fixture.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Fixture::Default)]
    pub fixture: Fixture,
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the true regime path here.
    #[arg(long)]
    pub states: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Realized {
    Next,
    Final,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub vintages: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated model ids, e.g. `ms-vecm-tvp-r3,vecm-r3,ar1`. Defaults to the full
    /// comparison set up to --max-rank.
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<String>,
    #[arg(long, default_value_t = 5)]
    pub max_rank: usize,
    /// First origin; defaults to the last date of the earliest vintage.
    #[arg(long)]
    pub first_origin: Option<String>,
    #[arg(long)]
    pub max_origins: Option<usize>,
    #[arg(long, value_enum, default_value_t = Realized::Next)]
    pub realized: Realized,
    #[arg(long, default_value_t = 5)]
    pub bvar_lags: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(&a, cli.seed),
        Command::Estimate(a) => estimate(&a, cli.seed),
        Command::Forecast(a) => forecast(&a, cli.seed),
        Command::Report(a) => report(&a),
    }
}

fn readable(path: &Path) -> Result<()> {
    if !path.exists() {
        return usage(format!("cannot read {}", path.display()));
    }
    Ok(())
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    readable(path)?;
    let text = fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())).into())
}

pub fn load_config(path: &Path) -> Result<ModelConfig> {
    let cfg: ModelConfig = load_json(path)?;
    cfg.validate().map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

pub fn simulate(a: &SimulateArgs, seed: u64) -> Result<()> {
    let params: TrueParams64 = match &a.config {
        Some(p) => load_json(p)?,
        None => match a.fixture {
            Fixture::Default => default_test_params(),
            Fixture::Selection => selection_test_params(),
            Fixture::Tvp => tvp_forecast_params(),
        },
    };
    params.validate()?;
    let sim = simulate_msvecm(&params, a.n, &mut chain_rng(seed, 0))?;
    let mut bytes = Vec::new();
    dataset_to_writer(&mut bytes, &sim.data)?;
    write_atomic(&a.out, &bytes)?;
    if let Some(s) = &a.states {
        write_states(s, &sim.data.dates, &sim.states)?;
    }
    log::info!("simulated {} periods into {}", a.n, a.out.display());
    Ok(())
}

fn pool(chains: Vec<PosteriorDraws64>) -> PosteriorDraws64 {
    let mut it = chains.into_iter();
    let mut all = it.next().expect("at least one chain");
    for c in it {
        all.draws.extend(c.draws);
        all.notes.sweeps += c.notes.sweeps;
        all.notes.swaps += c.notes.swaps;
        all.notes.rejections += c.notes.rejections;
        for (k, v) in c.notes.floors {
            *all.notes.floors.entry(k).or_default() += v;
        }
    }
    all
}

pub fn estimate(a: &EstimateArgs, seed: u64) -> Result<()> {
    readable(&a.data)?;
    let config = load_config(&a.config)?;
    if a.chains == 0 {
        return usage("--chains must be at least 1");
    }
    let data: Dataset64 = read_dataset(&a.data, &config.transforms, &config.variables)
        .with_context(|| format!("loading {}", a.data.display()))?;
    if data.dim() != config.m {
        bail!("data have {} variables but the config sets m = {}", data.dim(), config.m);
    }
    let mut manifest = RunManifest::new("estimate", seed, serde_json::to_value(&config)?);
    fs::create_dir_all(&a.out)?;
    write_atomic(&a.out.join(rundir::CONFIG_FILE), serde_json::to_string_pretty(&config)?.as_bytes())?;

    let draws = pool(run_chains(&data, &config, seed, a.chains)?);
    let mut files = vec![rundir::CONFIG_FILE.to_string()];
    files.extend(rundir::write_draws(&a.out, &draws)?);
    let blocks = rundir::draw_blocks(&draws);
    files.extend(write_summaries(&a.out, &blocks)?);

    manifest.notes = notes_json(&draws.notes, &draws);
    manifest.files = files;
    manifest.files.push(rundir::MANIFEST_FILE.to_string());
    manifest.finish(&a.out)?;
    rundir::self_check(&a.out)?;
    log::info!("{} retained draws written to {}", draws.len(), a.out.display());
    Ok(())
}

fn notes_json(notes: &ChainNotes, draws: &PosteriorDraws<f64>) -> serde_json::Value {
    serde_json::json!({
        "chain": notes,
        "n_retained": draws.len(),
        "effective_sample": [draws.dates.first(), draws.dates.last()],
    })
}

/// Diagnostics and regime probabilities; a header-only diagnostics file is written when
/// there are too few draws.
fn write_summaries(dir: &Path, blocks: &[rundir::Block]) -> Result<Vec<String>> {
    let rows = match diagnostics::compute_diagnostics(&rundir::parameter_columns(blocks)) {
        Ok(rows) => rows,
        Err(e) => {
            log::warn!("{e}; writing an empty diagnostics table");
            Vec::new()
        }
    };
    diagnostics::write(&dir.join(rundir::DIAGNOSTICS_FILE), &rows)?;
    let states = blocks.iter().find(|b| b.name == "states").expect("states block");
    write_atomic(&dir.join(rundir::REGIME_FILE), &rundir::regime_table(states))?;
    Ok(vec![rundir::DIAGNOSTICS_FILE.to_string(), rundir::REGIME_FILE.to_string()])
}

pub fn forecast(a: &ForecastArgs, seed: u64) -> Result<()> {
    readable(&a.vintages)?;
    let config = load_config(&a.config)?;
    let store: VintageStore<f64> = VintageStore::load_dir(&a.vintages, &config.transforms, &config.variables)
        .with_context(|| format!("loading vintages from {}", a.vintages.display()))?;
    let specs: Vec<ModelSpec> = if a.models.is_empty() {
        table_models(a.max_rank)
    } else {
        a.models
            .iter()
            .map(|id| ModelSpec::parse(id.trim()).ok_or_else(|| UsageError(format!("unknown model id `{id}`")).into()))
            .collect::<Result<_>>()?
    };
    let first_origin = match &a.first_origin {
        Some(d) => d.clone(),
        None => store.vintages.values().next().and_then(|d| d.dates.last().cloned()).unwrap_or_default(),
    };
    let settings = ExerciseSettings {
        base: config.clone(),
        first_origin,
        max_origins: a.max_origins,
        realized: match a.realized {
            Realized::Next => RealizedValue::NextVintage,
            Realized::Final => RealizedValue::FinalVintage,
        },
        seed,
        minnesota: MinnesotaHyper { lags: a.bvar_lags, ..MinnesotaHyper::default() },
    };
    let mut manifest = RunManifest::new("forecast", seed, serde_json::to_value(&settings)?);
    let report = run_recursive_exercise(&store, &specs, &settings)?;
    fs::create_dir_all(&a.out)?;
    write_atomic(&a.out.join(rundir::CONFIG_FILE), serde_json::to_string_pretty(&settings)?.as_bytes())?;
    report.write(&a.out)?;
    manifest.notes = serde_json::json!({
        "origins": report.origins.len(),
        "models": report.models,
        "skipped": report.gaps.iter().map(|(o, why)| format!("{o}: {why}")).collect::<Vec<_>>(),
    });
    manifest.files = [rundir::CONFIG_FILE, "lps.csv", "lps_summary.json", rundir::MANIFEST_FILE]
        .map(String::from)
        .to_vec();
    manifest.finish(&a.out)?;
    log::info!("{} origins x {} models scored", report.origins.len(), report.models.len());
    Ok(())
}

pub fn report(a: &ReportArgs) -> Result<()> {
    readable(&a.run)?;
    fs::create_dir_all(&a.out)?;
    let mut wrote = false;
    if a.run.join(rundir::DRAWS_DIR).is_dir() {
        let blocks = rundir::read_draws(&a.run)?;
        write_summaries(&a.out, &blocks)?;
        wrote = true;
    }
    let lps = a.run.join("lps.csv");
    if lps.is_file() {
        let r = LpsReport::from_csv(&fs::read(&lps)?)?;
        write_atomic(&a.out.join("lps_summary.json"), serde_json::to_string_pretty(&r.summary())?.as_bytes())?;
        wrote = true;
    }
    if !wrote {
        bail!("{} holds neither draws nor forecast scores", a.run.display());
    }
    Ok(())
}
