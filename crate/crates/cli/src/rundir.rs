//! Run-directory layout: draws written block by block as labelled CSV tables.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use regimecast::io::write_atomic;
use regimecast::PosteriorDraws64;

pub const CONFIG_FILE: &str = "config.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const REGIME_FILE: &str = "regime_probabilities.csv";
pub const DRAWS_DIR: &str = "draws";

/// Draw blocks, one CSV each under `draws/`.
pub const BLOCKS: [&str; 8] = ["coefficients", "sigma", "common_mean", "tau", "common_scale", "xi", "transition", "states"];

/// One block of draws: a header and one row per retained draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Block {
    pub fn columns(&self) -> Vec<(String, Vec<f64>)> {
        self.header
            .iter()
            .enumerate()
            .map(|(c, h)| (format!("{}.{h}", self.name), self.rows.iter().map(|r| r[c]).collect()))
            .collect()
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out.into_bytes()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut lines = text.lines();
        let header: Vec<String> = match lines.next() {
            Some(h) if !h.is_empty() => h.split(',').map(str::to_string).collect(),
            _ => bail!("{}: missing header", path.display()),
        };
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .with_context(|| format!("{}: line {}", path.display(), i + 2))?;
            if row.len() != header.len() {
                bail!("{}: line {} has {} cells, expected {}", path.display(), i + 2, row.len(), header.len());
            }
            rows.push(row);
        }
        Ok(Self { name, header, rows })
    }
}

fn pairs(names: &[String]) -> Vec<(usize, usize, String)> {
    let mut out = Vec::new();
    for i in 0..names.len() {
        for k in i..names.len() {
            out.push((i, k, format!("{}.{}", names[i], names[k])));
        }
    }
    out
}

/// Splits posterior draws into the labelled blocks listed in [`BLOCKS`].
pub fn draw_blocks(draws: &PosteriorDraws64) -> Vec<Block> {
    let cfg = &draws.config;
    let names = &draws.names;
    let coef_labels = cfg.coefficient_labels(names);
    let n_regimes = draws.draws.first().map_or(0, |d| d.coefficients.len());
    let r = cfg.rank;
    let block = |name: &str, header: Vec<String>, f: &dyn Fn(&regimecast::sampler::Draw<f64>) -> Vec<f64>| Block {
        name: name.to_string(),
        header,
        rows: draws.draws.iter().map(f).collect(),
    };
    let sym = pairs(names);

    let coefficients = block(
        "coefficients",
        (0..n_regimes).flat_map(|j| coef_labels.iter().map(move |l| format!("regime{j}.{l}"))).collect(),
        &|d| d.coefficients.iter().flat_map(|a| a.as_slice().to_vec()).collect(),
    );
    let sigma = block(
        "sigma",
        (0..n_regimes).flat_map(|j| sym.iter().map(move |(_, _, l)| format!("regime{j}.{l}"))).collect(),
        &|d| d.sigma.iter().flat_map(|s| sym.iter().map(|(i, k, _)| s[(*i, *k)]).collect::<Vec<_>>()).collect(),
    );
    let common_mean = block("common_mean", coef_labels.clone(), &|d| d.common_mean.as_slice().to_vec());
    let tau = block("tau", coef_labels.clone(), &|d| d.tau.as_slice().to_vec());
    let common_scale = block("common_scale", sym.iter().map(|(_, _, l)| l.clone()).collect(), &|d| {
        sym.iter().map(|(i, k, _)| d.common_scale[(*i, *k)]).collect()
    });
    let xi = block(
        "xi",
        (0..r).flat_map(|c| names[r..].iter().map(move |n| format!("{n}.ect{}", c + 1))).collect(),
        &|d| d.xi.as_slice().to_vec(),
    );
    let mut th = vec!["c00".to_string(), "c01".to_string()];
    th.extend((1..=r).map(|c| format!("gamma.ect{c}")));
    let transition = block("transition", th, &|d| d.transition.stacked().as_slice().to_vec());
    let states = block("states", draws.dates.clone(), &|d| d.states.iter().map(|s| f64::from(*s)).collect());
    vec![coefficients, sigma, common_mean, tau, common_scale, xi, transition, states]
}

/// Writes every block under `dir/draws`; returns the relative paths written.
pub fn write_draws(dir: &Path, draws: &PosteriorDraws64) -> Result<Vec<String>> {
    let sub = dir.join(DRAWS_DIR);
    fs::create_dir_all(&sub)?;
    let mut files = Vec::new();
    for b in draw_blocks(draws) {
        write_atomic(&sub.join(format!("{}.csv", b.name)), &b.to_csv())?;
        files.push(format!("{DRAWS_DIR}/{}.csv", b.name));
    }
    Ok(files)
}

pub fn read_draws(dir: &Path) -> Result<Vec<Block>> {
    BLOCKS.iter().map(|b| Block::read(&dir.join(DRAWS_DIR).join(format!("{b}.csv")))).collect()
}

/// Per-period regime-1 probability and the pointwise mode, from the states block.
pub fn regime_table(states: &Block) -> Vec<u8> {
    let n = states.rows.len().max(1) as f64;
    let mut out = String::from("date,p_regime1,mode\n");
    for (c, date) in states.header.iter().enumerate() {
        let p = states.rows.iter().map(|r| r[c]).sum::<f64>() / n;
        out.push_str(&format!("{date},{p},{}\n", u8::from(p > 0.5)));
    }
    out.into_bytes()
}

/// Scalar columns of every block except the state paths.
pub fn parameter_columns(blocks: &[Block]) -> Vec<(String, Vec<f64>)> {
    blocks.iter().filter(|b| b.name != "states").flat_map(Block::columns).collect()
}

fn required(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = [CONFIG_FILE, MANIFEST_FILE, DIAGNOSTICS_FILE].iter().map(|f| dir.join(f)).collect();
    v.extend(BLOCKS.iter().map(|b| dir.join(DRAWS_DIR).join(format!("{b}.csv"))));
    v
}

/// Fails unless `dir` holds a complete estimation run.
pub fn self_check(dir: &Path) -> Result<()> {
    let missing: Vec<String> = required(dir).into_iter().filter(|p| !p.is_file()).map(|p| p.display().to_string()).collect();
    if !missing.is_empty() {
        bail!("incomplete run directory, missing: {}", missing.join(", "));
    }
    let blocks = read_draws(dir)?;
    let n = blocks[0].rows.len();
    if let Some(b) = blocks.iter().find(|b| b.rows.len() != n) {
        bail!("draw block {} has {} rows, expected {n}", b.name, b.rows.len());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use regimecast::dgp::{default_test_params, simulate_msvecm};
    use regimecast::model::ModelConfig;
    use regimecast::sampler::{chain_rng, run_chain};

    fn small_run() -> PosteriorDraws64 {
        let p = default_test_params::<f64>();
        let sim = simulate_msvecm(&p, 80, &mut chain_rng(1, 0)).unwrap();
        let cfg = ModelConfig { n_draws: 12, n_burn: 4, ..p.model_config() };
        run_chain(&sim.data, &cfg, &mut chain_rng(2, 0)).unwrap()
    }

    #[test]
    fn blocks_round_trip() {
        let draws = small_run();
        let dir = tempfile::tempdir().unwrap();
        write_draws(dir.path(), &draws).unwrap();
        let back = read_draws(dir.path()).unwrap();
        assert_eq!(back, draw_blocks(&draws));
        let coef = &back[0];
        assert_eq!(coef.header.len(), 2 * 15);
        assert_eq!(coef.header[0], "regime0.y1.ect1");
        assert_eq!(coef.rows.len(), 8);
        assert_eq!(coef.rows[3][16], draws.draws[3].coefficients[1][(1, 0)]);
        assert_eq!(back[5].header, vec!["y2.ect1", "y3.ect1"]);
        assert_eq!(back[6].header, vec!["c00", "c01", "gamma.ect1"]);
        assert_eq!(back[7].header.len(), 78);
    }

    #[test]
    fn self_check_flags_missing_files() {
        let draws = small_run();
        let dir = tempfile::tempdir().unwrap();
        write_draws(dir.path(), &draws).unwrap();
        let err = self_check(dir.path()).unwrap_err().to_string();
        assert!(err.contains("manifest.json") && err.contains("config.json"));
        for f in [CONFIG_FILE, MANIFEST_FILE, DIAGNOSTICS_FILE] {
            fs::write(dir.path().join(f), "{}").unwrap();
        }
        self_check(dir.path()).unwrap();
    }

    #[test]
    fn regime_table_averages_states() {
        let states = Block {
            name: "states".into(),
            header: vec!["a".into(), "b".into()],
            rows: vec![vec![0.0, 1.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![0.0, 0.0]],
        };
        assert_eq!(String::from_utf8(regime_table(&states)).unwrap(), "date,p_regime1,mode\na,0.25,0\nb,0.75,1\n");
    }
}
