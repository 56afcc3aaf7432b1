//! CSV contracts: datasets, state paths and real-time vintage directories.
//!
//! Values are written with Rust's shortest round-trip formatting, so a write followed by
//! a read reproduces every value bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{Dataset, Transform};
use crate::scalar::Real;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            parse_err(line, format!("expected {expected_len} fields, found {len}"))
        }
        other => parse_err(line, format!("{other:?}")),
    }
}

/// Reads a `date,<var1>,...,<varm>` file, applying per-column transforms. When
/// `expected` is non-empty the columns must appear in exactly that order.
pub fn read_dataset<T: Real>(
    path: &Path,
    transforms: &BTreeMap<String, Transform>,
    expected: &[String],
) -> Result<Dataset<T>> {
    let file = fs::File::open(path)?;
    parse_dataset(file, transforms, expected)
}

pub fn parse_dataset<T: Real, R: Read>(
    reader: R,
    transforms: &BTreeMap<String, Transform>,
    expected: &[String],
) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(parse_err(1, "empty file"));
    }
    if !header[0].eq_ignore_ascii_case("date") {
        return Err(parse_err(1, format!("first column must be `date`, found `{}`", &header[0])));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if names.is_empty() {
        return Err(parse_err(1, "no variable columns"));
    }
    if !expected.is_empty() {
        for want in expected {
            if !names.contains(want) {
                return Err(parse_err(1, format!("missing column `{want}`")));
            }
        }
        if names != expected {
            return Err(parse_err(1, format!("columns {names:?} do not follow the configured order {expected:?}")));
        }
    }
    for key in transforms.keys() {
        if !names.contains(key) {
            return Err(Error::invalid(format!("transform given for unknown column `{key}`")));
        }
    }
    let col_tf: Vec<Transform> = names.iter().map(|n| transforms.get(n).copied().unwrap_or(Transform::None)).collect();

    let mut dates: Vec<String> = Vec::new();
    let mut values: Vec<T> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let date = rec[0].to_string();
        if let Some(prev) = dates.last() {
            if date.as_str() <= prev.as_str() {
                return Err(parse_err(line, format!("date `{date}` does not follow `{prev}`")));
            }
        }
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line, format!("non-numeric value `{cell}` in column `{}`", names[j])))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("missing value in column `{}`", names[j])));
            }
            let v = match col_tf[j] {
                Transform::None => v,
                Transform::Log if v > 0.0 => v.ln(),
                Transform::Log => {
                    return Err(parse_err(line, format!("log of non-positive value {v} in column `{}`", names[j])))
                }
            };
            values.push(T::lit(v));
        }
        dates.push(date);
    }
    if dates.is_empty() {
        return Err(parse_err(2, "no data rows"));
    }
    let levels = DMatrix::from_row_slice(dates.len(), names.len(), &values);
    Dataset::new(levels, names, dates)
}

pub fn write_dataset<T: Real>(path: &Path, data: &Dataset<T>) -> Result<()> {
    let mut buf = Vec::new();
    dataset_to_writer(&mut buf, data)?;
    write_atomic(path, &buf)
}

pub fn dataset_to_writer<T: Real, W: Write>(writer: W, data: &Dataset<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend(data.names.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (i, date) in data.dates.iter().enumerate() {
        let mut row = vec![date.clone()];
        row.extend(data.levels.row(i).iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `date,s_true` file for a simulated regime path.
pub fn write_states(path: &Path, dates: &[String], states: &[u8]) -> Result<()> {
    if dates.len() != states.len() {
        return Err(Error::dim("one state per date is required"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["date", "s_true"]).map_err(csv_err)?;
    for (d, s) in dates.iter().zip(states) {
        w.write_record([d.as_str(), &s.to_string()]).map_err(csv_err)?;
    }
    let buf = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(path, &buf)
}

pub fn read_states(path: &Path) -> Result<(Vec<String>, Vec<u8>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let (mut dates, mut states) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let s: u8 = rec.get(1).and_then(|v| v.parse().ok()).filter(|v| *v <= 1).ok_or_else(|| parse_err(line, "state must be 0 or 1"))?;
        dates.push(rec[0].to_string());
        states.push(s);
    }
    Ok((dates, states))
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = tmp_path(path);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Real-time data: one dataset per vintage, keyed by `YYYYQq`.
#[derive(Debug, Clone, PartialEq)]
pub struct VintageStore<T: Real> {
    pub vintages: BTreeMap<String, Dataset<T>>,
}

pub fn is_vintage_id(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() == 6 && b[..4].iter().all(u8::is_ascii_digit) && b[4] == b'Q' && (b'1'..=b'4').contains(&b[5])
}

impl<T: Real> VintageStore<T> {
    pub fn new(vintages: BTreeMap<String, Dataset<T>>) -> Result<Self> {
        if vintages.is_empty() {
            return Err(Error::invalid("vintage store is empty"));
        }
        let dim = vintages.values().next().map(|d| d.dim()).unwrap_or(0);
        for (id, d) in &vintages {
            if d.dim() != dim {
                return Err(Error::dim(format!("vintage {id} has {} variables, expected {dim}", d.dim())));
            }
        }
        Ok(Self { vintages })
    }

    /// Loads every `YYYYQq.csv` in `dir`; other files are ignored.
    pub fn load_dir(dir: &Path, transforms: &BTreeMap<String, Transform>, expected: &[String]) -> Result<Self> {
        let mut vintages = BTreeMap::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            if path.extension().and_then(|e| e.to_str()) != Some("csv") || !is_vintage_id(&stem) {
                continue;
            }
            let data = read_dataset(&path, transforms, expected).map_err(|e| match e {
                Error::Parse { line, msg } => Error::Parse { line, msg: format!("{}: {msg}", path.display()) },
                other => other,
            })?;
            vintages.insert(stem, data);
        }
        Self::new(vintages)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (id, d) in &self.vintages {
            write_dataset(&dir.join(format!("{id}.csv")), d)?;
        }
        Ok(())
    }

    pub fn latest(&self) -> &Dataset<T> {
        self.vintages.values().next_back().expect("store is non-empty")
    }

    /// Earliest vintage that contains an observation for `date`.
    pub fn first_release(&self, date: &str) -> Option<(&str, &Dataset<T>)> {
        self.vintages.iter().find(|(_, d)| d.position(date).is_some()).map(|(k, d)| (k.as_str(), d))
    }
}
