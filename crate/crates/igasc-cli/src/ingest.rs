//! CSV ingestion: date-indexed series of prices, returns, or durations.
//!
//! Expected layout: a header row, then one date column (ISO-8601, ascending)
//! and one value column. Rows with an empty value field are skipped with a
//! count logged to stderr; unparseable rows abort with their line number.
//! Prices are converted to continuously compounded percentage returns,
//! y_t = 100 (ln S_t - ln S_{t-1}). Multivariate ingestion inner-joins the
//! files on their date strings before any conversion.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// What the value column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Prices,
    Returns,
    Durations,
}

impl std::str::FromStr for DataKind {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prices" => Ok(DataKind::Prices),
            "returns" => Ok(DataKind::Returns),
            "durations" => Ok(DataKind::Durations),
            other => bail!("unknown data kind '{other}' (expected prices|returns|durations)"),
        }
    }
}

/// One ingested series, ready for modeling.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub dates: Vec<String>,
    pub values: Vec<f64>,
    pub label: String,
}

/// A joined multivariate panel; rows are time steps.
#[derive(Debug, Clone)]
pub struct MvDataset {
    pub dates: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

fn read_raw(path: &Path) -> Result<(Vec<String>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut dates: Vec<String> = Vec::new();
    let mut values = Vec::new();
    let mut skipped = 0usize;
    for (idx, record) in reader.records().enumerate() {
        // 1-based file line: header is line 1
        let line = idx + 2;
        let record = record.with_context(|| format!("{}:{line}: bad CSV row", path.display()))?;
        if record.len() < 2 {
            bail!(
                "{}:{line}: expected a date and a value column",
                path.display()
            );
        }
        let date = record.get(0).unwrap_or("").to_string();
        let raw = record.get(1).unwrap_or("");
        if raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw.eq_ignore_ascii_case("nan") {
            skipped += 1;
            continue;
        }
        let value: f64 = raw
            .parse()
            .with_context(|| format!("{}:{line}: cannot parse value '{raw}'", path.display()))?;
        if !value.is_finite() {
            bail!("{}:{line}: non-finite value", path.display());
        }
        if let Some(prev) = dates.last() {
            if date.as_str() < prev.as_str() {
                bail!(
                    "{}:{line}: dates must be ascending ('{date}' after '{prev}')",
                    path.display()
                );
            }
        }
        dates.push(date);
        values.push(value);
    }
    if skipped > 0 {
        eprintln!(
            "note: skipped {skipped} rows with missing values in {}",
            path.display()
        );
    }
    Ok((dates, values))
}

fn convert(dates: Vec<String>, values: Vec<f64>, kind: DataKind, label: &str) -> Result<Dataset> {
    match kind {
        DataKind::Prices => {
            if values.len() < 2 {
                bail!("{label}: need at least 2 prices to form returns");
            }
            if let Some(p) = values.iter().find(|&&v| v <= 0.0) {
                bail!("{label}: nonpositive price {p}");
            }
            let returns: Vec<f64> = values
                .windows(2)
                .map(|w| 100.0 * (w[1].ln() - w[0].ln()))
                .collect();
            Ok(Dataset {
                dates: dates[1..].to_vec(),
                values: returns,
                label: label.to_string(),
            })
        }
        DataKind::Returns => Ok(Dataset {
            dates,
            values,
            label: label.to_string(),
        }),
        DataKind::Durations => {
            if let Some(pos) = values.iter().position(|&v| v <= 0.0) {
                bail!(
                    "{label}: duration {} at row {} must be strictly positive",
                    values[pos],
                    pos + 2
                );
            }
            Ok(Dataset {
                dates,
                values,
                label: label.to_string(),
            })
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Ingest a single series.
pub fn read_series(path: &Path, kind: DataKind) -> Result<Dataset> {
    let (dates, values) = read_raw(path)?;
    convert(dates, values, kind, &stem(path))
}

/// Ingest several series and inner-join them on dates (before any
/// price-to-return conversion).
pub fn read_joined(paths: &[std::path::PathBuf], kind: DataKind) -> Result<MvDataset> {
    if paths.len() < 2 {
        bail!("multivariate ingestion needs at least 2 data files");
    }
    let mut raw = Vec::with_capacity(paths.len());
    for p in paths {
        raw.push((stem(p), read_raw(p)?));
    }
    // intersect on the first file's dates, preserving order
    let mut keep: Vec<String> = raw[0].1 .0.clone();
    for (_, (dates, _)) in raw.iter().skip(1) {
        let set: HashMap<&str, usize> = dates
            .iter()
            .enumerate()
            .map(|(i, d)| (d.as_str(), i))
            .collect();
        keep.retain(|d| set.contains_key(d.as_str()));
    }
    if keep.len() < 2 {
        bail!("fewer than 2 common dates across the input files");
    }
    let mut columns = Vec::with_capacity(raw.len());
    let mut labels = Vec::with_capacity(raw.len());
    for (label, (dates, values)) in &raw {
        let index: HashMap<&str, usize> = dates
            .iter()
            .enumerate()
            .map(|(i, d)| (d.as_str(), i))
            .collect();
        let col: Vec<f64> = keep.iter().map(|d| values[index[d.as_str()]]).collect();
        let ds = convert(keep.clone(), col, kind, label)?;
        columns.push(ds.values);
        labels.push(label.clone());
    }
    let dates = if kind == DataKind::Prices {
        keep[1..].to_vec()
    } else {
        keep
    };
    let t_len = columns[0].len();
    let rows: Vec<Vec<f64>> = (0..t_len)
        .map(|t| columns.iter().map(|c| c[t]).collect())
        .collect();
    Ok(MvDataset {
        dates,
        rows,
        labels,
    })
}
