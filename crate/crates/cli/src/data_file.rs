//! RawCSV and FreqTable readers and writers.
//!
//! RawCSV has no header and one observation per line, coordinates separated
//! by commas. FreqTable has two integer columns `value,count` with strictly
//! increasing values.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mixfit_core::{Dataset, Family, FreqTable};

use crate::error::{CliError, Result};
use crate::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    RawCsv,
    FreqTable,
}

/// How to pick the format when reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FormatHint {
    /// Two columns read as a frequency table for Poisson data, RawCSV otherwise.
    #[default]
    Auto,
    Raw,
    Freq,
}

impl FromStr for FormatHint {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(FormatHint::Auto),
            "raw" => Ok(FormatHint::Raw),
            "freq" => Ok(FormatHint::Freq),
            other => Err(CliError::Usage(format!("unknown data format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataFile {
    pub path: PathBuf,
    pub format: DataFormat,
    pub dataset: Dataset,
    /// Raw Poisson counts in file order; the dataset itself only keeps the
    /// frequency table.
    pub raw_counts: Option<Vec<u64>>,
}

impl DataFile {
    pub fn read(path: &Path, family: Family, hint: FormatHint) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path, family, hint)
    }

    pub fn parse(text: &str, path: &Path, family: Family, hint: FormatHint) -> Result<Self> {
        let rows = split_rows(text);
        let err = |line: usize, msg: String| CliError::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        if rows.is_empty() {
            return Err(err(0, "no observations".into()));
        }
        let width = rows[0].1.len();
        if let Some((line, r)) = rows.iter().find(|(_, r)| r.len() != width) {
            return Err(err(
                *line,
                format!("expected {width} columns, found {}", r.len()),
            ));
        }
        let format = match (hint, family) {
            (FormatHint::Freq, _) => DataFormat::FreqTable,
            (FormatHint::Auto, Family::Poisson) if width == 2 => DataFormat::FreqTable,
            _ => DataFormat::RawCsv,
        };
        let mut raw_counts = None;
        let dataset = match (format, family) {
            (DataFormat::FreqTable, Family::Poisson) => {
                if width != 2 {
                    return Err(err(rows[0].0, "frequency table needs two columns".into()));
                }
                let mut pairs = Vec::with_capacity(rows.len());
                for (line, r) in &rows {
                    let v = parse_count(r[0]).map_err(|m| err(*line, m))?;
                    let c = parse_count(r[1]).map_err(|m| err(*line, m))?;
                    if let Some(&(prev, _)) = pairs.last() {
                        if v <= prev {
                            return Err(err(*line, "values must be strictly increasing".into()));
                        }
                    }
                    pairs.push((v, c));
                }
                Dataset::freq_table(
                    FreqTable::from_pairs(pairs).map_err(|e| err(0, e.to_string()))?,
                )
            }
            (DataFormat::FreqTable, _) => {
                return Err(CliError::Usage(format!(
                    "frequency tables only hold Poisson data, not {family}"
                )))
            }
            (DataFormat::RawCsv, Family::Poisson) => {
                if width != 1 {
                    return Err(err(rows[0].0, "Poisson data needs one column".into()));
                }
                let counts = rows
                    .iter()
                    .map(|(line, r)| parse_count(r[0]).map_err(|m| err(*line, m)))
                    .collect::<Result<Vec<_>>>()?;
                let d = Dataset::counts(&counts);
                raw_counts = Some(counts);
                d
            }
            (DataFormat::RawCsv, Family::Gaussian1D) => {
                if width != 1 {
                    return Err(err(
                        rows[0].0,
                        format!("univariate data needs one column, found {width}"),
                    ));
                }
                let xs = rows
                    .iter()
                    .map(|(line, r)| parse_real(r[0]).map_err(|m| err(*line, m)))
                    .collect::<Result<Vec<_>>>()?;
                Dataset::univariate(xs)
            }
            (DataFormat::RawCsv, Family::Mvn) => {
                let mut values = Vec::with_capacity(rows.len() * width);
                for (line, r) in &rows {
                    for f in r {
                        values.push(parse_real(f).map_err(|m| err(*line, m))?);
                    }
                }
                Dataset::multivariate(width, values).map_err(|e| err(0, e.to_string()))?
            }
        };
        Ok(Self {
            path: path.to_path_buf(),
            format,
            dataset,
            raw_counts,
        })
    }
}

/// Non-empty lines split on commas, with 1-based line numbers.
fn split_rows(text: &str) -> Vec<(usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').map(str::trim).collect()))
        .collect()
}

fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_count(s: &str) -> std::result::Result<u64, String> {
    s.parse()
        .map_err(|_| format!("`{s}` is not a non-negative integer"))
}

/// RawCSV text for real-valued rows (`dim` coordinates each).
pub fn format_raw(values: &[f64], dim: usize) -> String {
    let mut out = String::with_capacity(values.len() * 12);
    for row in values.chunks_exact(dim) {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn format_counts(values: &[u64]) -> String {
    values.iter().fold(String::new(), |mut s, v| {
        let _ = writeln!(s, "{v}");
        s
    })
}

pub fn format_freq_table(table: &FreqTable) -> String {
    table.entries().iter().fold(String::new(), |mut s, (v, c)| {
        let _ = writeln!(s, "{v},{c}");
        s
    })
}
