//! CSV and JSON emission of sweep results.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::sweep::{summarize, ResultRow, Summary, SweepSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

/// Column order of the CSV output.
pub const CSV_HEADER: [&str; 8] = [
    "sweep_param",
    "value",
    "mode",
    "seed",
    "objective_bits",
    "iterations",
    "wall_ms",
    "status",
];

/// Writes rows as CSV. Floats use the shortest representation that reads
/// back to the same value.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> anyhow::Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        anyhow::bail!("unexpected CSV header {header:?}");
    }
    rd.deserialize().map(|r| r.map_err(Into::into)).collect()
}

/// JSON document: the rows, their summary and the sweep that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: Option<SweepSpec>,
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
}

impl SweepReport {
    pub fn new(config: Option<SweepSpec>, rows: Vec<ResultRow>) -> Self {
        let summary = summarize(&rows);
        Self { config, rows, summary }
    }
}

pub fn write_json<W: Write>(report: &SweepReport, out: W) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(out, report)?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> anyhow::Result<SweepReport> {
    Ok(serde_json::from_reader(input)?)
}

/// Writes `report` to `path` in `format`.
pub fn emit_results(report: &SweepReport, format: Format, path: &Path) -> anyhow::Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let out = std::io::BufWriter::new(file);
    match format {
        Format::Csv => write_csv(&report.rows, out),
        Format::Json => write_json(report, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), CSV_HEADER.join(",") + "\n");
    }

    #[test]
    fn formats_parse() {
        assert_eq!("JSON".parse::<Format>().unwrap(), Format::Json);
        assert!("xml".parse::<Format>().is_err());
    }
}
