// SPDX-License-Identifier: MIT OR Apache-2.0

//! Tab-separated copy-number ratio input.
//!
//! The header names the columns `chromosome`, `start`, `end` and `ratio`
//! (any order, extra columns ignored). Lines starting with `#` are comments.
//! Rows whose ratio is missing or non-finite (`NA`, `NaN`, `inf`, `.`, empty)
//! are dropped, as are the coordinate gaps they leave behind.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use tguhm::Series;

use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RatioRecord {
    pub chromosome: String,
    pub window_start: u64,
    pub window_end: u64,
    pub ratio: f64,
}

/// The retained windows of one chromosome, sorted by start.
#[derive(Debug, Clone, PartialEq)]
pub struct ChromosomeData {
    pub chromosome: String,
    pub records: Vec<RatioRecord>,
}

impl ChromosomeData {
    pub fn series(&self) -> tguhm::Result<Series<f64>> {
        Series::new(
            self.chromosome.clone(),
            self.records.iter().map(|r| r.ratio).collect(),
            self.records.iter().map(|r| r.window_start).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatioFile {
    /// Chromosomes in order of first appearance.
    pub chromosomes: Vec<ChromosomeData>,
    pub dropped: usize,
    pub warnings: Vec<String>,
}

pub fn read_ratio_file(path: &Path) -> Result<RatioFile> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_ratio_tsv(file, path)
}

fn is_missing(field: &str) -> bool {
    matches!(
        field.to_ascii_lowercase().as_str(),
        "" | "na" | "nan" | "null" | "none" | "." | "inf" | "-inf" | "+inf" | "infinity"
    )
}

fn column(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers
        .iter()
        .position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
}

pub fn parse_ratio_tsv<R: Read>(reader: R, source: &Path) -> Result<RatioFile> {
    let parse_err = |line: u64, message: String| CliError::Parse {
        path: source.to_path_buf(),
        line,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .comment(Some(b'#'))
        .flexible(true)
        .has_headers(true)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let mut out = RatioFile::default();
    if headers.is_empty() || (headers.len() == 1 && headers[0].trim().is_empty()) {
        out.warnings
            .push(format!("{}: empty input", source.display()));
        return Ok(out);
    }
    let header_line = 1;
    let find = |names: &[&str]| {
        column(&headers, names)
            .ok_or_else(|| parse_err(header_line, format!("missing `{}` column", names[0])))
    };
    let chrom_col = find(&["chromosome", "chrom", "chr"])?;
    let start_col = find(&["start"])?;
    let end_col = find(&["end"])?;
    let ratio_col = find(&["ratio"])?;

    let mut groups: Vec<(String, Vec<(u64, RatioRecord)>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();

    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |col: usize, name: &str| {
            row.get(col)
                .map(str::trim)
                .ok_or_else(|| parse_err(line, format!("missing `{name}` field")))
        };
        let chromosome = field(chrom_col, "chromosome")?;
        if chromosome.is_empty() {
            return Err(parse_err(line, "empty chromosome name".into()));
        }
        let start: u64 = field(start_col, "start")?
            .parse()
            .map_err(|_| parse_err(line, format!("bad start `{}`", &row[start_col])))?;
        let end: u64 = field(end_col, "end")?
            .parse()
            .map_err(|_| parse_err(line, format!("bad end `{}`", &row[end_col])))?;
        if start >= end {
            return Err(parse_err(
                line,
                format!("window start {start} is not before end {end}"),
            ));
        }
        let raw = field(ratio_col, "ratio")?;
        let ratio = if is_missing(raw) {
            None
        } else {
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(line, format!("bad ratio `{raw}`")))?;
            v.is_finite().then_some(v)
        };
        let Some(ratio) = ratio else {
            out.dropped += 1;
            continue;
        };

        let slot = *index.entry(chromosome.to_string()).or_insert_with(|| {
            groups.push((chromosome.to_string(), Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push((
            line,
            RatioRecord {
                chromosome: chromosome.to_string(),
                window_start: start,
                window_end: end,
                ratio,
            },
        ));
    }

    for (chromosome, mut rows) in groups {
        if rows
            .windows(2)
            .any(|w| w[0].1.window_start > w[1].1.window_start)
        {
            out.warnings
                .push(format!("{chromosome}: windows not sorted by start; sorted"));
            rows.sort_by_key(|(_, r)| r.window_start);
        }
        if let Some(w) = rows
            .windows(2)
            .find(|w| w[0].1.window_start == w[1].1.window_start)
        {
            return Err(parse_err(
                w[1].0,
                format!(
                    "duplicate window start {} on {chromosome}",
                    w[1].1.window_start
                ),
            ));
        }
        out.chromosomes.push(ChromosomeData {
            chromosome,
            records: rows.into_iter().map(|(_, r)| r).collect(),
        });
    }
    if out.dropped > 0 {
        out.warnings.push(format!(
            "{}: dropped {} window(s) with missing ratio",
            source.display(),
            out.dropped
        ));
    }
    Ok(out)
}
