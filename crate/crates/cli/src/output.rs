// SPDX-License-Identifier: MIT OR Apache-2.0

//! Tab-separated output tables.
//!
//! Every table starts with a `#`-prefixed metadata block (tool version and
//! run parameters, no timestamps) followed by a header row. Means and
//! metrics carry six decimals; `fitted.tsv` and simulated ratios carry the
//! shortest representation that parses back to the same `f64`.

use std::fs;
use std::io::Read;
use std::path::Path;

use tguhm::eval::EvalReport;
use tguhm::fit_segments;

use crate::ratio::RatioFile;
use crate::{CliError, Result, TOOL_VERSION};

/// Copy-number ratio of an unaltered window.
pub const NEUTRAL_RATIO: f64 = 1.0;

/// Ordered `key: value` lines written above a table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.push("tool", TOOL_VERSION);
        m.push("command", command);
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("# {k}: {v}\n"))
            .collect()
    }
}

/// Builds one table in memory: metadata, header, rows.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(meta: &Metadata, header: &[&str]) -> Self {
        let buf = meta.render().into_bytes();
        let mut writer = csv::WriterBuilder::new()
            .delimiter(b'\t')
            .quote_style(csv::QuoteStyle::Necessary)
            .from_writer(buf);
        writer
            .write_record(header)
            .expect("writing to memory cannot fail");
        Self { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .expect("writing to memory cannot fail");
    }

    pub fn into_string(self) -> String {
        let bytes = self
            .writer
            .into_inner()
            .expect("writing to memory cannot fail");
        String::from_utf8(bytes).expect("tables are built from UTF-8 text")
    }

    pub fn write_to(self, path: &Path) -> Result<()> {
        write_file(path, &self.into_string())
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

/// Shortest decimal that reads back as exactly `v`.
pub fn exact(v: f64) -> String {
    format!("{v}")
}

fn opt_fixed(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), fixed)
}

/// `gain` or `loss` when the mean leaves `NEUTRAL_RATIO +- theta`.
pub fn call(mean: f64, theta: f64) -> &'static str {
    if mean > NEUTRAL_RATIO + theta {
        "gain"
    } else if mean < NEUTRAL_RATIO - theta {
        "loss"
    } else {
        "neutral"
    }
}

/// One fitted segment; window indices are 1-based and inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRow {
    pub chromosome: String,
    pub start_index: usize,
    pub end_index: usize,
    pub start_bp: u64,
    pub end_bp: u64,
    pub mean: f64,
}

impl SegmentRow {
    pub fn n_windows(&self) -> usize {
        self.end_index + 1 - self.start_index
    }
}

pub const SEGMENT_COLUMNS: [&str; 8] = [
    "chromosome",
    "start_index",
    "end_index",
    "start_bp",
    "end_bp",
    "mean_ratio",
    "n_windows",
    "call",
];

pub fn segments_table(meta: &Metadata, rows: &[SegmentRow], theta: f64) -> Table {
    let mut t = Table::new(meta, &SEGMENT_COLUMNS);
    for r in rows {
        t.row([
            r.chromosome.clone(),
            r.start_index.to_string(),
            r.end_index.to_string(),
            r.start_bp.to_string(),
            r.end_bp.to_string(),
            fixed(r.mean),
            r.n_windows().to_string(),
            call(r.mean, theta).to_string(),
        ]);
    }
    t
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(source)
}

fn field<'a>(row: &'a csv::StringRecord, i: usize, path: &Path, line: u64) -> Result<&'a str> {
    row.get(i).ok_or_else(|| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("missing column {}", i + 1),
    })
}

fn number<T: std::str::FromStr>(text: &str, path: &Path, line: u64) -> Result<T> {
    text.parse().map_err(|_| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("bad number `{text}`"),
    })
}

/// Reads a `segments.tsv` written by `segments_table`.
pub fn read_segments(path: &Path) -> Result<Vec<SegmentRow>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rows = Vec::new();
    for rec in reader(file).records() {
        let rec = rec.map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let f = |i| field(&rec, i, path, line);
        rows.push(SegmentRow {
            chromosome: f(0)?.to_string(),
            start_index: number(f(1)?, path, line)?,
            end_index: number(f(2)?, path, line)?,
            start_bp: number(f(3)?, path, line)?,
            end_bp: number(f(4)?, path, line)?,
            mean: number(f(5)?, path, line)?,
        });
    }
    Ok(rows)
}

/// Rebuilds the fitted signal of each chromosome from segment boundaries
/// and the ratios they were computed from. Means are recomputed, so the
/// result matches the original fit exactly rather than to six decimals.
pub fn fitted_from_segments(
    rows: &[SegmentRow],
    data: &RatioFile,
) -> Result<Vec<(String, Vec<f64>)>> {
    let mut out = Vec::new();
    for chrom in &data.chromosomes {
        let mine: Vec<&SegmentRow> = rows
            .iter()
            .filter(|r| r.chromosome == chrom.chromosome)
            .collect();
        let covered = mine.last().map_or(0, |r| r.end_index);
        if mine.first().map(|r| r.start_index) != Some(1) || covered != chrom.len() {
            return Err(CliError::Argument(format!(
                "segments do not cover the {} windows of {}",
                chrom.len(),
                chrom.chromosome
            )));
        }
        let cps: Vec<usize> = mine[..mine.len() - 1].iter().map(|r| r.end_index).collect();
        let fit = fit_segments(&chrom.series()?, &cps)?;
        out.push((chrom.chromosome.clone(), fit.fitted));
    }
    Ok(out)
}

/// `chromosome start end ratio fitted` per window.
pub fn fitted_table(meta: &Metadata, data: &RatioFile, fitted: &[(String, Vec<f64>)]) -> Table {
    let mut t = Table::new(meta, &["chromosome", "start", "end", "ratio", "fitted"]);
    for (chrom, (_, values)) in data.chromosomes.iter().zip(fitted) {
        for (rec, v) in chrom.records.iter().zip(values) {
            t.row([
                rec.chromosome.clone(),
                rec.window_start.to_string(),
                rec.window_end.to_string(),
                exact(rec.ratio),
                exact(*v),
            ]);
        }
    }
    t
}

/// Reads the `fitted` column of a `fitted.tsv`, grouped by chromosome in
/// file order.
pub fn read_fitted(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out: Vec<(String, Vec<f64>)> = Vec::new();
    for rec in reader(file).records() {
        let rec = rec.map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let chrom = field(&rec, 0, path, line)?;
        let v: f64 = number(field(&rec, 4, path, line)?, path, line)?;
        match out.last_mut() {
            Some((c, vals)) if c == chrom => vals.push(v),
            _ => out.push((chrom.to_string(), vec![v])),
        }
    }
    Ok(out)
}

/// One row per change-point: the 1-based index of the last window before
/// the change and the base-pair boundary after it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangePointRow {
    pub chromosome: String,
    pub window_index: usize,
    pub position: u64,
}

pub fn changepoints_table(meta: &Metadata, rows: &[ChangePointRow]) -> Table {
    let mut t = Table::new(meta, &["chromosome", "window_index", "position"]);
    for r in rows {
        t.row([
            r.chromosome.clone(),
            r.window_index.to_string(),
            r.position.to_string(),
        ]);
    }
    t
}

/// Wide table: one row per method and noise level.
pub fn summary_table(meta: &Metadata, reports: &[EvalReport]) -> Table {
    let mut t = Table::new(
        meta,
        &[
            "method",
            "c_star",
            "sigma",
            "replicates",
            "a_tpr",
            "a_fpr",
            "a_tpr_short",
            "a_mse",
            "mean_fp",
            "auc",
            "partial_auc",
        ],
    );
    for rep in reports {
        for (k, s) in rep.per_sigma.iter().enumerate() {
            let roc = rep.roc.get(k);
            t.row([
                rep.method.name.clone(),
                rep.method.threshold.c_star.to_string(),
                fixed(s.sigma),
                s.replicates.to_string(),
                fixed(s.a_tpr),
                fixed(s.a_fpr),
                opt_fixed(s.a_tpr_short),
                fixed(s.a_mse),
                fixed(s.mean_fp),
                opt_fixed(roc.map(|r| r.auc)),
                opt_fixed(roc.map(|r| r.partial_auc)),
            ]);
        }
    }
    t
}

/// Long table for plotting: `method sigma metric value`.
pub fn metrics_table(meta: &Metadata, reports: &[EvalReport]) -> Table {
    let mut t = Table::new(meta, &["method", "sigma", "metric", "value"]);
    for rep in reports {
        for (k, s) in rep.per_sigma.iter().enumerate() {
            let roc = rep.roc.get(k);
            let metrics = [
                ("a_tpr", Some(s.a_tpr)),
                ("a_fpr", Some(s.a_fpr)),
                ("a_tpr_short", s.a_tpr_short),
                ("a_mse", Some(s.a_mse)),
                ("mean_fp", Some(s.mean_fp)),
                ("auc", roc.map(|r| r.auc)),
                ("partial_auc", roc.map(|r| r.partial_auc)),
            ];
            for (name, v) in metrics {
                if let Some(v) = v {
                    t.row([
                        rep.method.name.clone(),
                        fixed(s.sigma),
                        name.to_string(),
                        fixed(v),
                    ]);
                }
            }
        }
    }
    t
}

pub fn replicates_table(meta: &Metadata, reports: &[EvalReport]) -> Table {
    let mut t = Table::new(
        meta,
        &[
            "method",
            "sigma",
            "replicate",
            "tp",
            "fp",
            "fn",
            "tpr",
            "fpr",
            "tpr_short",
            "mse",
            "sigma_hat",
            "lambda",
        ],
    );
    for rep in reports {
        for s in &rep.replicates {
            t.row([
                rep.method.name.clone(),
                fixed(s.sigma),
                s.replicate.to_string(),
                s.tp.to_string(),
                s.fp.to_string(),
                s.fn_.to_string(),
                fixed(s.tpr),
                fixed(s.fpr),
                opt_fixed(s.tpr_short),
                fixed(s.mse),
                fixed(s.sigma_hat),
                fixed(s.lambda),
            ]);
        }
    }
    t
}

pub fn roc_table(meta: &Metadata, reports: &[EvalReport]) -> Table {
    let mut t = Table::new(
        meta,
        &[
            "method", "sigma", "scale", "mean_fpr", "mean_tpr", "mean_fp",
        ],
    );
    for rep in reports {
        for curve in &rep.roc {
            for p in &curve.points {
                t.row([
                    rep.method.name.clone(),
                    fixed(curve.sigma),
                    fixed(p.scale),
                    fixed(p.mean_fpr),
                    fixed(p.mean_tpr),
                    fixed(p.mean_fp),
                ]);
            }
        }
    }
    t
}

pub fn auc_table(meta: &Metadata, reports: &[EvalReport]) -> Table {
    let mut t = Table::new(meta, &["method", "sigma", "auc", "partial_auc"]);
    for rep in reports {
        for curve in &rep.roc {
            t.row([
                rep.method.name.clone(),
                fixed(curve.sigma),
                fixed(curve.auc),
                fixed(curve.partial_auc),
            ]);
        }
    }
    t
}

pub fn report_json(reports: &[EvalReport]) -> Result<String> {
    serde_json::to_string_pretty(reports)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Argument(format!("cannot encode report: {e}")))
}
