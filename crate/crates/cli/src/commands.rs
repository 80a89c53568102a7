// SPDX-License-Identifier: MIT OR Apache-2.0

//! The four subcommands, as library functions.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use log::warn;
use tguhm::eval::{evaluate, EvalReport, MethodConfig};
use tguhm::sim::{generate_replicate, SimulationScenario, BUILTIN_SIGNALS_VERSION, RNG_ALGORITHM};
use tguhm::{fit_segments, segment, Series, ThresholdConfig64};

use crate::output::{
    auc_table, changepoints_table, exact, fitted_table, metrics_table, replicates_table,
    report_json, roc_table, segments_table, summary_table, write_file, ChangePointRow, Metadata,
    SegmentRow, Table,
};
use crate::ratio::{read_ratio_file, RatioFile};
use crate::scenario::scenario_to_toml;
use crate::{CliError, Result};

/// Width of a simulated window in base pairs.
pub const SIMULATED_WINDOW_BP: u64 = 150_000;

/// Chromosome name used in simulated ratio files.
pub const SIMULATED_CHROMOSOME: &str = "sim";

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSettings {
    pub rho: f64,
    pub threshold: ThresholdConfig64,
    /// Half-width of the neutral band around ratio 1 used for calls.
    pub theta: f64,
    /// Segment all chromosomes as one series, with chromosome boundaries
    /// always kept as change-points.
    pub whole_genome: bool,
}

impl Default for SegmentSettings {
    fn default() -> Self {
        Self {
            rho: tguhm::DEFAULT_RHO,
            threshold: ThresholdConfig64::default(),
            theta: tguhm::sim::DEFAULT_THETA,
            whole_genome: false,
        }
    }
}

impl SegmentSettings {
    pub fn validate(&self) -> Result<()> {
        validate_rho(self.rho)?;
        self.threshold
            .validate()
            .map_err(|e| CliError::Argument(e.to_string()))?;
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return Err(CliError::Argument(format!(
                "theta must be finite and >= 0, got {}",
                self.theta
            )));
        }
        Ok(())
    }
}

pub fn validate_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(CliError::Argument(format!(
            "rho must lie in (0, 1], got {rho}"
        )))
    }
}

/// Fit of one chromosome. Change-points are 0-based split positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ChromosomeFit {
    pub chromosome: String,
    pub change_points: Vec<usize>,
    pub fitted: Vec<f64>,
    /// `None` when the series was too short to segment.
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentRun {
    pub fits: Vec<ChromosomeFit>,
    pub warnings: Vec<String>,
}

/// Segments each chromosome, or the concatenated genome.
pub fn segment_ratios(data: &RatioFile, settings: &SegmentSettings) -> Result<SegmentRun> {
    settings.validate()?;
    let mut run = SegmentRun::default();
    if settings.whole_genome {
        segment_genome(data, settings, &mut run)?;
    } else {
        for chrom in &data.chromosomes {
            let series = chrom.series()?;
            let (fit, warning) = segment_one(&series, settings)?;
            run.warnings.extend(warning);
            run.fits.push(ChromosomeFit {
                chromosome: chrom.chromosome.clone(),
                ..fit
            });
        }
    }
    Ok(run)
}

fn segment_one(
    series: &Series<f64>,
    settings: &SegmentSettings,
) -> Result<(ChromosomeFit, Option<String>)> {
    let label = series.label().to_string();
    if series.len() < 2 {
        let fit = ChromosomeFit {
            chromosome: label.clone(),
            change_points: Vec::new(),
            fitted: series.values().to_vec(),
            sigma: None,
            lambda: None,
        };
        return Ok((
            fit,
            Some(format!("{label}: single window, left unsegmented")),
        ));
    }
    let rep = segment(series, &settings.threshold, settings.rho)?;
    let warning = rep
        .degenerate_sigma
        .then(|| format!("{label}: estimated noise level is zero, threshold set to 0"));
    let fit = ChromosomeFit {
        chromosome: label,
        change_points: rep.segmentation.change_points,
        fitted: rep.segmentation.fitted,
        sigma: Some(rep.sigma),
        lambda: Some(rep.lambda),
    };
    Ok((fit, warning))
}

fn segment_genome(
    data: &RatioFile,
    settings: &SegmentSettings,
    run: &mut SegmentRun,
) -> Result<()> {
    let values: Vec<f64> = data
        .chromosomes
        .iter()
        .flat_map(|c| c.records.iter().map(|r| r.ratio))
        .collect();
    if values.is_empty() {
        return Ok(());
    }
    let mut offsets = vec![0];
    for c in &data.chromosomes {
        offsets.push(offsets.last().unwrap() + c.len());
    }
    let genome = Series::new(
        "genome",
        values.clone(),
        (1..=values.len() as u64).collect(),
    )?;
    let (fit, warning) = segment_one(&genome, settings)?;
    run.warnings.extend(warning);

    let mut cps: BTreeSet<usize> = fit.change_points.into_iter().collect();
    cps.extend(offsets[1..offsets.len() - 1].iter().copied());
    let cps: Vec<usize> = cps.into_iter().collect();
    let fitted = fit_segments(&genome, &cps)?.fitted;

    for (k, chrom) in data.chromosomes.iter().enumerate() {
        let (lo, hi) = (offsets[k], offsets[k + 1]);
        run.fits.push(ChromosomeFit {
            chromosome: chrom.chromosome.clone(),
            change_points: cps
                .iter()
                .filter(|&&b| b > lo && b < hi)
                .map(|b| b - lo)
                .collect(),
            fitted: fitted[lo..hi].to_vec(),
            sigma: fit.sigma,
            lambda: fit.lambda,
        });
    }
    Ok(())
}

/// Segment and change-point rows for the output tables.
pub fn segment_rows(data: &RatioFile, run: &SegmentRun) -> (Vec<SegmentRow>, Vec<ChangePointRow>) {
    let mut segments = Vec::new();
    let mut changes = Vec::new();
    for (chrom, fit) in data.chromosomes.iter().zip(&run.fits) {
        let recs = &chrom.records;
        let mut bounds = vec![0];
        bounds.extend(&fit.change_points);
        bounds.push(recs.len());
        for w in bounds.windows(2) {
            let (a, b) = (w[0], w[1]);
            segments.push(SegmentRow {
                chromosome: chrom.chromosome.clone(),
                start_index: a + 1,
                end_index: b,
                start_bp: recs[a].window_start,
                end_bp: recs[b - 1].window_end,
                mean: fit.fitted[a],
            });
        }
        for &b in &fit.change_points {
            changes.push(ChangePointRow {
                chromosome: chrom.chromosome.clone(),
                window_index: b,
                position: recs[b - 1].window_end,
            });
        }
    }
    (segments, changes)
}

fn threshold_metadata(meta: &mut Metadata, rho: f64, cfg: &ThresholdConfig64) {
    let auto = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), exact);
    meta.push("rho", rho)
        .push("c_star", cfg.c_star)
        .push("lambda", auto(cfg.lambda))
        .push("sigma", auto(cfg.sigma))
        .push("lambda_constant", cfg.lambda_constant);
}

fn segment_metadata(input: &Path, settings: &SegmentSettings, run: &SegmentRun) -> Metadata {
    let mut meta = Metadata::new("segment");
    meta.push("input", input.display());
    threshold_metadata(&mut meta, settings.rho, &settings.threshold);
    meta.push("theta", settings.theta)
        .push("whole_genome", settings.whole_genome);
    for fit in &run.fits {
        if let (Some(s), Some(l)) = (fit.sigma, fit.lambda) {
            meta.push(
                &format!("fit[{}]", fit.chromosome),
                format!("sigma={} lambda={}", exact(s), exact(l)),
            );
        }
    }
    meta
}

/// Reads `input`, segments it and writes `segments.tsv`,
/// `changepoints.tsv` and `fitted.tsv` into `out` (created if needed).
/// Without `out` the segments table goes to stdout.
pub fn segment_command(
    input: &Path,
    out: Option<&Path>,
    settings: &SegmentSettings,
) -> Result<SegmentRun> {
    settings.validate()?;
    let data = read_ratio_file(input)?;
    for w in &data.warnings {
        warn!("{w}");
    }
    let run = segment_ratios(&data, settings)?;
    for w in &run.warnings {
        warn!("{w}");
    }
    let meta = segment_metadata(input, settings, &run);
    let (segments, changes) = segment_rows(&data, &run);
    let seg_table = segments_table(&meta, &segments, settings.theta);
    match out {
        None => print!("{}", seg_table.into_string()),
        Some(dir) => {
            seg_table.write_to(&dir.join("segments.tsv"))?;
            changepoints_table(&meta, &changes).write_to(&dir.join("changepoints.tsv"))?;
            let fitted: Vec<(String, Vec<f64>)> = run
                .fits
                .iter()
                .map(|f| (f.chromosome.clone(), f.fitted.clone()))
                .collect();
            fitted_table(&meta, &data, &fitted).write_to(&dir.join("fitted.tsv"))?;
        }
    }
    Ok(run)
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn scenario_metadata(command: &str, scenario: &SimulationScenario) -> Metadata {
    let mut meta = Metadata::new(command);
    let signal = match &scenario.signal {
        tguhm::sim::SignalSpec::Builtin(id) => id.to_string(),
        tguhm::sim::SignalSpec::Explicit(_) => "explicit".to_string(),
    };
    meta.push("signal", signal)
        .push("builtin_signals_version", BUILTIN_SIGNALS_VERSION)
        .push("noise", scenario.noise)
        .push("sigma_grid", join(&scenario.sigma_grid))
        .push("alpha", scenario.alpha)
        .push("inflation", scenario.inflation)
        .push("replicates", scenario.replicates)
        .push("base_seed", scenario.base_seed)
        .push("theta", scenario.theta)
        .push("match_window", scenario.match_window)
        .push(
            "short_segment_range",
            format!(
                "{}-{}",
                scenario.short_segment_range.0, scenario.short_segment_range.1
            ),
        )
        .push("rng", RNG_ALGORITHM);
    meta
}

/// Directory name for one noise level, e.g. `sigma_0.10`.
pub fn sigma_dir_name(sigma: f64) -> String {
    format!("sigma_{sigma:.2}")
}

pub fn replicate_file_name(r: usize) -> String {
    format!("replicate_{r:04}.tsv")
}

/// Writes `scenario.toml`, `truth.tsv` and one ratio file per noise level
/// and replicate under `out`. Returns the files written, in order.
pub fn simulate_command(scenario: &SimulationScenario, out: &Path) -> Result<Vec<PathBuf>> {
    crate::scenario::validate_scenario(scenario)?;
    let names: BTreeSet<String> = scenario
        .sigma_grid
        .iter()
        .map(|&s| sigma_dir_name(s))
        .collect();
    if names.len() != scenario.sigma_grid.len() {
        return Err(CliError::Scenario {
            key: "sigma_grid".into(),
            message: "noise levels must be distinct at two decimals".into(),
        });
    }
    let signal = scenario.signal.resolve()?;
    let meta = scenario_metadata("simulate", scenario);
    let mut written = Vec::new();

    let path = out.join("scenario.toml");
    write_file(
        &path,
        &format!("{}{}", meta.render(), scenario_to_toml(scenario)?),
    )?;
    written.push(path);

    let mut truth_meta = meta.clone();
    truth_meta
        .push("change_points", join(signal.change_points(scenario.theta)))
        .push(
            "short_change_points",
            join(signal.short_segment_change_points(scenario.theta, scenario.short_segment_range)),
        );
    let levels = signal.values();
    let mut truth = Table::new(&truth_meta, &["chromosome", "start", "end", "level"]);
    for (i, v) in levels.iter().enumerate() {
        truth.row(window_fields(i, *v));
    }
    let path = out.join("truth.tsv");
    truth.write_to(&path)?;
    written.push(path);

    for &sigma in &scenario.sigma_grid {
        let dir = out.join(sigma_dir_name(sigma));
        for r in 1..=scenario.replicates {
            let rep = generate_replicate(scenario, sigma, r)?;
            let mut m = meta.clone();
            m.push("sigma", sigma)
                .push("replicate", r)
                .push("seed", rep.seed);
            let mut t = Table::new(&m, &["chromosome", "start", "end", "ratio"]);
            for (i, v) in rep.series.values().iter().enumerate() {
                t.row(window_fields(i, *v));
            }
            let path = dir.join(replicate_file_name(r));
            t.write_to(&path)?;
            written.push(path);
        }
    }
    Ok(written)
}

fn window_fields(i: usize, v: f64) -> [String; 4] {
    let start = i as u64 * SIMULATED_WINDOW_BP;
    [
        SIMULATED_CHROMOSOME.to_string(),
        start.to_string(),
        (start + SIMULATED_WINDOW_BP).to_string(),
        exact(v),
    ]
}

fn validate_methods(methods: &[MethodConfig]) -> Result<()> {
    if methods.is_empty() {
        return Err(CliError::Argument("no method configurations given".into()));
    }
    for m in methods {
        validate_rho(m.rho)?;
        m.threshold
            .validate()
            .map_err(|e| CliError::Argument(format!("{}: {e}", m.name)))?;
    }
    Ok(())
}

fn validate_sweep(sweep: &[f64]) -> Result<()> {
    match sweep.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        Some(s) => Err(CliError::Argument(format!(
            "sweep scale {s} is not positive"
        ))),
        None => Ok(()),
    }
}

fn evaluation_metadata(
    command: &str,
    scenario: &SimulationScenario,
    methods: &[MethodConfig],
    sweep: &[f64],
) -> Metadata {
    let mut meta = scenario_metadata(command, scenario);
    for m in methods {
        let mut inner = Metadata::default();
        threshold_metadata(&mut inner, m.rho, &m.threshold);
        let desc = inner
            .render()
            .lines()
            .map(|l| l.trim_start_matches("# ").replace(": ", "="))
            .collect::<Vec<_>>()
            .join(" ");
        meta.push(&format!("method[{}]", m.name), desc);
    }
    meta.push("sweep", join(sweep.iter().map(|&s| exact(s))));
    meta
}

fn run_evaluation(
    scenario: &SimulationScenario,
    methods: &[MethodConfig],
    sweep: &[f64],
) -> Result<Vec<EvalReport>> {
    crate::scenario::validate_scenario(scenario)?;
    validate_methods(methods)?;
    validate_sweep(sweep)?;
    Ok(evaluate(scenario, methods, sweep)?)
}

/// Runs every method on the scenario and writes `summary.tsv`,
/// `metrics.tsv`, `replicates.tsv`, `roc.tsv` (when `sweep` is not empty)
/// and `report.json`. Without `out` the summary goes to stdout.
pub fn evaluate_command(
    scenario: &SimulationScenario,
    methods: &[MethodConfig],
    sweep: &[f64],
    out: Option<&Path>,
) -> Result<Vec<EvalReport>> {
    let reports = run_evaluation(scenario, methods, sweep)?;
    let meta = evaluation_metadata("evaluate", scenario, methods, sweep);
    match out {
        None => print!("{}", summary_table(&meta, &reports).into_string()),
        Some(dir) => {
            summary_table(&meta, &reports).write_to(&dir.join("summary.tsv"))?;
            metrics_table(&meta, &reports).write_to(&dir.join("metrics.tsv"))?;
            replicates_table(&meta, &reports).write_to(&dir.join("replicates.tsv"))?;
            if !sweep.is_empty() {
                roc_table(&meta, &reports).write_to(&dir.join("roc.tsv"))?;
            }
            write_file(&dir.join("report.json"), &report_json(&reports)?)?;
        }
    }
    Ok(reports)
}

/// Sweeps the threshold scale and writes `roc.tsv` and `auc.tsv`. Without
/// `out` the AUC table goes to stdout.
pub fn roc_command(
    scenario: &SimulationScenario,
    methods: &[MethodConfig],
    sweep: &[f64],
    out: Option<&Path>,
) -> Result<Vec<EvalReport>> {
    if sweep.is_empty() {
        return Err(CliError::Argument("sweep must not be empty".into()));
    }
    let reports = run_evaluation(scenario, methods, sweep)?;
    let meta = evaluation_metadata("roc", scenario, methods, sweep);
    match out {
        None => print!("{}", auc_table(&meta, &reports).into_string()),
        Some(dir) => {
            roc_table(&meta, &reports).write_to(&dir.join("roc.tsv"))?;
            auc_table(&meta, &reports).write_to(&dir.join("auc.tsv"))?;
        }
    }
    Ok(reports)
}
