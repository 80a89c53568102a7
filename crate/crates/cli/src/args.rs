// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tguhm::eval::{default_sweep, MethodConfig};
use tguhm::sim::{BuiltinSignal, NoiseKind, SignalSpec, SimulationScenario};
use tguhm::ThresholdConfig64;

use crate::commands::{
    evaluate_command, roc_command, segment_command, simulate_command, SegmentSettings,
};
use crate::scenario::{default_scenario, load_scenario, validate_scenario, CONFIG_ENV};
use crate::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "tguhm",
    version,
    about = "Tail-greedy unbalanced Haar segmentation of copy-number ratios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment a ratio file (columns chromosome, start, end, ratio).
    Segment(SegmentArgs),
    /// Write simulated ratio files and their ground truth.
    Simulate(SimulateArgs),
    /// Score one or more settings on a simulation scenario.
    Evaluate(EvaluateArgs),
    /// Sweep the threshold and report ROC points and AUC.
    Roc(EvaluateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    /// Fraction of regions merged per pass.
    #[arg(long, default_value_t = tguhm::DEFAULT_RHO)]
    pub rho: f64,
    /// Minimum number of windows on each side of a kept change-point.
    #[arg(long = "cstar", default_value_t = 2)]
    pub c_star: usize,
    /// Fixed threshold; estimated from the data when omitted.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Fixed noise level; estimated from the data when omitted.
    #[arg(long)]
    pub sigma: Option<f64>,
}

impl ThresholdArgs {
    fn config(&self, c_star: usize) -> ThresholdConfig64 {
        ThresholdConfig64 {
            lambda: self.lambda,
            sigma: self.sigma,
            ..ThresholdConfig64::default().with_c_star(c_star)
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    /// Tab-separated ratio file.
    pub input: PathBuf,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    /// Segments whose mean ratio is within this distance of 1 are neutral.
    #[arg(long, default_value_t = tguhm::sim::DEFAULT_THETA)]
    pub theta: f64,
    /// Segment all chromosomes together; chromosome ends stay change-points.
    #[arg(long)]
    pub whole_genome: bool,
    /// Output directory; the segments table goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Scenario file plus per-key overrides.
#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario TOML file; a built-in F1 scenario is used when omitted.
    #[arg(long, env = CONFIG_ENV)]
    pub scenario: Option<PathBuf>,
    /// Built-in test signal: F1, F2 or F3.
    #[arg(long)]
    pub signal: Option<BuiltinSignal>,
    /// Noise model: gaussian or contaminated.
    #[arg(long)]
    pub noise: Option<NoiseKind>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Base seed for the replicate generators.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Contamination probability [default: 0.05].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Contaminant standard deviation as a multiple of sigma [default: 3].
    #[arg(long)]
    pub inflation: Option<f64>,
    /// Comma-separated noise levels [default: 0.1,0.2,0.3,0.4,0.5].
    #[arg(long, value_delimiter = ',')]
    pub sigma_grid: Option<Vec<f64>>,
    /// Largest distance, in windows, between matched change-points [default: 2].
    #[arg(long)]
    pub match_window: Option<usize>,
    /// Smallest level difference counted as a true change-point [default: 0.1].
    #[arg(long)]
    pub theta: Option<f64>,
}

impl ScenarioArgs {
    pub fn resolve(&self) -> Result<SimulationScenario> {
        let mut s = match &self.scenario {
            Some(path) => load_scenario(path)?,
            None => default_scenario(),
        };
        if let Some(v) = self.signal {
            s.signal = SignalSpec::Builtin(v);
        }
        if let Some(v) = self.noise {
            s.noise = v;
        }
        if let Some(v) = self.replicates {
            s.replicates = v;
        }
        if let Some(v) = self.seed {
            s.base_seed = v;
        }
        if let Some(v) = self.alpha {
            s.alpha = v;
        }
        if let Some(v) = self.inflation {
            s.inflation = v;
        }
        if let Some(v) = &self.sigma_grid {
            s.sigma_grid = v.clone();
        }
        if let Some(v) = self.match_window {
            s.match_window = v;
        }
        if let Some(v) = self.theta {
            s.theta = v;
        }
        validate_scenario(&s)?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    /// Comma-separated c* values to compare; overrides --cstar.
    #[arg(long = "cstar-grid", value_delimiter = ',')]
    pub c_star_grid: Option<Vec<usize>>,
    /// Comma-separated threshold scales [default: 30 log-spaced from 0.1 to 3].
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<f64>>,
    /// Skip the threshold sweep (evaluate only).
    #[arg(long)]
    pub no_roc: bool,
    /// Output directory; a summary goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl EvaluateArgs {
    pub fn methods(&self) -> Vec<MethodConfig> {
        let grid = self
            .c_star_grid
            .clone()
            .unwrap_or_else(|| vec![self.threshold.c_star]);
        grid.into_iter()
            .map(|c| MethodConfig {
                name: format!("cstar={c}"),
                rho: self.threshold.rho,
                threshold: self.threshold.config(c),
            })
            .collect()
    }

    pub fn sweep(&self) -> Vec<f64> {
        if self.no_roc {
            return Vec::new();
        }
        self.sweep.clone().unwrap_or_else(default_sweep)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Segment(a) => {
            let settings = SegmentSettings {
                rho: a.threshold.rho,
                threshold: a.threshold.config(a.threshold.c_star),
                theta: a.theta,
                whole_genome: a.whole_genome,
            };
            segment_command(&a.input, a.out.as_deref(), &settings)?;
        }
        Command::Simulate(a) => {
            let scenario = a.scenario.resolve()?;
            let files = simulate_command(&scenario, &a.out)?;
            log::info!("wrote {} files to {}", files.len(), a.out.display());
        }
        Command::Evaluate(a) => {
            let scenario = a.scenario.resolve()?;
            evaluate_command(&scenario, &a.methods(), &a.sweep(), a.out.as_deref())?;
        }
        Command::Roc(a) => {
            if a.no_roc {
                return Err(CliError::Argument(
                    "--no-roc conflicts with the roc command".into(),
                ));
            }
            let scenario = a.scenario.resolve()?;
            roc_command(&scenario, &a.methods(), &a.sweep(), a.out.as_deref())?;
        }
    }
    Ok(())
}
