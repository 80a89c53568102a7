// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic piecewise-constant signals and noise models for replicate
//! simulation studies.
//!
//! Every replicate is generated from its own ChaCha20 stream seeded by
//! [`derive_seed`]`(base_seed, r)`. The seed does not depend on the noise
//! level, so replicate `r` sees the same standard-normal draws at every
//! sigma in the grid.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Series};

/// Generator recorded in output metadata.
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha), splitmix64 seed derivation";

/// Version of the builtin F1/F2/F3 geometry tables.
pub const BUILTIN_SIGNALS_VERSION: u32 = 1;

/// Minimum level difference that counts as a change-point.
pub const DEFAULT_THETA: f64 = 0.1;

/// Short altered segments have between 6 and 10 windows inclusive.
pub const SHORT_SEGMENT_RANGE: (usize, usize) = (6, 10);

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_INFLATION: f64 = 3.0;
pub const DEFAULT_SIGMA_GRID: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

// (length, level) tables. Baseline ratio is 1.0.
const F1: &[(usize, f64)] = &[
    (40, 1.0),
    (8, 1.5),
    (35, 1.0),
    (25, 2.0),
    (7, 2.5),
    (30, 2.0),
    (20, 4.0),
    (30, 1.0),
    (15, 0.0),
    (6, 0.5),
    (25, 0.0),
    (9, 0.5),
    (40, 1.0),
];

const F2: &[(usize, f64)] = &[
    (30, 1.0),
    (6, 1.5),
    (30, 1.0),
    (8, 2.0),
    (30, 1.0),
    (10, 0.5),
    (30, 1.0),
    (7, 3.0),
    (30, 1.0),
    (9, 0.0),
    (30, 1.0),
];

const F3: &[(usize, f64)] = &[(147, 1.0), (6, 1.5), (147, 1.0)];

/// A piecewise-constant signal given as segment lengths and levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseSignal {
    pub lengths: Vec<usize>,
    pub levels: Vec<f64>,
}

impl PiecewiseSignal {
    pub fn new(lengths: Vec<usize>, levels: Vec<f64>) -> Result<Self> {
        let signal = Self { lengths, levels };
        signal.validate()?;
        Ok(signal)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() {
            return Err(Error::param("lengths", "signal needs at least one segment"));
        }
        if self.lengths.len() != self.levels.len() {
            return Err(Error::param(
                "levels",
                format!(
                    "{} levels for {} lengths",
                    self.levels.len(),
                    self.lengths.len()
                ),
            ));
        }
        if self.lengths.contains(&0) {
            return Err(Error::param("lengths", "segment lengths must be positive"));
        }
        if self.levels.iter().any(|l| !l.is_finite()) {
            return Err(Error::param("levels", "levels must be finite"));
        }
        Ok(())
    }

    fn from_table(table: &[(usize, f64)]) -> Self {
        Self {
            lengths: table.iter().map(|&(l, _)| l).collect(),
            levels: table.iter().map(|&(_, v)| v).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.lengths.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-window true level.
    pub fn values(&self) -> Vec<f64> {
        self.lengths
            .iter()
            .zip(&self.levels)
            .flat_map(|(&len, &level)| std::iter::repeat_n(level, len))
            .collect()
    }

    /// Cumulative segment boundaries `0, l_1, l_1 + l_2, ..., n`.
    pub fn bounds(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.lengths.len() + 1);
        out.push(0);
        let mut acc = 0;
        for &l in &self.lengths {
            acc += l;
            out.push(acc);
        }
        out
    }

    /// Interior boundaries where the level jumps by more than `theta`.
    pub fn change_points(&self, theta: f64) -> Vec<usize> {
        let bounds = self.bounds();
        self.levels
            .windows(2)
            .enumerate()
            .filter(|(_, w)| (w[1] - w[0]).abs() > theta)
            .map(|(j, _)| bounds[j + 1])
            .collect()
    }

    /// Change-points bounding a segment whose length lies in `range`
    /// (inclusive). Both ends of a short segment count.
    pub fn short_segment_change_points(&self, theta: f64, range: (usize, usize)) -> Vec<usize> {
        let bounds = self.bounds();
        let cps = self.change_points(theta);
        let mut out: Vec<usize> = self
            .lengths
            .iter()
            .enumerate()
            .filter(|(_, &l)| l >= range.0 && l <= range.1)
            .flat_map(|(j, _)| [bounds[j], bounds[j + 1]])
            .filter(|b| cps.binary_search(b).is_ok())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BuiltinSignal {
    F1,
    F2,
    F3,
}

impl FromStr for BuiltinSignal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "F1" => Ok(Self::F1),
            "F2" => Ok(Self::F2),
            "F3" => Ok(Self::F3),
            _ => Err(Error::UnknownSignal(s.to_string())),
        }
    }
}

impl fmt::Display for BuiltinSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::F1 => "F1",
            Self::F2 => "F2",
            Self::F3 => "F3",
        };
        f.write_str(s)
    }
}

/// F1 mixes long and short segments over levels 0 to 4; F2 holds only
/// short altered segments; F3 is a single 6-window alteration in the middle
/// of a long baseline.
pub fn builtin_signal(id: BuiltinSignal) -> PiecewiseSignal {
    match id {
        BuiltinSignal::F1 => PiecewiseSignal::from_table(F1),
        BuiltinSignal::F2 => PiecewiseSignal::from_table(F2),
        BuiltinSignal::F3 => PiecewiseSignal::from_table(F3),
    }
}

/// Either a builtin signal name or an explicit lengths/levels table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignalSpec {
    Builtin(BuiltinSignal),
    Explicit(PiecewiseSignal),
}

impl SignalSpec {
    pub fn resolve(&self) -> Result<PiecewiseSignal> {
        match self {
            Self::Builtin(id) => Ok(builtin_signal(*id)),
            Self::Explicit(s) => {
                s.validate()?;
                Ok(s.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Gaussian,
    Contaminated,
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Self::Gaussian),
            "contaminated" => Ok(Self::Contaminated),
            other => Err(Error::param(
                "noise",
                format!("expected `gaussian` or `contaminated`, got `{other}`"),
            )),
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gaussian => "gaussian",
            Self::Contaminated => "contaminated",
        })
    }
}

/// I.i.d. noise: `N(0, sigma^2)`, or the contaminated normal
/// `(1 - alpha) N(0, sigma^2) + alpha N(0, (d sigma)^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma: f64,
    pub contamination_prob: f64,
    pub inflation: f64,
}

impl NoiseModel {
    pub fn gaussian(sigma: f64) -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            sigma,
            contamination_prob: DEFAULT_ALPHA,
            inflation: DEFAULT_INFLATION,
        }
    }

    pub fn contaminated(sigma: f64) -> Self {
        Self {
            kind: NoiseKind::Contaminated,
            ..Self::gaussian(sigma)
        }
    }

    /// Standard deviation of the contaminating component.
    pub fn contaminant_sd(&self) -> f64 {
        self.inflation * self.sigma
    }

    /// Marginal variance of one draw.
    pub fn variance(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        match self.kind {
            NoiseKind::Gaussian => s2,
            NoiseKind::Contaminated => {
                let a = self.contamination_prob;
                s2 * (1.0 - a + a * self.inflation * self.inflation)
            }
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-replicate seed. For a fixed base seed this is a bijection of `r`.
pub fn derive_seed(base_seed: u64, r: u64) -> u64 {
    splitmix64(base_seed.wrapping_add(splitmix64(r)))
}

/// `n` i.i.d. draws from `model`.
///
/// Gaussian draws consume one standard normal each. Contaminated draws
/// consume a uniform (component selection, contaminant iff `u < alpha`)
/// followed by one standard normal.
pub fn sample_noise(model: &NoiseModel, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| match model.kind {
            NoiseKind::Gaussian => {
                let z: f64 = rng.sample(StandardNormal);
                model.sigma * z
            }
            NoiseKind::Contaminated => {
                let u: f64 = rng.random();
                let z: f64 = rng.sample(StandardNormal);
                if u < model.contamination_prob {
                    model.contaminant_sd() * z
                } else {
                    model.sigma * z
                }
            }
        })
        .collect()
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_inflation() -> f64 {
    DEFAULT_INFLATION
}
fn default_theta() -> f64 {
    DEFAULT_THETA
}
fn default_match_window() -> usize {
    2
}
fn default_short_range() -> (usize, usize) {
    SHORT_SEGMENT_RANGE
}
fn default_sigma_grid() -> Vec<f64> {
    DEFAULT_SIGMA_GRID.to_vec()
}

/// A replicate simulation study over a grid of noise levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationScenario {
    pub signal: SignalSpec,
    pub noise: NoiseKind,
    #[serde(default = "default_sigma_grid")]
    pub sigma_grid: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_inflation")]
    pub inflation: f64,
    pub replicates: usize,
    pub base_seed: u64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_match_window")]
    pub match_window: usize,
    #[serde(default = "default_short_range")]
    pub short_segment_range: (usize, usize),
}

impl SimulationScenario {
    pub fn new(signal: SignalSpec, noise: NoiseKind, replicates: usize, base_seed: u64) -> Self {
        Self {
            signal,
            noise,
            sigma_grid: default_sigma_grid(),
            alpha: DEFAULT_ALPHA,
            inflation: DEFAULT_INFLATION,
            replicates,
            base_seed,
            theta: DEFAULT_THETA,
            match_window: default_match_window(),
            short_segment_range: SHORT_SEGMENT_RANGE,
        }
    }

    pub fn with_sigma_grid(mut self, grid: Vec<f64>) -> Self {
        self.sigma_grid = grid;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.resolve()?;
        if self.replicates == 0 {
            return Err(Error::param("replicates", "must be at least 1"));
        }
        if self.sigma_grid.is_empty() {
            return Err(Error::param("sigma_grid", "must not be empty"));
        }
        if let Some(s) = self
            .sigma_grid
            .iter()
            .find(|s| !(s.is_finite() && **s >= 0.0))
        {
            return Err(Error::param(
                "sigma_grid",
                format!("invalid noise level {s}"),
            ));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::param(
                "alpha",
                format!("must lie in [0, 1), got {}", self.alpha),
            ));
        }
        if !(self.inflation.is_finite() && self.inflation > 0.0) {
            return Err(Error::param("inflation", "must be finite and > 0"));
        }
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return Err(Error::param("theta", "must be finite and >= 0"));
        }
        let (lo, hi) = self.short_segment_range;
        if lo == 0 || lo > hi {
            return Err(Error::param(
                "short_segment_range",
                format!("expected 1 <= lo <= hi, got ({lo}, {hi})"),
            ));
        }
        Ok(())
    }

    pub fn noise_model(&self, sigma: f64) -> NoiseModel {
        NoiseModel {
            kind: self.noise,
            sigma,
            contamination_prob: self.alpha,
            inflation: self.inflation,
        }
    }
}

/// One simulated data set together with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    /// 1-based replicate index.
    pub index: usize,
    pub sigma: f64,
    pub seed: u64,
    pub series: Series<f64>,
    pub truth: Vec<f64>,
    pub true_change_points: Vec<usize>,
}

/// Replicate `r` (1-based) of `scenario` at noise level `sigma`.
pub fn generate_replicate(
    scenario: &SimulationScenario,
    sigma: f64,
    r: usize,
) -> Result<Replicate> {
    if r == 0 || r > scenario.replicates {
        return Err(Error::param(
            "replicate",
            format!("index {r} outside 1..={}", scenario.replicates),
        ));
    }
    let signal = scenario.signal.resolve()?;
    Ok(replicate_of(&signal, scenario, sigma, r))
}

pub(crate) fn replicate_of(
    signal: &PiecewiseSignal,
    scenario: &SimulationScenario,
    sigma: f64,
    r: usize,
) -> Replicate {
    let truth = signal.values();
    let seed = derive_seed(scenario.base_seed, r as u64);
    let noise = sample_noise(&scenario.noise_model(sigma), truth.len(), seed);
    let y: Vec<f64> = truth.iter().zip(&noise).map(|(f, e)| f + e).collect();
    let series = Series::from_values(y).expect("simulated values are finite and non-empty");
    Replicate {
        index: r,
        sigma,
        seed,
        series,
        truth,
        true_change_points: signal.change_points(scenario.theta),
    }
}
