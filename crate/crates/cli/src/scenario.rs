// SPDX-License-Identifier: MIT OR Apache-2.0

//! Scenario files in TOML.
//!
//! ```toml
//! signal = "F1"            # or a [signal] table with `lengths` and `levels`
//! noise = "contaminated"   # or "gaussian"
//! sigma_grid = [0.1, 0.2, 0.3, 0.4, 0.5]
//! alpha = 0.05
//! inflation = 3.0
//! replicates = 200
//! base_seed = 20240601
//! theta = 0.1
//! match_window = 2
//! short_segment_range = [6, 10]
//! ```

use std::fs;
use std::path::Path;

use tguhm::sim::{BuiltinSignal, NoiseKind, SignalSpec, SimulationScenario};

use crate::{CliError, Result};

/// Environment variable naming the scenario file used when `--scenario`
/// is not given.
pub const CONFIG_ENV: &str = "TGUHM_CONFIG";

pub const DEFAULT_REPLICATES: usize = 100;
pub const DEFAULT_SEED: u64 = 20240601;

/// F1 with contaminated noise over the default noise grid.
pub fn default_scenario() -> SimulationScenario {
    SimulationScenario::new(
        SignalSpec::Builtin(BuiltinSignal::F1),
        NoiseKind::Contaminated,
        DEFAULT_REPLICATES,
        DEFAULT_SEED,
    )
}

pub fn load_scenario(path: &Path) -> Result<SimulationScenario> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scenario(&text)
}

/// Parses and validates a scenario. Errors name the offending key.
pub fn parse_scenario(text: &str) -> Result<SimulationScenario> {
    let scenario: SimulationScenario = toml::from_str(text).map_err(|e| CliError::Scenario {
        key: offending_key(text, &e),
        message: e.message().to_string(),
    })?;
    validate_scenario(&scenario)?;
    Ok(scenario)
}

pub fn validate_scenario(scenario: &SimulationScenario) -> Result<()> {
    scenario.validate().map_err(|e| {
        let key = match &e {
            tguhm::Error::InvalidParameter { name, .. } => match *name {
                "lengths" | "levels" => format!("signal.{name}"),
                other => other.to_string(),
            },
            _ => "signal".to_string(),
        };
        CliError::Scenario {
            key,
            message: e.to_string(),
        }
    })
}

pub fn scenario_to_toml(scenario: &SimulationScenario) -> Result<String> {
    toml::to_string(scenario).map_err(|e| CliError::Scenario {
        key: "<document>".into(),
        message: e.to_string(),
    })
}

/// The field named by an unknown- or missing-field message, else the key
/// on the line the error points at.
fn offending_key(text: &str, err: &toml::de::Error) -> String {
    let msg = err.message();
    let names_field = msg.starts_with("unknown field") || msg.starts_with("missing field");
    if let Some(start) = msg.find('`').filter(|_| names_field) {
        if let Some(len) = msg[start + 1..].find('`') {
            return msg[start + 1..start + 1 + len].to_string();
        }
    }
    if let Some(span) = err.span() {
        let line_start = text[..span.start].rfind('\n').map_or(0, |i| i + 1);
        let line = text[line_start..].lines().next().unwrap_or("");
        if let Some((key, _)) = line.split_once('=') {
            let key = key.trim();
            if !key.is_empty() {
                return key.to_string();
            }
        }
    }
    "<document>".to_string()
}
