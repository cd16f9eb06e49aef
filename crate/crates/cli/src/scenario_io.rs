//! Scenario JSON parsing, validation and canonical serialization.
//!
//! The on-disk format is a single JSON object:
//!
//! ```json
//! {
//!   "num_users": 2,
//!   "gain": [[1.0, 0.1], [0.1, 1.0]],
//!   "noise": [1.0, 1.0],
//!   "rate_min_bits": [1.0, 1.0],
//!   "bandwidth_hz": 80.0e6,
//!   "power_budget": 3.0
//! }
//! ```
//!
//! `gain` row `i` belongs to receiver `i`; `bandwidth_hz` and
//! `power_budget` are optional. Unknown keys are rejected to catch typos.

use icpower::{Channel, Scenario};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub num_users: usize,
    pub gain: Vec<Vec<f64>>,
    pub noise: Vec<f64>,
    pub rate_min_bits: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_budget: Option<f64>,
}

impl ScenarioFile {
    pub fn from_scenario(sc: &Scenario) -> Self {
        let u = sc.num_users();
        let ch = sc.channel();
        Self {
            num_users: u,
            gain: (0..u)
                .map(|i| (0..u).map(|k| ch.gain(i, k)).collect())
                .collect(),
            noise: (0..u).map(|i| ch.noise(i)).collect(),
            rate_min_bits: sc.rate_min().to_vec(),
            bandwidth_hz: sc.bandwidth_hz(),
            power_budget: sc.power_budget(),
        }
    }

    pub fn into_scenario(self) -> Result<Scenario, String> {
        let u = self.num_users;
        if u == 0 || u > icpower::model::MAX_USERS {
            return Err(format!(
                "num_users: must be between 1 and {}, got {u}",
                icpower::model::MAX_USERS
            ));
        }
        if self.gain.len() != u {
            return Err(format!("gain: expected {u} rows, got {}", self.gain.len()));
        }
        for (i, row) in self.gain.iter().enumerate() {
            if row.len() != u {
                return Err(format!(
                    "gain: row {i} has length {}, expected {u}",
                    row.len()
                ));
            }
            for (k, &g) in row.iter().enumerate() {
                if !g.is_finite() || g < 0.0 {
                    return Err(format!("gain: entry [{i}][{k}] must be finite and >= 0"));
                }
            }
        }
        if self.noise.len() != u {
            return Err(format!(
                "noise: expected {u} entries, got {}",
                self.noise.len()
            ));
        }
        for (i, &n) in self.noise.iter().enumerate() {
            if !n.is_finite() || n <= 0.0 {
                return Err(format!("noise: entry {i} must be finite and > 0"));
            }
        }
        if self.rate_min_bits.len() != u {
            return Err(format!(
                "rate_min_bits: expected {u} entries, got {}",
                self.rate_min_bits.len()
            ));
        }
        for (k, &r) in self.rate_min_bits.iter().enumerate() {
            if !r.is_finite() || r < 0.0 {
                return Err(format!("rate_min_bits: entry {k} must be finite and >= 0"));
            }
        }

        let channel = Channel::new(self.gain, self.noise).map_err(|e| format!("channel: {e}"))?;
        let mut sc = Scenario::new(channel, self.rate_min_bits).map_err(|e| e.to_string())?;
        if let Some(hz) = self.bandwidth_hz {
            if !hz.is_finite() || hz <= 0.0 {
                return Err("bandwidth_hz: must be finite and > 0".into());
            }
            sc = sc.with_bandwidth_hz(hz).map_err(|e| e.to_string())?;
        }
        if let Some(budget) = self.power_budget {
            if !budget.is_finite() || budget <= 0.0 {
                return Err("power_budget: must be finite and > 0".into());
            }
            sc = sc.with_power_budget(budget).map_err(|e| e.to_string())?;
        }
        Ok(sc)
    }
}

/// Parse a scenario from JSON text. Serde reports missing or unknown keys
/// by name; the numeric checks above name the offending key themselves.
pub fn parse_scenario(text: &str) -> Result<Scenario, String> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    file.into_scenario()
}

/// Canonical JSON for a scenario (single line, key order fixed by the
/// struct). Feeding it back through [`parse_scenario`] reproduces the
/// scenario exactly.
pub fn scenario_to_json(sc: &Scenario) -> String {
    serde_json::to_string(&ScenarioFile::from_scenario(sc)).expect("serialization works")
}
