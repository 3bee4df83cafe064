use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::CommandKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParameterValue {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LSampleRecord {
    pub x: Vec<f64>,
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureRecord {
    pub kind: String,
    pub order: usize,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceRecord {
    pub resolution: usize,
    pub discrete_modulus: f64,
    pub relative_gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    pub command: CommandKind,
    pub quadrature: QuadratureRecord,
    pub node_count: usize,
    pub min_jacobian: f64,
    /// `|mod(refined quadrature) − mod|`
    pub quadrature_error: Option<f64>,
    pub checks: Vec<CheckRecord>,
    pub convergence: Vec<ConvergenceRecord>,
}

/// Result file written by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDocument {
    pub family: String,
    pub parameters: BTreeMap<String, ParameterValue>,
    pub p: f64,
    pub q: f64,
    pub modulus: f64,
    pub expected_modulus: Option<f64>,
    pub relative_error: Option<f64>,
    pub l_samples: Vec<LSampleRecord>,
    pub diagnostics: Diagnostics,
    pub seed: u64,
}

impl ResultDocument {
    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("result documents hold only finite numbers");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// One row per `l` sample: `x0,…,x{k−1},l`.
    pub fn to_csv(&self) -> String {
        let dim = self.l_samples.first().map_or(0, |s| s.x.len());
        let mut out = String::new();
        let header: Vec<String> = (0..dim)
            .map(|i| format!("x{i}"))
            .chain(["l".to_string()])
            .collect();
        let _ = writeln!(out, "{}", header.join(","));
        for sample in &self.l_samples {
            let row: Vec<String> = sample
                .x
                .iter()
                .chain([&sample.l])
                .map(|v| v.to_string())
                .collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn all_checks_passed(&self) -> bool {
        self.diagnostics.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &str> {
        self.diagnostics
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
    }
}
