use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::GridPoint;
use crate::scenarios::Check;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub point: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
    pub contract: bool,
}

impl From<&Check> for CheckRecord {
    fn from(c: &Check) -> Self {
        CheckRecord {
            name: c.name.clone(),
            point: c.point.clone(),
            value: c.value,
            limit: c.limit,
            pass: c.pass,
            contract: c.contract,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    #[serde(rename = "L")]
    pub l: i64,
    pub b: f64,
    pub beta: f64,
    pub mu: f64,
}

impl From<GridPoint> for PointRecord {
    fn from(p: GridPoint) -> Self {
        PointRecord {
            l: p.l,
            b: p.b,
            beta: p.beta,
            mu: p.mu,
        }
    }
}

/// The JSON report of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    /// The statement the scenario exercises.
    pub identity: String,
    pub config_hash: String,
    pub engine: String,
    pub seed: u64,
    pub points: Vec<PointRecord>,
    /// True iff every contract check passed.
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
    pub series: BTreeMap<String, Vec<f64>>,
}

impl Report {
    pub fn load(path: &std::path::Path) -> crate::Result<Report> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn failed_contracts(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.contract && !c.pass)
    }
}
