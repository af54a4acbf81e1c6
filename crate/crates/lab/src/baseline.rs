//! Pinned series and the comparison against a fresh report.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::report::Report;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinnedSeries {
    pub values: Vec<f64>,
    /// A value passes when |got − expected| ≤ abs_tol + rel_tol·|expected|.
    pub abs_tol: f64,
    pub rel_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionBaseline {
    pub schema_version: u32,
    pub scenario: String,
    pub config_hash: String,
    pub series: BTreeMap<String, PinnedSeries>,
}

impl RegressionBaseline {
    pub fn from_report(report: &Report, rel_tol: f64) -> RegressionBaseline {
        RegressionBaseline {
            schema_version: report.schema_version,
            scenario: report.scenario.clone(),
            config_hash: report.config_hash.clone(),
            series: report
                .series
                .iter()
                .map(|(k, v)| {
                    (
                        k.clone(),
                        PinnedSeries {
                            values: v.clone(),
                            abs_tol: 1e-14,
                            rel_tol,
                        },
                    )
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mismatch {
    pub series: String,
    /// None when the series is missing or has the wrong length.
    pub index: Option<usize>,
    pub expected: Option<f64>,
    pub got: Option<f64>,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.index, self.expected, self.got) {
            (Some(i), Some(e), Some(g)) => write!(
                f,
                "{}[{i}]: expected {e:.17e}, got {g:.17e} (delta {:.3e})",
                self.series,
                g - e
            ),
            _ => write!(f, "{}: missing or of a different length", self.series),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Comparison {
    Pass { series: usize },
    /// The report was produced from a different configuration; values are
    /// not compared.
    ConfigDrift { expected: String, got: String },
    ValueDrift { mismatches: Vec<Mismatch> },
}

impl Comparison {
    pub fn passed(&self) -> bool {
        matches!(self, Comparison::Pass { .. })
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Comparison::Pass { series } => write!(f, "baseline: pass ({series} series)"),
            Comparison::ConfigDrift { expected, got } => write!(
                f,
                "baseline: config hash mismatch (baseline {expected}, report {got})"
            ),
            Comparison::ValueDrift { mismatches } => {
                writeln!(f, "baseline: {} value(s) drifted", mismatches.len())?;
                for m in mismatches {
                    writeln!(f, "  {m}")?;
                }
                Ok(())
            }
        }
    }
}

pub fn compare_baseline(report: &Report, baseline: &RegressionBaseline) -> Comparison {
    if report.config_hash != baseline.config_hash {
        return Comparison::ConfigDrift {
            expected: baseline.config_hash.clone(),
            got: report.config_hash.clone(),
        };
    }
    let mut mismatches = Vec::new();
    for (name, pinned) in &baseline.series {
        let got = match report.series.get(name) {
            Some(g) if g.len() == pinned.values.len() => g,
            _ => {
                mismatches.push(Mismatch {
                    series: name.clone(),
                    index: None,
                    expected: None,
                    got: None,
                });
                continue;
            }
        };
        for (i, (&e, &g)) in pinned.values.iter().zip(got).enumerate() {
            let ok = (g - e).abs() <= pinned.abs_tol + pinned.rel_tol * e.abs();
            if !ok {
                mismatches.push(Mismatch {
                    series: name.clone(),
                    index: Some(i),
                    expected: Some(e),
                    got: Some(g),
                });
            }
        }
    }
    if mismatches.is_empty() {
        Comparison::Pass {
            series: baseline.series.len(),
        }
    } else {
        Comparison::ValueDrift { mismatches }
    }
}
