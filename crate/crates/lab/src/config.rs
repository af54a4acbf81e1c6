//! Scenario files: a model section in the bulkedge model format plus the
//! sweep.
//!
//! ```toml
//! scenario = "magnetization_gap"
//! engine = "free"          # ed | free | auto (default)
//! L = [8, 16, 32]          # defaults to model.L
//! d = [5, 10, 15]
//! seed = 2024
//! out = "out/magnetization"
//!
//! [grid]
//! beta = [2.0]
//! mu = [0.0]
//! b = [0.9424777960769379] # defaults to model.b
//!
//! [model]
//! preset = "hofstadter"
//! b = 0.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use bulkedge::config::{ModelFile, RegionName};
use bulkedge::engine::EngineKind;
use bulkedge::ModelSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Spanned;

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Continuity,
    Conservation,
    Bloch,
    MagnetizationGap,
    EdgeIndependence,
    MuDerivative,
    Indistinguishability,
    BulkPressure,
    EngineEquivalence,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Continuity => "continuity",
            Scenario::Conservation => "conservation",
            Scenario::Bloch => "bloch",
            Scenario::MagnetizationGap => "magnetization_gap",
            Scenario::EdgeIndependence => "edge_independence",
            Scenario::MuDerivative => "mu_derivative",
            Scenario::Indistinguishability => "indistinguishability",
            Scenario::BulkPressure => "bulk_pressure",
            Scenario::EngineEquivalence => "engine_equivalence",
        }
    }

    /// Whether the results depend on β and μ.
    pub fn thermal(self) -> bool {
        self != Scenario::Continuity
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    beta: Spanned<Vec<f64>>,
    mu: Spanned<Vec<f64>>,
    #[serde(default)]
    b: Option<Spanned<Vec<f64>>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    scenario: Scenario,
    #[serde(default)]
    engine: EngineKind,
    #[serde(rename = "L", default)]
    l: Option<Spanned<Vec<i64>>>,
    #[serde(default)]
    d: Option<Spanned<Vec<i64>>>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    baseline: Option<PathBuf>,
    #[serde(default)]
    samples: Option<usize>,
    #[serde(default)]
    fd_step: Option<f64>,
    #[serde(default)]
    baseline_rtol: Option<f64>,
    grid: GridFile,
    model: ModelFile,
}

/// A validated scenario.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub engine: EngineKind,
    #[serde(rename = "L")]
    pub l: Vec<i64>,
    pub d: Vec<i64>,
    pub beta: Vec<f64>,
    pub mu: Vec<f64>,
    pub b: Vec<f64>,
    pub seed: u64,
    /// Random regions per grid point in the conservation scenario.
    pub samples: usize,
    pub fd_step: f64,
    pub baseline_rtol: f64,
    pub model: ModelFile,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub baseline: Option<PathBuf>,
}

/// One point of the sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    #[serde(rename = "L")]
    pub l: i64,
    pub b: f64,
    pub beta: f64,
    pub mu: f64,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn nonempty<T>(text: &str, field: &str, v: &Spanned<Vec<T>>) -> Result<()> {
    if v.get_ref().is_empty() {
        return Err(LabError::Config {
            field: field.into(),
            line: Some(line_of(text, v.span().start)),
            message: "must be nonempty".into(),
        });
    }
    Ok(())
}

fn invalid(text: &str, field: &str, span: std::ops::Range<usize>, message: String) -> LabError {
    LabError::Config {
        field: field.into(),
        line: Some(line_of(text, span.start)),
        message,
    }
}

impl ScenarioConfig {
    /// Parse and validate; relative `out` and `baseline` paths are taken
    /// relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<ScenarioConfig> {
        let f: ScenarioFile = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            LabError::Config {
                field: "(file)".into(),
                line,
                message: e.message().to_string(),
            }
        })?;
        nonempty(text, "grid.beta", &f.grid.beta)?;
        nonempty(text, "grid.mu", &f.grid.mu)?;
        if let Some(b) = &f.grid.b {
            nonempty(text, "grid.b", b)?;
        }
        if let Some(l) = &f.l {
            nonempty(text, "L", l)?;
        }
        if let Some(bad) = f.grid.beta.get_ref().iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(invalid(text, "grid.beta", f.grid.beta.span(), format!("β must be positive and finite, got {bad}")));
        }
        if let Some(bad) = f.grid.mu.get_ref().iter().find(|m| !m.is_finite()) {
            return Err(invalid(text, "grid.mu", f.grid.mu.span(), format!("μ must be finite, got {bad}")));
        }
        let l = match &f.l {
            Some(l) => {
                if let Some(bad) = l.get_ref().iter().find(|l| **l < 0) {
                    return Err(invalid(text, "L", l.span(), format!("must be nonnegative, got {bad}")));
                }
                l.get_ref().clone()
            }
            None if f.model.region == RegionName::Custom => vec![0],
            None => vec![f.model.l.ok_or_else(|| LabError::Config {
                field: "L".into(),
                line: None,
                message: "give an L list or model.L".into(),
            })?],
        };
        let d = match &f.d {
            Some(d) => {
                if let Some(bad) = d.get_ref().iter().find(|d| **d < 1) {
                    return Err(invalid(text, "d", d.span(), format!("depths start at 1, got {bad}")));
                }
                d.get_ref().clone()
            }
            None => Vec::new(),
        };
        if matches!(
            f.scenario,
            Scenario::EdgeIndependence | Scenario::Indistinguishability
        ) && d.is_empty()
        {
            return Err(LabError::Config {
                field: "d".into(),
                line: None,
                message: format!("the {} scenario needs a nonempty d list", f.scenario),
            });
        }
        let fd_step = f.fd_step.unwrap_or(match f.scenario {
            Scenario::MuDerivative => bulkedge::thermo::DEFAULT_MU_STEP,
            _ => bulkedge::thermo::DEFAULT_B_STEP,
        });
        if !(fd_step > 0.0 && fd_step.is_finite()) {
            return Err(LabError::Config {
                field: "fd_step".into(),
                line: None,
                message: format!("must be positive, got {fd_step}"),
            });
        }
        let config = ScenarioConfig {
            scenario: f.scenario,
            engine: f.engine,
            l,
            d,
            beta: f.grid.beta.into_inner(),
            mu: f.grid.mu.into_inner(),
            b: f.grid.b.map_or_else(|| vec![f.model.b], Spanned::into_inner),
            seed: f.seed,
            samples: f.samples.unwrap_or(100),
            fd_step,
            baseline_rtol: f.baseline_rtol.unwrap_or(1e-9),
            model: f.model,
            out: base.join(f.out.unwrap_or_else(|| PathBuf::from("lab-out"))),
            baseline: f.baseline.map(|p| base.join(p)),
        };
        // Surface model errors before any work is dispatched.
        for p in config.points() {
            config.spec(p)?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        ScenarioConfig::parse(&text, base)
    }

    /// L outermost, then b, β, μ. Scenarios that do not depend on the
    /// temperature use the first β and μ only.
    pub fn points(&self) -> Vec<GridPoint> {
        let (betas, mus) = if self.scenario.thermal() {
            (&self.beta[..], &self.mu[..])
        } else {
            (&self.beta[..1], &self.mu[..1])
        };
        let mut out = Vec::new();
        for &l in &self.l {
            for &b in &self.b {
                for &beta in betas {
                    for &mu in mus {
                        out.push(GridPoint { l, b, beta, mu });
                    }
                }
            }
        }
        out
    }

    pub fn spec(&self, p: GridPoint) -> Result<ModelSpec> {
        let mut m = self.model.clone();
        if m.region != RegionName::Custom {
            m.l = Some(p.l);
        }
        m.b = p.b;
        m.build().map_err(|e| LabError::Config {
            field: "model".into(),
            line: None,
            message: e.to_string(),
        })
    }

    /// SHA-256 of everything that determines the numbers: the output
    /// location and the worker count are excluded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
