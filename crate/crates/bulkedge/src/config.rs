//! TOML model files.
//!
//! ```toml
//! preset = "hofstadter_hubbard"   # optional
//! L = 1
//! b = 1.0
//! U = 1.0                         # interaction strength of the preset
//! D = 2                           # optional overrides: s, R, D, strip
//!
//! [[bulk_hopping]]
//! displacement = [1, 0]
//! matrix = [[[1.0, 0.0]]]         # s×s entries as [re, im]
//!
//! [[edge_potential]]
//! site = [0, 0]
//! value = 0.7
//! ```
//!
//! Without a preset `s`, `R` and `D` are required. Tables are appended to
//! the preset's terms. `region` is `box` (Λ_L, default), `centered_box`
//! (B_L) or `custom` with an explicit `sites` list.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{RegionKind, Site, SiteSet};
use crate::model::{Block, BulkHop, DensityTerm, EdgeStrip, Mode, ModelSpec, PairHop};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Hofstadter,
    HofstadterHubbard,
    NearestNeighbourDensity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RegionName {
    #[default]
    Box,
    CenteredBox,
    Custom,
}

pub type Matrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopEntry {
    pub displacement: [i64; 2],
    pub matrix: Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    pub from: [i64; 2],
    pub to: [i64; 2],
    pub matrix: Matrix,
}

/// Modes as [x1, x2, orbital]; for bulk terms the sites are offsets of
/// a pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermEntry {
    pub modes: Vec<[i64; 3]>,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialEntry {
    pub site: [i64; 2],
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<i64>,
    pub b: f64,
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<u32>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip: Option<EdgeStrip>,
    #[serde(default)]
    pub region: RegionName,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sites: Vec<[i64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bulk_hopping: Vec<HopEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edge_hopping: Vec<PairEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bulk_interaction: Vec<TermEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edge_interaction: Vec<TermEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edge_potential: Vec<PotentialEntry>,
}

fn site(p: [i64; 2]) -> Site {
    Site::new(p[0], p[1])
}

fn pair(s: Site) -> [i64; 2] {
    [s.x1, s.x2]
}

fn block(m: &Matrix, s: usize, what: &str) -> Result<Block> {
    if m.len() != s || m.iter().any(|row| row.len() != s) {
        return Err(Error::Config(format!("{what}: matrix must be {s}×{s}")));
    }
    Ok(Block::from_shape_fn((s, s), |(i, j)| C64::new(m[i][j][0], m[i][j][1])))
}

fn matrix(b: &Block) -> Matrix {
    b.outer_iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

fn term(t: &TermEntry, s: usize, what: &str) -> Result<DensityTerm> {
    let modes = t
        .modes
        .iter()
        .map(|m| {
            if m[2] < 0 || m[2] as usize >= s {
                return Err(Error::Config(format!("{what}: orbital {} out of range", m[2])));
            }
            Ok(Mode::new(Site::new(m[0], m[1]), m[2] as usize))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityTerm {
        modes,
        coefficient: t.coefficient,
    })
}

fn entry(t: &DensityTerm) -> TermEntry {
    TermEntry {
        modes: t
            .modes
            .iter()
            .map(|m| [m.site.x1, m.site.x2, m.orbital as i64])
            .collect(),
        coefficient: t.coefficient,
    }
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<ModelFile> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<ModelSpec> {
        let region = match self.region {
            RegionName::Custom => {
                if self.sites.is_empty() {
                    return Err(Error::Config("sites: a custom region needs sites".into()));
                }
                None
            }
            _ => {
                let l = self
                    .l
                    .ok_or_else(|| Error::Config("L: required for box regions".into()))?;
                if l < 0 {
                    return Err(Error::Config(format!("L: must be nonnegative, got {l}")));
                }
                Some(l)
            }
        };
        let l = region.unwrap_or(0);
        let u = self.u.unwrap_or(0.0);
        let mut spec = match self.preset {
            Some(Preset::Hofstadter) => ModelSpec::hofstadter(l, self.b),
            Some(Preset::HofstadterHubbard) => ModelSpec::hofstadter_hubbard(l, self.b, u),
            Some(Preset::NearestNeighbourDensity) => {
                ModelSpec::nearest_neighbour_density(l, self.b, u)
            }
            None => {
                let need = |v: Option<u32>, name: &str| {
                    v.ok_or_else(|| Error::Config(format!("{name}: required without a preset")))
                };
                let s = self
                    .s
                    .ok_or_else(|| Error::Config("s: required without a preset".into()))?;
                if s == 0 {
                    return Err(Error::Config("s: must be at least 1".into()));
                }
                ModelSpec::empty(l, s, need(self.r, "R")?, need(self.d, "D")?, self.b)
            }
        };
        if self.preset.is_some() {
            if let Some(s) = self.s {
                if s != spec.internal_dim {
                    return Err(Error::Config(format!(
                        "s: the preset fixes s = {}, got {s}",
                        spec.internal_dim
                    )));
                }
            }
            if let Some(r) = self.r {
                spec.range = r;
                spec.bulk_hopping.range = r;
                spec.edge_hopping.range = r;
            }
            if let Some(d) = self.d {
                spec.strip_width = d;
            }
        } else if self.u.is_some() {
            return Err(Error::Config("U: only meaningful with a preset".into()));
        }
        if let Some(strip) = self.strip {
            spec.strip = strip;
        }
        match self.region {
            RegionName::Box => {}
            RegionName::CenteredBox => spec.region = SiteSet::centered_box(l),
            RegionName::Custom => spec.region = self.sites.iter().map(|p| site(*p)).collect(),
        }
        let s = spec.internal_dim;
        for h in &self.bulk_hopping {
            spec.bulk_hopping.displacements.push(BulkHop {
                displacement: site(h.displacement),
                amplitude: block(&h.matrix, s, "bulk_hopping")?,
            });
        }
        for h in &self.edge_hopping {
            spec.edge_hopping.pairs.push(PairHop {
                from: site(h.from),
                to: site(h.to),
                amplitude: block(&h.matrix, s, "edge_hopping")?,
            });
        }
        for t in &self.bulk_interaction {
            spec.bulk_interaction.terms.push(term(t, s, "bulk_interaction")?);
        }
        for t in &self.edge_interaction {
            spec.edge_interaction.terms.push(term(t, s, "edge_interaction")?);
        }
        if !self.edge_potential.is_empty() {
            let mut phi = BTreeMap::new();
            for p in &self.edge_potential {
                *phi.entry(site(p.site)).or_insert(0.0) += p.value;
            }
            spec = spec.add_edge_potential(&phi)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Every term written out as an explicit table, no preset.
    pub fn from_spec(spec: &ModelSpec) -> ModelFile {
        let (region, l, sites) = match spec.region.kind() {
            RegionKind::HalfPlaneBox { l } => (RegionName::Box, Some(l), Vec::new()),
            RegionKind::CenteredBox { l } => (RegionName::CenteredBox, Some(l), Vec::new()),
            _ => (RegionName::Custom, None, spec.region.iter().map(pair).collect()),
        };
        ModelFile {
            preset: None,
            l,
            b: spec.field,
            u: None,
            s: Some(spec.internal_dim),
            r: Some(spec.range),
            d: Some(spec.strip_width),
            strip: Some(spec.strip),
            region,
            sites,
            bulk_hopping: spec
                .bulk_hopping
                .displacements
                .iter()
                .map(|h| HopEntry {
                    displacement: pair(h.displacement),
                    matrix: matrix(&h.amplitude),
                })
                .collect(),
            edge_hopping: spec
                .edge_hopping
                .pairs
                .iter()
                .map(|h| PairEntry {
                    from: pair(h.from),
                    to: pair(h.to),
                    matrix: matrix(&h.amplitude),
                })
                .collect(),
            bulk_interaction: spec.bulk_interaction.terms.iter().map(entry).collect(),
            edge_interaction: spec.edge_interaction.terms.iter().map(entry).collect(),
            edge_potential: Vec::new(),
        }
    }
}
