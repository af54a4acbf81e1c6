//! Lattice Hamiltonians with a uniform magnetic field:
//!
//! H = Σ_{x,y} a*_x T_b(x,y) a_y + Σ_X Φ(X),
//!
//! with hoppings split into a translation-invariant bulk part and an edge
//! part supported near the boundary, and Φ built from number operators only.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, Site, SiteSet};
use crate::linalg;

/// A mode of the one-body space ℓ²(X, C^s).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mode {
    pub site: Site,
    pub orbital: usize,
}

impl Mode {
    pub fn new(site: Site, orbital: usize) -> Self {
        Mode { site, orbital }
    }
}

/// An s×s hopping matrix.
pub type Block = Array2<C64>;

pub fn adjoint(t: &Block) -> Block {
    t.t().mapv(|z| z.conj())
}

fn max_abs_diff(a: &Block, b: &Block) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn is_zero_block(t: &Block) -> bool {
    t.iter().all(|z| *z == C64::new(0.0, 0.0))
}

/// exp(i·b·(x2+y2)/2·(x1−y1)).
pub fn peierls_phase(b: f64, x: Site, y: Site) -> C64 {
    // The integer product keeps the phase of (y, x) the exact conjugate.
    let k = (x.x2 + y.x2) * (x.x1 - y.x1);
    C64::from_polar(1.0, 0.5 * b * k as f64)
}

/// Translation-invariant hopping: T(x, y) = amplitude whenever x − y = displacement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulkHop {
    pub displacement: Site,
    pub amplitude: Block,
}

/// Hopping on one ordered site pair: T(from, to).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairHop {
    pub from: Site,
    pub to: Site,
    pub amplitude: Block,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoppingMap {
    pub range: u32,
    pub internal_dim: usize,
    pub displacements: Vec<BulkHop>,
    pub pairs: Vec<PairHop>,
}

impl HoppingMap {
    pub fn empty(range: u32, internal_dim: usize) -> Self {
        HoppingMap {
            range,
            internal_dim,
            displacements: Vec::new(),
            pairs: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.displacements.is_empty() && self.pairs.is_empty()
    }

    /// T(x, y) without the Peierls phase.
    pub fn amplitude(&self, x: Site, y: Site) -> Block {
        let s = self.internal_dim;
        let mut t = Block::zeros((s, s));
        let delta = x.minus(y);
        for h in &self.displacements {
            if h.displacement == delta {
                t = t + &h.amplitude;
            }
        }
        for h in &self.pairs {
            if h.from == x && h.to == y {
                t = t + &h.amplitude;
            }
        }
        t
    }

    /// Sum of entries keyed by ordered pair, for the pair-indexed part.
    fn pair_table(&self) -> BTreeMap<(Site, Site), Block> {
        let s = self.internal_dim;
        let mut table: BTreeMap<(Site, Site), Block> = BTreeMap::new();
        for h in &self.pairs {
            let slot = table
                .entry((h.from, h.to))
                .or_insert_with(|| Block::zeros((s, s)));
            *slot = &*slot + &h.amplitude;
        }
        table
    }

    fn displacement_table(&self) -> BTreeMap<Site, Block> {
        let s = self.internal_dim;
        let mut table: BTreeMap<Site, Block> = BTreeMap::new();
        for h in &self.displacements {
            let slot = table
                .entry(h.displacement)
                .or_insert_with(|| Block::zeros((s, s)));
            *slot = &*slot + &h.amplitude;
        }
        table
    }
}

/// T_b(x, y) = exp(i·b·(x2+y2)/2·(x1−y1)) · T(x, y).
pub fn peierls_element(t: &HoppingMap, b: f64, x: Site, y: Site) -> Block {
    t.amplitude(x, y) * peierls_phase(b, x, y)
}

/// c · Π n_m over the listed modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityTerm {
    pub modes: Vec<Mode>,
    pub coefficient: f64,
}

impl DensityTerm {
    pub fn support(&self) -> SiteSet {
        self.modes.iter().map(|m| m.site).collect()
    }

    fn diameter(&self) -> u64 {
        let sites: Vec<Site> = self.modes.iter().map(|m| m.site).collect();
        sites
            .iter()
            .flat_map(|a| sites.iter().map(move |b| distance(*a, *b)))
            .max()
            .unwrap_or(0)
    }

    fn translated(&self, by: Site) -> DensityTerm {
        DensityTerm {
            modes: self
                .modes
                .iter()
                .map(|m| Mode::new(m.site.shifted(by), m.orbital))
                .collect(),
            coefficient: self.coefficient,
        }
    }
}

/// For the bulk part each term is a pattern, instantiated at every
/// translate that fits in the region. For the edge part terms are explicit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DensityInteraction {
    pub terms: Vec<DensityTerm>,
}

impl DensityInteraction {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Where edge terms may live.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EdgeStrip {
    /// Rows 0, …, D−1.
    #[default]
    Lower,
    /// Sites within distance D of the complement of the region, on all four sides.
    Perimeter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Bulk,
    Edge,
}

/// One ordered hopping pair of the assembled Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct Bond {
    pub x: Site,
    pub y: Site,
    /// T_b(x, y), Peierls phase included.
    pub amplitude: Block,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub internal_dim: usize,
    pub range: u32,
    pub strip_width: u32,
    #[serde(default)]
    pub strip: EdgeStrip,
    pub field: f64,
    pub bulk_hopping: HoppingMap,
    pub edge_hopping: HoppingMap,
    pub bulk_interaction: DensityInteraction,
    pub edge_interaction: DensityInteraction,
    pub region: SiteSet,
}

fn nearest_neighbour_hops(s: usize, t: C64) -> Vec<BulkHop> {
    let block = Block::eye(s).mapv(|z| z * t);
    let conj = Block::eye(s).mapv(|z| z * t.conj());
    [(1, 0), (0, 1)]
        .into_iter()
        .flat_map(|(a, b)| {
            [
                BulkHop {
                    displacement: Site::new(a, b),
                    amplitude: block.clone(),
                },
                BulkHop {
                    displacement: Site::new(-a, -b),
                    amplitude: conj.clone(),
                },
            ]
        })
        .collect()
}

impl ModelSpec {
    /// A spec with no terms on the box Λ_L.
    pub fn empty(l: i64, internal_dim: usize, range: u32, strip_width: u32, field: f64) -> Self {
        ModelSpec {
            internal_dim,
            range,
            strip_width,
            strip: EdgeStrip::Lower,
            field,
            bulk_hopping: HoppingMap::empty(range, internal_dim),
            edge_hopping: HoppingMap::empty(range, internal_dim),
            bulk_interaction: DensityInteraction::default(),
            edge_interaction: DensityInteraction::default(),
            region: SiteSet::half_plane_box(l),
        }
    }

    /// Spin-½ nearest-neighbour hopping with on-site U·n_{x,1}n_{x,2}.
    pub fn hofstadter_hubbard(l: i64, b: f64, u: f64) -> Self {
        let mut spec = ModelSpec::empty(l, 2, 1, 1, b);
        spec.bulk_hopping.displacements = nearest_neighbour_hops(2, C64::new(1.0, 0.0));
        if u != 0.0 {
            spec.bulk_interaction.terms.push(DensityTerm {
                modes: vec![Mode::new(Site::ORIGIN, 0), Mode::new(Site::ORIGIN, 1)],
                coefficient: u,
            });
        }
        spec
    }

    /// Spinless nearest-neighbour hopping, no interaction.
    pub fn hofstadter(l: i64, b: f64) -> Self {
        let mut spec = ModelSpec::empty(l, 1, 1, 1, b);
        spec.bulk_hopping.displacements = nearest_neighbour_hops(1, C64::new(1.0, 0.0));
        spec
    }

    /// Spinless nearest-neighbour hopping with V·n_x n_y on every bond.
    pub fn nearest_neighbour_density(l: i64, b: f64, v: f64) -> Self {
        let mut spec = ModelSpec::hofstadter(l, b);
        if v != 0.0 {
            for e in [Site::new(1, 0), Site::new(0, 1)] {
                spec.bulk_interaction.terms.push(DensityTerm {
                    modes: vec![Mode::new(Site::ORIGIN, 0), Mode::new(e, 0)],
                    coefficient: v,
                });
            }
        }
        spec
    }

    pub fn with_region(mut self, region: SiteSet) -> Self {
        self.region = region;
        self
    }

    pub fn with_strip_width(mut self, d: u32) -> Self {
        self.strip_width = d;
        self
    }

    pub fn with_field(mut self, b: f64) -> Self {
        self.field = b;
        self
    }

    pub fn num_modes(&self) -> usize {
        self.region.len() * self.internal_dim
    }

    /// R + D: the depth beyond which edge terms are not felt directly.
    pub fn reach(&self) -> i64 {
        self.range as i64 + self.strip_width as i64
    }

    /// Both interaction lists empty apart from single-mode density terms.
    pub fn is_quadratic(&self) -> bool {
        self.bulk_interaction
            .terms
            .iter()
            .chain(&self.edge_interaction.terms)
            .all(|t| distinct_modes(&t.modes).len() <= 1)
    }

    pub fn has_edge_terms(&self) -> bool {
        !self.edge_hopping.is_empty() || !self.edge_interaction.is_empty()
    }

    pub fn in_strip(&self, x: Site) -> bool {
        let d = self.strip_width as i64;
        match self.strip {
            EdgeStrip::Lower => x.x2 >= 0 && x.x2 < d,
            EdgeStrip::Perimeter => {
                self.region.contains(x) && self.region.distance_to_complement(x) as i64 <= d
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        let s = self.internal_dim;
        if s == 0 {
            return bad("internal dimension must be at least 1".into());
        }
        if self.strip_width < self.range {
            return bad(format!(
                "edge strip width D = {} is below the range R = {}",
                self.strip_width, self.range
            ));
        }
        if !self.field.is_finite() {
            return bad("field b is not finite".into());
        }
        for (name, map) in [("bulk", &self.bulk_hopping), ("edge", &self.edge_hopping)] {
            if map.internal_dim != s {
                return bad(format!("{name} hopping has internal dimension {}", map.internal_dim));
            }
            if map.range > self.range {
                return bad(format!("{name} hopping range {} exceeds R = {}", map.range, self.range));
            }
            let blocks = map
                .displacements
                .iter()
                .map(|h| &h.amplitude)
                .chain(map.pairs.iter().map(|h| &h.amplitude));
            for t in blocks {
                if t.dim() != (s, s) {
                    return bad(format!("{name} hopping block has shape {:?}", t.dim()));
                }
                if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return bad(format!("{name} hopping block has a non-finite entry"));
                }
            }
        }
        if !self.bulk_hopping.pairs.is_empty() {
            return bad("bulk hopping must be displacement-indexed".into());
        }
        if !self.edge_hopping.displacements.is_empty() {
            return bad("edge hopping must be pair-indexed".into());
        }
        let disp = self.bulk_hopping.displacement_table();
        for (delta, t) in &disp {
            if distance(*delta, Site::ORIGIN) > self.range as u64 {
                return bad(format!("bulk hop at displacement {delta} exceeds R"));
            }
            let back = disp
                .get(&Site::new(-delta.x1, -delta.x2))
                .cloned()
                .unwrap_or_else(|| Block::zeros((s, s)));
            if max_abs_diff(t, &adjoint(&back)) > 1e-12 {
                return bad(format!("bulk hopping is not Hermitian at displacement {delta}"));
            }
        }
        let pairs = self.edge_hopping.pair_table();
        for ((x, y), t) in &pairs {
            if distance(*x, *y) > self.range as u64 {
                return bad(format!("edge hop {x} -> {y} exceeds R"));
            }
            for z in [x, y] {
                if !self.region.contains(*z) {
                    return bad(format!("edge hop touches {z} outside the region"));
                }
                if !self.in_strip(*z) {
                    return bad(format!("edge hop touches {z} outside the edge strip"));
                }
            }
            let back = pairs
                .get(&(*y, *x))
                .cloned()
                .unwrap_or_else(|| Block::zeros((s, s)));
            if max_abs_diff(t, &adjoint(&back)) > 1e-12 {
                return bad(format!("edge hopping is not Hermitian on {x} -> {y}"));
            }
        }
        for (name, list) in [
            ("bulk", &self.bulk_interaction),
            ("edge", &self.edge_interaction),
        ] {
            for term in &list.terms {
                if term.modes.is_empty() {
                    return bad(format!("{name} interaction term with no modes"));
                }
                if !term.coefficient.is_finite() {
                    return bad(format!("{name} interaction coefficient is not finite"));
                }
                if term.modes.iter().any(|m| m.orbital >= s) {
                    return bad(format!("{name} interaction uses an orbital index >= {s}"));
                }
                if term.diameter() > self.range as u64 {
                    return bad(format!("{name} interaction support has diameter above R"));
                }
            }
        }
        for term in &self.edge_interaction.terms {
            for m in &term.modes {
                if !self.region.contains(m.site) || !self.in_strip(m.site) {
                    return bad(format!("edge interaction at {} outside the edge strip", m.site));
                }
            }
        }
        Ok(())
    }

    /// All ordered pairs (x, y) in the region with T_b(x, y) ≠ 0, sorted.
    pub fn bonds(&self) -> Vec<Bond> {
        let s = self.internal_dim;
        let disp = self.bulk_hopping.displacement_table();
        let mut table: BTreeMap<(Site, Site), Block> = BTreeMap::new();
        for x in self.region.iter() {
            for (delta, t) in &disp {
                let y = x.minus(*delta);
                if self.region.contains(y) {
                    table.insert((x, y), t.clone());
                }
            }
        }
        for ((x, y), t) in self.edge_hopping.pair_table() {
            if self.region.contains(x) && self.region.contains(y) {
                let slot = table.entry((x, y)).or_insert_with(|| Block::zeros((s, s)));
                *slot = &*slot + &t;
            }
        }
        table
            .into_iter()
            .filter(|(_, t)| !is_zero_block(t))
            .map(|((x, y), t)| Bond {
                x,
                y,
                amplitude: t * peierls_phase(self.field, x, y),
            })
            .collect()
    }

    /// Bulk patterns at every translate inside the region, then edge terms.
    pub fn density_terms(&self) -> Vec<DensityTerm> {
        let mut out = Vec::new();
        for pattern in &self.bulk_interaction.terms {
            let first = pattern.modes[0].site;
            for x in self.region.iter() {
                let term = pattern.translated(x.minus(first));
                if term.modes.iter().all(|m| self.region.contains(m.site)) {
                    out.push(term);
                }
            }
        }
        out.extend(
            self.edge_interaction
                .terms
                .iter()
                .filter(|t| t.modes.iter().all(|m| self.region.contains(m.site)))
                .cloned(),
        );
        out
    }

    /// H|_sub: hoppings with both ends and interactions with support inside `sub`.
    pub fn restrict(&self, sub: &SiteSet) -> Result<ModelSpec> {
        if !sub.is_subset(&self.region) {
            return Err(Error::NotSubset("restriction"));
        }
        let mut out = self.clone();
        out.region = sub.clone();
        out.edge_hopping
            .pairs
            .retain(|h| sub.contains(h.from) && sub.contains(h.to));
        out.edge_interaction
            .terms
            .retain(|t| t.modes.iter().all(|m| sub.contains(m.site)));
        Ok(out)
    }

    /// Append φ(x)·N_x for every site with φ(x) ≠ 0.
    pub fn add_edge_potential(&self, phi: &BTreeMap<Site, f64>) -> Result<ModelSpec> {
        let mut out = self.clone();
        for (&x, &v) in phi {
            if v == 0.0 {
                continue;
            }
            if !self.region.contains(x) || !self.in_strip(x) {
                return Err(Error::InvalidModel(format!(
                    "edge potential at {x} lies outside the edge strip"
                )));
            }
            for j in 0..self.internal_dim {
                out.edge_interaction.terms.push(DensityTerm {
                    modes: vec![Mode::new(x, j)],
                    coefficient: v,
                });
            }
        }
        out.validate()?;
        Ok(out)
    }

    /// Cancel every hopping attached to `site` by edge counter-terms.
    pub fn remove_site_hoppings(&self, site: Site) -> Result<ModelSpec> {
        let mut out = self.clone();
        for bond in self.bonds() {
            if bond.x == bond.y || (bond.x != site && bond.y != site) {
                continue;
            }
            let bare = bond.amplitude * peierls_phase(self.field, bond.x, bond.y).conj();
            out.edge_hopping.pairs.push(PairHop {
                from: bond.x,
                to: bond.y,
                amplitude: -bare,
            });
        }
        out.validate()?;
        Ok(out)
    }

    /// The bulk Hamiltonian on the centered box B_L: bulk terms only.
    pub fn bulk_counterpart(&self) -> Result<ModelSpec> {
        let l = self.region.box_half_width().ok_or_else(|| {
            Error::InvalidModel("bulk counterpart needs a box region".into())
        })?;
        let mut out = self.clone();
        out.edge_hopping.pairs.clear();
        out.edge_interaction.terms.clear();
        out.region = SiteSet::centered_box(l);
        Ok(out)
    }

    /// The spec with only its bulk part kept (same region).
    pub fn without_edge_terms(&self) -> ModelSpec {
        let mut out = self.clone();
        out.edge_hopping.pairs.clear();
        out.edge_interaction.terms.clear();
        out
    }

    /// True when the two specs share everything except edge terms.
    pub fn same_bulk(&self, other: &ModelSpec) -> bool {
        self.internal_dim == other.internal_dim
            && self.field == other.field
            && self.region == other.region
            && self.bulk_hopping == other.bulk_hopping
            && self.bulk_interaction == other.bulk_interaction
    }

    pub fn magnetic_translation(&self, y: Site) -> TranslationMap {
        TranslationMap {
            displacement: y,
            field: self.field,
            internal_dim: self.internal_dim,
        }
    }

    /// sup_x (2 Σ_y ‖T_b(x,y)‖ + Σ_{X ∋ x} ‖Φ(X)‖) + μ for one part.
    ///
    /// The bulk sum runs over all of Z², the edge sum over the stored pairs
    /// and terms.
    pub fn local_norm_constant(&self, mu: f64, part: Part) -> Result<f64> {
        let mut per_site: BTreeMap<Site, f64> = BTreeMap::new();
        match part {
            Part::Bulk => {
                let mut hop = 0.0;
                for t in self.bulk_hopping.displacement_table().values() {
                    hop += 2.0 * linalg::operator_norm(t)?;
                }
                let mut inter = 0.0;
                for t in &self.bulk_interaction.terms {
                    // One translate of the pattern per distinct site it covers.
                    let sites: BTreeSet<Site> = t.modes.iter().map(|m| m.site).collect();
                    inter += sites.len() as f64 * t.coefficient.abs();
                }
                return Ok(hop + inter + mu);
            }
            Part::Edge => {
                for ((x, _), t) in self.edge_hopping.pair_table() {
                    *per_site.entry(x).or_default() += 2.0 * linalg::operator_norm(&t)?;
                }
                for t in &self.edge_interaction.terms {
                    let sites: BTreeSet<Site> = t.modes.iter().map(|m| m.site).collect();
                    for x in sites {
                        *per_site.entry(x).or_default() += t.coefficient.abs();
                    }
                }
            }
        }
        Ok(per_site.values().copied().fold(0.0, f64::max) + mu)
    }
}

fn distinct_modes(modes: &[Mode]) -> BTreeSet<Mode> {
    modes.iter().copied().collect()
}

/// The magnetic translation U_y: a*_{(x,j)} ↦ e^{i·b·y2·(x1+y1)} a*_{(x+y,j)}.
///
/// The phase is e^{i·b·y2·x'1} in terms of the image site x' = x + y, which
/// makes U_y H|_X U_y* = H|_{X+y} for bulk terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TranslationMap {
    pub displacement: Site,
    pub field: f64,
    pub internal_dim: usize,
}

impl TranslationMap {
    pub fn image(&self, m: Mode) -> Mode {
        Mode::new(m.site.shifted(self.displacement), m.orbital)
    }

    /// Phase picked up by the mode `m` (a source mode).
    pub fn phase(&self, m: Mode) -> C64 {
        let target = m.site.shifted(self.displacement);
        let k = self.displacement.x2 * target.x1;
        C64::from_polar(1.0, self.field * k as f64)
    }

    pub fn is_identity(&self) -> bool {
        self.displacement == Site::ORIGIN
    }
}

/// Flux 2π·α per plaquette.
pub fn flux(alpha: f64) -> f64 {
    2.0 * PI * alpha
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn phase_examples() {
        assert_eq!(peierls_phase(0.7, Site::new(1, 0), Site::new(0, 0)), C64::new(1.0, 0.0));
        let p = peierls_phase(PI, Site::new(1, 2), Site::new(0, 2));
        assert!((p - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn plaquette_wilson_loop_is_flux() {
        let b = 0.37;
        let path = [
            Site::new(0, 0),
            Site::new(1, 0),
            Site::new(1, 1),
            Site::new(0, 1),
            Site::new(0, 0),
        ];
        let mut w = C64::new(1.0, 0.0);
        for pair in path.windows(2) {
            w *= peierls_phase(b, pair[0], pair[1]);
        }
        assert!((w - C64::from_polar(1.0, b)).norm() < 1e-15);
    }

    #[test]
    fn hofstadter_hubbard_counts() {
        let spec = ModelSpec::hofstadter_hubbard(1, 1.0, 1.0);
        spec.validate().unwrap();
        assert_eq!(spec.region.len(), 9);
        assert_eq!(spec.num_modes(), 18);
        let undirected = spec.bonds().iter().filter(|b| b.x < b.y).count();
        assert_eq!(undirected, 12);
        assert_eq!(spec.density_terms().len(), 9);
        assert!(ModelSpec::hofstadter_hubbard(1, 1.0, 0.0).bulk_interaction.is_empty());
        let real = ModelSpec::hofstadter_hubbard(2, 0.0, 1.0);
        assert!(real.bonds().iter().all(|b| b.amplitude.iter().all(|z| z.im == 0.0)));
    }

    #[test]
    fn restrict_examples() {
        let spec = ModelSpec::hofstadter_hubbard(2, 0.4, 1.0);
        assert_eq!(spec.restrict(&spec.region).unwrap(), spec);
        let single = spec.restrict(&SiteSet::from_iter([Site::new(0, 2)])).unwrap();
        assert!(single.bonds().is_empty());
        assert_eq!(single.density_terms().len(), 1);
        assert!(spec.restrict(&SiteSet::from_iter([Site::new(9, 9)])).is_err());

        // Restricting to a ball drops exactly the bonds leaving the ball.
        let ball = SiteSet::ball(Site::new(0, 2), 1).intersection(&spec.region);
        let inner = spec.restrict(&ball).unwrap();
        let kept: BTreeSet<(Site, Site)> = inner.bonds().iter().map(|b| (b.x, b.y)).collect();
        let expect: BTreeSet<(Site, Site)> = spec
            .bonds()
            .iter()
            .filter(|b| ball.contains(b.x) && ball.contains(b.y))
            .map(|b| (b.x, b.y))
            .collect();
        assert_eq!(kept, expect);
        assert_eq!(kept.len(), 8);
    }

    #[test]
    fn edge_potential_examples() {
        let spec = ModelSpec::hofstadter(3, 0.5);
        assert_eq!(spec.add_edge_potential(&BTreeMap::new()).unwrap(), spec);
        let zero: BTreeMap<Site, f64> = spec.region.iter().map(|x| (x, 0.0)).collect();
        assert_eq!(spec.add_edge_potential(&zero).unwrap(), spec);
        let row0: BTreeMap<Site, f64> = (-3..=3).map(|m| (Site::new(m, 0), 1.0)).collect();
        let out = spec.add_edge_potential(&row0).unwrap();
        assert_eq!(out.edge_interaction.terms.len(), 7);
        assert_eq!(out.bulk_hopping, spec.bulk_hopping);
        let row1: BTreeMap<Site, f64> = [(Site::new(0, 1), 1.0)].into();
        assert!(spec.add_edge_potential(&row1).is_err());
    }

    #[test]
    fn removing_site_hoppings_still_validates() {
        let spec = ModelSpec::hofstadter(3, 0.5).with_strip_width(2);
        let out = spec.remove_site_hoppings(Site::new(1, 0)).unwrap();
        out.validate().unwrap();
        let touching = out
            .bonds()
            .into_iter()
            .filter(|b| b.x == Site::new(1, 0) || b.y == Site::new(1, 0))
            .count();
        assert_eq!(touching, 0);
        assert_eq!(out.bonds().len(), spec.bonds().len() - 6);
    }

    #[test]
    fn norm_constants() {
        let free = ModelSpec::hofstadter(3, 0.3);
        assert_eq!(free.local_norm_constant(0.0, Part::Bulk).unwrap(), 8.0);
        assert_eq!(free.local_norm_constant(0.25, Part::Edge).unwrap(), 0.25);
        let hh = ModelSpec::hofstadter_hubbard(2, 0.3, 1.0);
        let c = hh.local_norm_constant(0.5, Part::Bulk).unwrap();
        assert!((c - 9.5).abs() < 1e-12);
        let phi: BTreeMap<Site, f64> = (-3..=3).map(|m| (Site::new(m, 0), 0.7)).collect();
        let edged = free.add_edge_potential(&phi).unwrap();
        assert!((edged.local_norm_constant(0.0, Part::Edge).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn translation_identity_cases() {
        let spec = ModelSpec::hofstadter(2, 0.9);
        let id = spec.magnetic_translation(Site::ORIGIN);
        let shift = spec.magnetic_translation(Site::new(3, 0));
        for x in spec.region.iter() {
            let m = Mode::new(x, 0);
            assert_eq!(id.phase(m), C64::new(1.0, 0.0));
            assert_eq!(shift.phase(m), C64::new(1.0, 0.0));
            assert_eq!(shift.image(m).site, x.shifted(Site::new(3, 0)));
        }
    }

    fn small_site() -> impl Strategy<Value = Site> {
        (-5i64..6, 0i64..9).prop_map(|(a, b)| Site::new(a, b))
    }

    proptest! {
        #[test]
        fn peierls_hermitian_pairing(x in small_site(), y in small_site(), b in -7.0f64..7.0) {
            let spec = ModelSpec::hofstadter_hubbard(4, b, 0.0);
            let t = &spec.bulk_hopping;
            let a = peierls_element(t, b, x, y);
            let c = peierls_element(t, b, y, x);
            prop_assert_eq!(a, adjoint(&c));
        }

        #[test]
        fn bulk_amplitudes_are_displacement_invariant(
            x in small_site(), y in small_site(), z in small_site()
        ) {
            let spec = ModelSpec::nearest_neighbour_density(4, 1.0, 1.0);
            let t = &spec.bulk_hopping;
            prop_assert_eq!(t.amplitude(x, y), t.amplitude(x.minus(z), y.minus(z)));
        }

        #[test]
        fn magnetic_translation_covers_bulk_bonds(
            dx in -3i64..4, dy in -3i64..4, b in -3.0f64..3.0
        ) {
            // U_y maps the bonds of H|_X onto those of H|_{X+y}.
            let spec = ModelSpec::hofstadter(6, b);
            let x_set = SiteSet::rectangle(-1, 1, 4, 6);
            let y = Site::new(dx, dy);
            let u = spec.magnetic_translation(y);
            let src = spec.restrict(&x_set).unwrap().bonds();
            let dst_spec = spec.restrict(&x_set.translated(y)).unwrap();
            let dst: BTreeMap<(Site, Site), Block> = dst_spec
                .bonds().into_iter().map(|b| ((b.x, b.y), b.amplitude)).collect();
            prop_assert_eq!(src.len(), dst.len());
            for bond in src {
                let px = u.phase(Mode::new(bond.x, 0));
                let py = u.phase(Mode::new(bond.y, 0));
                let moved = &bond.amplitude * (px * py.conj());
                let key = (bond.x.shifted(y), bond.y.shifted(y));
                let target = &dst[&key];
                prop_assert!(max_abs_diff(&moved, target) < 1e-12);
            }
        }

        #[test]
        fn edge_potential_commutes_with_restrict(bits in proptest::collection::vec(any::<bool>(), 7)) {
            let spec = ModelSpec::hofstadter(3, 0.5);
            let phi: BTreeMap<Site, f64> = (-3..=3).map(|m| (Site::new(m, 0), 0.3 * (m as f64))).collect();
            let sub: SiteSet = spec.region.iter()
                .filter(|x| x.x2 > 0 || bits[(x.x1 + 3) as usize])
                .collect();
            let phi_sub: BTreeMap<Site, f64> = phi.iter()
                .filter(|(x, _)| sub.contains(**x)).map(|(x, v)| (*x, *v)).collect();
            let a = spec.add_edge_potential(&phi).unwrap().restrict(&sub).unwrap();
            let b = spec.restrict(&sub).unwrap().add_edge_potential(&phi_sub).unwrap();
            prop_assert_eq!(a.density_terms(), b.density_terms());
        }
    }
}
