//! Bond currents through dual edges, their conservation laws, the edge
//! current and the decay profile of bulk currents.
//!
//! J_k^z = (i/2)(Σ_{x,y: xy ∩ e_{k,z} ≠ ∅} + Σ_{x,y: xy ∩ ē_{k,z} ≠ ∅})
//!         sgn(x_k − y_k) a*_x T_b(x,y) a_y,
//!
//! so a hop crossing the open edge enters with weight 1 and one that only
//! touches an endpoint with weight ½.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, EdConfig, ModeIndex, QuadraticForm};
use crate::free::Density;
use crate::geometry::{
    crossings, dual_edge_boundary, interior_dual_edges, Contact, Direction, DualEdge, Site, SiteSet,
};
use crate::model::{Block, Mode, ModelSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct CurrentTerm {
    pub x: Site,
    pub y: Site,
    /// 1 for an open crossing, ½ for an endpoint contact.
    pub weight: f64,
    /// sgn(x_k − y_k).
    pub sign: i8,
    /// T_b(x, y).
    pub amplitude: Block,
}

impl CurrentTerm {
    /// i·sign·weight·T_b(x,y).
    pub fn coefficient(&self) -> Block {
        let f = C64::new(0.0, self.sign as f64 * self.weight);
        self.amplitude.mapv(|z| z * f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurrentCoefficients {
    pub edge: DualEdge,
    pub terms: Vec<CurrentTerm>,
}

impl CurrentCoefficients {
    pub fn form(&self, modes: &ModeIndex) -> Result<QuadraticForm> {
        let mut q = QuadraticForm::default();
        for t in &self.terms {
            let coeff = t.coefficient();
            for ((j, jp), c) in coeff.indexed_iter() {
                let i = mode_position(modes, Mode::new(t.x, j))?;
                let k = mode_position(modes, Mode::new(t.y, jp))?;
                q.push(i, k, *c);
            }
        }
        Ok(q)
    }

    /// Σ weight·‖T_b(x,y)‖ over the terms, a bound on |⟨J⟩|.
    pub fn norm_bound(&self) -> Result<f64> {
        let mut acc = 0.0;
        for t in &self.terms {
            acc += t.weight * crate::linalg::operator_norm(&t.amplitude)?;
        }
        Ok(acc)
    }
}

fn mode_position(modes: &ModeIndex, m: Mode) -> Result<usize> {
    modes
        .position(m)
        .ok_or_else(|| Error::InvalidModel(format!("mode {m:?} missing from the mode index")))
}

fn weight_of(c: Contact) -> f64 {
    match c {
        Contact::Open => 1.0,
        Contact::Endpoint => 0.5,
    }
}

fn sign_along(k: Direction, x: Site, y: Site) -> i8 {
    (x.coord(k) - y.coord(k)).signum() as i8
}

/// Coefficients of one dual edge, by direct contact tests.
pub fn current_coefficients(spec: &ModelSpec, edge: DualEdge) -> CurrentCoefficients {
    let mut terms = Vec::new();
    for bond in spec.bonds() {
        let sign = sign_along(edge.k, bond.x, bond.y);
        if sign == 0 {
            continue;
        }
        if let Some(c) = edge.contact(bond.x, bond.y) {
            terms.push(CurrentTerm {
                x: bond.x,
                y: bond.y,
                weight: weight_of(c),
                sign,
                amplitude: bond.amplitude,
            });
        }
    }
    CurrentCoefficients { edge, terms }
}

/// Coefficients of every dual edge met by some hop, plus every interior
/// dual edge of the region (possibly with no terms).
pub fn current_table(spec: &ModelSpec) -> BTreeMap<DualEdge, CurrentCoefficients> {
    let mut table: BTreeMap<DualEdge, CurrentCoefficients> = interior_dual_edges(&spec.region)
        .into_iter()
        .map(|e| (e, CurrentCoefficients { edge: e, terms: Vec::new() }))
        .collect();
    for bond in spec.bonds() {
        for k in [Direction::X1, Direction::X2] {
            let sign = sign_along(k, bond.x, bond.y);
            if sign == 0 {
                continue;
            }
            for (edge, c) in crossings(k, bond.x, bond.y) {
                table
                    .entry(edge)
                    .or_insert_with(|| CurrentCoefficients { edge, terms: Vec::new() })
                    .terms
                    .push(CurrentTerm {
                        x: bond.x,
                        y: bond.y,
                        weight: weight_of(c),
                        sign,
                        amplitude: bond.amplitude.clone(),
                    });
            }
        }
    }
    table
}

/// H' = ∂_b H = Σ (i/2)(x2+y2)(x1−y1) a*_x T_b(x,y) a_y, from the phase.
pub fn magnetic_derivative(spec: &ModelSpec, modes: &ModeIndex) -> Result<QuadraticForm> {
    let mut q = QuadraticForm::default();
    for bond in spec.bonds() {
        let k = ((bond.x.x2 + bond.y.x2) * (bond.x.x1 - bond.y.x1)) as f64;
        let f = C64::new(0.0, 0.5 * k);
        for ((j, jp), c) in bond.amplitude.indexed_iter() {
            q.push(
                mode_position(modes, Mode::new(bond.x, j))?,
                mode_position(modes, Mode::new(bond.y, jp))?,
                *c * f,
            );
        }
    }
    Ok(q)
}

/// Σ_{m,n} n·J_1^{(m,n)} over the given table.
pub fn row_weighted_current(
    table: &BTreeMap<DualEdge, CurrentCoefficients>,
    modes: &ModeIndex,
) -> Result<QuadraticForm> {
    let mut q = QuadraticForm::default();
    for (e, coeffs) in table {
        if e.k == Direction::X1 && e.base.x2 != 0 {
            q.extend(&coeffs.form(modes)?, C64::new(e.base.x2 as f64, 0.0));
        }
    }
    Ok(q)
}

/// J_1^z − J_1^{z−ê₁} + J_2^z − J_2^{z−ê₂}.
pub fn divergence_form(
    table: &BTreeMap<DualEdge, CurrentCoefficients>,
    modes: &ModeIndex,
    z: Site,
) -> Result<QuadraticForm> {
    let mut q = QuadraticForm::default();
    for k in [Direction::X1, Direction::X2] {
        let out = DualEdge::new(k, z);
        let inn = DualEdge::new(k, z.minus(k.unit()));
        if let Some(c) = table.get(&out) {
            q.extend(&c.form(modes)?, C64::new(1.0, 0.0));
        }
        if let Some(c) = table.get(&inn) {
            q.extend(&c.form(modes)?, C64::new(-1.0, 0.0));
        }
    }
    Ok(q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub engine: String,
    pub beta: f64,
    pub mu: f64,
    pub field: f64,
}

/// Expectations j = ⟨J_k^z⟩ over dual edges.
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentField {
    pub values: BTreeMap<DualEdge, f64>,
    pub meta: FieldMeta,
}

impl CurrentField {
    /// Evaluate every edge of `table` against a one-body density Γ.
    pub fn from_density(
        table: &BTreeMap<DualEdge, CurrentCoefficients>,
        modes: &ModeIndex,
        gamma: &Density,
        meta: FieldMeta,
    ) -> Result<CurrentField> {
        let mut values = BTreeMap::new();
        for (e, c) in table {
            let v = crate::free::quadratic_expectation(gamma, &c.form(modes)?)?;
            values.insert(*e, v.re);
        }
        Ok(CurrentField { values, meta })
    }

    pub fn get(&self, e: DualEdge) -> Result<f64> {
        self.values.get(&e).copied().ok_or(Error::MissingEdge(e))
    }

    pub fn vertical(&self, m: i64, n: i64) -> Result<f64> {
        self.get(DualEdge::vertical(m, n))
    }

    /// CSV with columns k, z1, z2, j, shell_distance, rows in edge order.
    pub fn to_csv(&self, region: &SiteSet) -> String {
        let mut out = String::from("k,z1,z2,j,shell_distance\n");
        for (e, v) in &self.values {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.k.index(),
                e.base.x1,
                e.base.x2,
                crate::report::fmt_f64(*v),
                region.distance_to_complement(e.base)
            ));
        }
        out
    }
}

/// Σ over ∂_Λ Z of sign·j.
pub fn conservation_sum(field: &CurrentField, z: &SiteSet, ambient: &SiteSet) -> Result<f64> {
    let mut acc = 0.0;
    for b in dual_edge_boundary(z, ambient)? {
        acc += b.sign as f64 * field.get(b.edge)?;
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCurrent {
    pub d: i64,
    pub column: i64,
    pub value: f64,
    /// I^1, …, I^d.
    pub partial_sums: Vec<f64>,
}

fn check_depth(l: i64, d: i64) -> Result<()> {
    if d < 1 || d > l {
        return Err(Error::DepthOutOfRange { d, lo: 0, hi: l });
    }
    Ok(())
}

/// I^d = Σ_{n=0}^{d−1} j_1^{(column, n)}.
pub fn edge_current(field: &CurrentField, l: i64, d: i64, column: i64) -> Result<EdgeCurrent> {
    check_depth(l, d)?;
    let mut partial_sums = Vec::with_capacity(d as usize);
    let mut acc = 0.0;
    for n in 0..d {
        acc += field.vertical(column, n)?;
        partial_sums.push(acc);
    }
    Ok(EdgeCurrent {
        d,
        column,
        value: acc,
        partial_sums,
    })
}

/// The same sum over the d rows nearest the top boundary of Λ_L.
pub fn upper_edge_current(field: &CurrentField, l: i64, d: i64, column: i64) -> Result<f64> {
    check_depth(l, d)?;
    (0..d).map(|n| field.vertical(column, 2 * l - n)).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    /// (shell distance r, max |j| over dual edges with base at distance r
    /// from the complement of the region).
    pub shells: Vec<(u64, f64)>,
    /// Least-squares slope of ln(shell max) against r, over positive entries.
    pub log_slope: Option<f64>,
}

impl DecayProfile {
    pub fn at(&self, r: u64) -> f64 {
        self.shells
            .iter()
            .find(|(s, _)| *s == r)
            .map_or(0.0, |(_, v)| *v)
    }

    /// Σ_{r ≥ d} shellmax(r).
    pub fn tail_sum(&self, d: u64) -> f64 {
        self.shells
            .iter()
            .filter(|(r, _)| *r >= d)
            .map(|(_, v)| v)
            .sum()
    }

    pub fn max_value(&self) -> f64 {
        self.shells.iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }

    /// First r in [lo, hi) with shellmax(r+1) ≥ shellmax(r), if any.
    pub fn first_non_decrease(&self, lo: u64, hi: u64) -> Option<u64> {
        (lo..hi).find(|&r| self.at(r + 1) >= self.at(r))
    }
}

pub fn bloch_profile(field: &CurrentField, region: &SiteSet) -> DecayProfile {
    let mut shells: BTreeMap<u64, f64> = BTreeMap::new();
    for (e, v) in &field.values {
        let r = region.distance_to_complement(e.base);
        let slot = shells.entry(r).or_insert(0.0);
        *slot = slot.max(v.abs());
    }
    let shells: Vec<(u64, f64)> = shells.into_iter().collect();
    let pts: Vec<(f64, f64)> = shells
        .iter()
        .filter(|(r, v)| *r > 0 && *v > 0.0)
        .map(|(r, v)| (*r as f64, v.ln()))
        .collect();
    let log_slope = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    });
    DecayProfile { shells, log_slope }
}

/// θ(L) = 2C·min_{R+D ≤ d ≤ L} (2d²/L + Σ_{n ≥ d−R−D} ζ(n)), with
/// C·ζ(n) = shellmax(n + R + D) and C the largest shell value.
pub fn theta_bound(profile: &DecayProfile, l: i64, range: i64, strip: i64) -> f64 {
    let c = profile.max_value();
    if c == 0.0 {
        return 0.0;
    }
    let lo = range + strip;
    (lo..=l.max(lo))
        .map(|d| {
            let tail = profile.tail_sum(d as u64) / c;
            2.0 * c * (2.0 * (d * d) as f64 / l as f64 + tail)
        })
        .fold(f64::INFINITY, f64::min)
}

/// max-entry of i[H, N_z] − (J_1^z − J_1^{z−ê₁} + J_2^z − J_2^{z−ê₂}),
/// both sides assembled in Fock space.
pub fn divergence_residual(spec: &ModelSpec, z: Site, config: &EdConfig) -> Result<f64> {
    if !spec.region.contains(z) {
        return Err(Error::NotSubset("site z in the region"));
    }
    let modes = ModeIndex::for_spec(spec);
    let h = fock::assemble(spec, &modes, config)?;
    let nz = fock::number_operator(&std::iter::once(z).collect(), &modes, config)?;
    let lhs = h.commutator(&nz)?.scaled(C64::new(0.0, 1.0));
    let table = current_table(spec);
    let div = fock::assemble_quadratic(&modes, &divergence_form(&table, &modes, z)?, config)?;
    Ok(lhs.sub(&div)?.max_abs())
}
