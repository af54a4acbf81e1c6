//! Pressure, magnetization, μ-derivatives and the comparisons built on them.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::currents::{
    bloch_profile, current_coefficients, edge_current, magnetic_derivative, CurrentField,
    DecayProfile, EdgeCurrent,
};
use crate::engine::{solve, EngineKind, SolveOptions, Solved};
use crate::error::{Error, Result};
use crate::fock::{ModeIndex, QuadraticForm, ThermoParams};
use crate::geometry::{
    distance_to_outside, five_region_masks, set_distance, Direction, DualEdge, RegionLabel,
    SetDistance, Site, SiteSet,
};
use crate::model::{Mode, ModelSpec, Part};

pub const DEFAULT_B_STEP: f64 = 1e-5;
pub const DEFAULT_MU_STEP: f64 = 1e-4;

fn box_size(spec: &ModelSpec) -> Result<i64> {
    spec.region
        .box_half_width()
        .ok_or_else(|| Error::InvalidModel("this observable needs a box region".into()))
}

fn volume(spec: &ModelSpec) -> f64 {
    spec.region.len().max(1) as f64
}

fn thermo_only(opts: SolveOptions) -> SolveOptions {
    SolveOptions {
        energies_only: true,
        ..opts
    }
}

/// p_L = −|Λ|⁻¹ β⁻¹ log Z.
pub fn pressure(spec: &ModelSpec, params: ThermoParams, engine: EngineKind) -> Result<f64> {
    if spec.region.is_empty() {
        return Ok(0.0);
    }
    Ok(solve(spec, engine, thermo_only(SolveOptions::default()))?.pressure(params))
}

/// Central difference of p in b.
pub fn magnetization_fd(
    spec: &ModelSpec,
    params: ThermoParams,
    engine: EngineKind,
    step: f64,
    opts: SolveOptions,
) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::InvalidModel(format!("finite-difference step {step} must be positive")));
    }
    let opts = thermo_only(opts);
    let plus = solve(&spec.clone().with_field(spec.field + step), engine, opts)?;
    let minus = solve(&spec.clone().with_field(spec.field - step), engine, opts)?;
    Ok((plus.pressure(params) - minus.pressure(params)) / (2.0 * step))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationReport {
    pub l: i64,
    pub fd_step: f64,
    pub m_fd: f64,
    /// tr(ρ H′)/|Λ_L|.
    pub m_duhamel: f64,
    /// |Λ_L|⁻¹ Σ_{m,n} n·j_1^{(m,n)}.
    pub m_current_sum: f64,
    pub edge_currents: Vec<EdgeCurrent>,
    /// I^L on column 0.
    pub edge_current_full: f64,
    /// m_duhamel − I^L.
    pub gap: f64,
    /// (m_duhamel − I^L)(2L+1).
    pub scaled_gap: f64,
    /// (m_duhamel + I^L)(2L+1): the gap with the edge current taken in the
    /// opposite orientation.
    pub scaled_opposite_gap: f64,
}

/// Magnetization by finite differences, by Duhamel and as a current sum.
pub fn magnetization(
    solved: &Solved,
    params: ThermoParams,
    fd_step: f64,
    depths: &[i64],
) -> Result<MagnetizationReport> {
    let spec = &solved.spec;
    let l = box_size(spec)?;
    let v = volume(spec);
    let opts = SolveOptions {
        ed: solved.ed,
        energies_only: true,
    };
    let m_fd = magnetization_fd(spec, params, solved.engine, fd_step, opts)?;
    let h_prime = magnetic_derivative(spec, &solved.modes)?;
    let m_duhamel = solved.quadratic(params, &h_prime)?.0 / v;
    let field = solved.current_field(params)?;
    let m_current_sum = row_weighted_sum(&field) / v;
    let edge_currents = depths
        .iter()
        .map(|&d| edge_current(&field, l, d, 0))
        .collect::<Result<Vec<_>>>()?;
    let full = edge_current(&field, l, l, 0)?.value;
    let gap = m_duhamel - full;
    Ok(MagnetizationReport {
        l,
        fd_step,
        m_fd,
        m_duhamel,
        m_current_sum,
        edge_currents,
        edge_current_full: full,
        gap,
        scaled_gap: gap * (2 * l + 1) as f64,
        scaled_opposite_gap: (m_duhamel + full) * (2 * l + 1) as f64,
    })
}

fn row_weighted_sum(field: &CurrentField) -> f64 {
    field
        .values
        .iter()
        .filter(|(e, _)| e.k == Direction::X1)
        .map(|(e, v)| e.base.x2 as f64 * v)
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeDerivative {
    pub d: i64,
    /// Σ_{n<d} β·Cov(N, J_1^{(0,n)}).
    pub covariance: f64,
    pub fd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuDerivativeReport {
    pub l: i64,
    pub fd_step: f64,
    /// β·Cov(N, H′)/|Λ_L|.
    pub dm_covariance: f64,
    pub dm_fd: f64,
    pub edge: Vec<EdgeDerivative>,
    /// ∂_μ m − ∂_μ I^L, both from covariances.
    pub gap: f64,
    /// ∂_μ m + ∂_μ I^L.
    pub opposite_gap: f64,
    /// ⟨N⟩/|Λ_L| and −∂_μ p by finite differences.
    pub density: f64,
    pub density_fd: f64,
}

/// μ-derivatives of m and of I^d, by covariance and by central differences.
pub fn mu_derivative_report(
    solved: &Solved,
    params: ThermoParams,
    fd_step: f64,
    depths: &[i64],
) -> Result<MuDerivativeReport> {
    if !(fd_step > 0.0) {
        return Err(Error::InvalidModel(format!("finite-difference step {fd_step} must be positive")));
    }
    let spec = &solved.spec;
    let l = box_size(spec)?;
    let v = volume(spec);
    let up = params.with_mu(params.mu + fd_step);
    let down = params.with_mu(params.mu - fd_step);
    let central = |f: &dyn Fn(ThermoParams) -> Result<f64>| -> Result<f64> {
        Ok((f(up)? - f(down)?) / (2.0 * fd_step))
    };

    let h_prime = magnetic_derivative(spec, &solved.modes)?;
    let dm_covariance = solved.quadratic(params, &h_prime)?.1 / v;
    let dm_fd = central(&|p| Ok(solved.quadratic(p, &h_prime)?.0 / v))?;

    let (_, dfield) = solved.current_fields(params)?;
    let f_up = solved.current_field(up)?;
    let f_down = solved.current_field(down)?;
    // The full depth goes last.
    let mut edge = Vec::new();
    for d in depths.iter().copied().filter(|&d| d != l).chain([l]) {
        let cov = edge_current(&dfield, l, d, 0)?.value;
        let fd = (edge_current(&f_up, l, d, 0)?.value - edge_current(&f_down, l, d, 0)?.value)
            / (2.0 * fd_step);
        edge.push(EdgeDerivative { d, covariance: cov, fd });
    }
    let di = edge[edge.len() - 1].clone();

    let density_fd = -central(&|p| Ok(solved.pressure(p)))?;
    Ok(MuDerivativeReport {
        l,
        fd_step,
        dm_covariance,
        dm_fd,
        edge,
        gap: dm_covariance - di.covariance,
        opposite_gap: dm_covariance + di.covariance,
        density: solved.mean_number(params) / v,
        density_fd,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiveRegionReport {
    pub l: i64,
    pub d: i64,
    pub bulk: f64,
    pub left: f64,
    pub right: f64,
    pub bottom: f64,
    pub top: f64,
    pub total: f64,
    /// |Λ_L|⁻¹ Σ_{bulk edges} n·shellmax(r): a bound on |A^bulk| read off
    /// the measured profile.
    pub bulk_bound: f64,
}

/// The n-weighted current sum split into bulk, left, right, bottom and top.
pub fn five_region_report(
    field: &CurrentField,
    region: &SiteSet,
    l: i64,
    d: i64,
    reach: i64,
) -> Result<FiveRegionReport> {
    let masks = five_region_masks(l, d, reach)?;
    let v = ((2 * l + 1) * (2 * l + 1)) as f64;
    let mut sums = [0.0; 5];
    for mask in &masks {
        let mut acc = 0.0;
        for e in &mask.edges {
            acc += e.base.x2 as f64 * field.get(*e)?;
        }
        sums[mask.label as usize] = acc / v;
    }
    let profile = bloch_profile(field, region);
    let bulk_bound = masks[RegionLabel::Bulk as usize]
        .edges
        .iter()
        .map(|e| e.base.x2 as f64 * profile.at(region.distance_to_complement(e.base)))
        .sum::<f64>()
        / v;
    let at = |r: RegionLabel| sums[r as usize];
    Ok(FiveRegionReport {
        l,
        d,
        bulk: at(RegionLabel::Bulk),
        left: at(RegionLabel::Left),
        right: at(RegionLabel::Right),
        bottom: at(RegionLabel::Bottom),
        top: at(RegionLabel::Top),
        total: sums.iter().sum(),
        bulk_bound,
    })
}

/// Local observables used for indistinguishability gaps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    Identity,
    /// N_x = Σ_j n_{x,j}.
    Density { site: Site },
    /// J_k^z of the full model.
    Current { edge: DualEdge },
}

impl Observable {
    pub fn label(&self) -> String {
        match self {
            Observable::Identity => "identity".into(),
            Observable::Density { site } => format!("density{site}"),
            Observable::Current { edge } => {
                format!("current_{}{}", edge.k.index(), edge.base)
            }
        }
    }

    /// Sites the operator acts on, or None for the identity.
    pub fn support(&self, spec: &ModelSpec) -> Option<SiteSet> {
        match self {
            Observable::Identity => None,
            Observable::Density { site } => Some(std::iter::once(*site).collect()),
            Observable::Current { edge } => Some(
                current_coefficients(spec, *edge)
                    .terms
                    .iter()
                    .flat_map(|t| [t.x, t.y])
                    .collect(),
            ),
        }
    }

    /// A bound on ‖A‖.
    pub fn norm_bound(&self, spec: &ModelSpec) -> Result<f64> {
        match self {
            Observable::Identity => Ok(1.0),
            Observable::Density { .. } => Ok(spec.internal_dim as f64),
            Observable::Current { edge } => current_coefficients(spec, *edge).norm_bound(),
        }
    }

    /// The operator as a quadratic form on `modes`; coefficients come from
    /// `spec`, which must be the full model.
    fn form(&self, spec: &ModelSpec, modes: &ModeIndex) -> Result<Option<QuadraticForm>> {
        let missing = |m: Mode| Error::InvalidModel(format!("observable mode {m:?} is outside the region"));
        match self {
            Observable::Identity => Ok(None),
            Observable::Density { site } => {
                let mut q = QuadraticForm::default();
                for j in 0..spec.internal_dim {
                    let m = Mode::new(*site, j);
                    let i = modes.position(m).ok_or_else(|| missing(m))?;
                    q.push(i, i, C64::new(1.0, 0.0));
                }
                Ok(Some(q))
            }
            Observable::Current { edge } => {
                let c = current_coefficients(spec, *edge);
                Ok(Some(c.form(modes)?))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndistinguishabilityGap {
    pub x: SiteSet,
    pub sub: SiteSet,
    pub observable: String,
    pub full: f64,
    pub restricted: f64,
    pub gap: f64,
    /// dist(X, Z² ∖ Λ′).
    pub distance_outside: u64,
    /// dist(X, Λ_L ∖ Λ′).
    pub distance_in_region: SetDistance,
    pub norm_bound: f64,
}

fn expectation_of(solved: &Solved, params: ThermoParams, a: &Observable) -> Result<f64> {
    match a.form(&solved.spec, &solved.modes)? {
        None => Ok(1.0),
        Some(q) => Ok(solved.quadratic(params, &q)?.0),
    }
}

/// |tr(ρ_L A) − tr(ρ_{Λ′}[H|_{Λ′}] A)| with A supported in X ⊆ Λ′.
pub fn indistinguishability_gap(
    full: &Solved,
    restricted: &Solved,
    params: ThermoParams,
    x: &SiteSet,
    a: &Observable,
) -> Result<IndistinguishabilityGap> {
    let sub = &restricted.spec.region;
    if !x.is_subset(sub) {
        return Err(Error::NotSubset("X ⊆ Λ′"));
    }
    if !sub.is_subset(&full.spec.region) {
        return Err(Error::NotSubset("Λ′ ⊆ Λ_L"));
    }
    if let Some(s) = a.support(&full.spec) {
        if !s.is_subset(x) {
            return Err(Error::NotSubset("observable support ⊆ X"));
        }
    }
    let restricted_spec = full.spec.restrict(sub)?;
    if restricted_spec != restricted.spec {
        return Err(Error::InvalidModel(
            "the restricted system is not H|_Λ′ of the full system".into(),
        ));
    }
    let vf = expectation_of(full, params, a)?;
    // The observable keeps the coefficients of the full model.
    let vr = match a.form(&full.spec, &restricted.modes)? {
        None => 1.0,
        Some(q) => restricted.quadratic(params, &q)?.0,
    };
    Ok(IndistinguishabilityGap {
        x: x.clone(),
        sub: sub.clone(),
        observable: a.label(),
        full: vf,
        restricted: vr,
        gap: (vf - vr).abs(),
        distance_outside: distance_to_outside(x, sub)?,
        distance_in_region: set_distance(x, &full.spec.region.difference(sub))?,
        norm_bound: a.norm_bound(&full.spec)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulkPressureComparison {
    pub l: i64,
    pub p_edge: f64,
    pub p_bulk: f64,
    pub gap: f64,
    pub c_edge: f64,
    /// C_H^edge·D/(2L+1).
    pub bound: f64,
}

/// p_L of the edge system on Λ_L against the bulk Hamiltonian on B_L.
pub fn bulk_pressure_comparison(
    spec: &ModelSpec,
    params: ThermoParams,
    engine: EngineKind,
    opts: SolveOptions,
) -> Result<BulkPressureComparison> {
    let l = box_size(spec)?;
    let opts = thermo_only(opts);
    let p_edge = solve(spec, engine, opts)?.pressure(params);
    let p_bulk = solve(&spec.bulk_counterpart()?, engine, opts)?.pressure(params);
    let c_edge = spec.local_norm_constant(params.mu, Part::Edge)?;
    Ok(BulkPressureComparison {
        l,
        p_edge,
        p_bulk,
        gap: (p_edge - p_bulk).abs(),
        c_edge,
        bound: c_edge * spec.strip_width as f64 / (2 * l + 1) as f64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeIndependence {
    pub l: i64,
    pub d: i64,
    pub column: i64,
    pub i_a: f64,
    pub i_b: f64,
    pub gap: f64,
    /// Σ_{n<d} |Δj(column, 2L−n)| + Σ_{n=d}^{2L−d} (|j_A| + |j_B|)(column, n).
    /// With Σ_n j(column, n) = 0 this bounds the gap.
    pub tail_bound: f64,
    /// The same with the middle rows replaced by the shell maxima of the
    /// two measured profiles.
    pub profile_bound: f64,
}

/// |I^d_A − I^d_B| for two models that differ only in edge terms.
pub fn edge_independence_gap(
    field_a: &CurrentField,
    spec_a: &ModelSpec,
    field_b: &CurrentField,
    spec_b: &ModelSpec,
    d: i64,
    column: i64,
) -> Result<EdgeIndependence> {
    if !spec_a.same_bulk(spec_b) {
        return Err(Error::InvalidModel("the two models differ in their bulk parts".into()));
    }
    let l = box_size(spec_a)?;
    let i_a = edge_current(field_a, l, d, column)?.value;
    let i_b = edge_current(field_b, l, d, column)?.value;
    let mut top = 0.0;
    for n in 0..d {
        top += (field_a.vertical(column, 2 * l - n)? - field_b.vertical(column, 2 * l - n)?).abs();
    }
    let pa = bloch_profile(field_a, &spec_a.region);
    let pb = bloch_profile(field_b, &spec_b.region);
    let mut mid = 0.0;
    let mut mid_profile = 0.0;
    for n in d..=(2 * l - d) {
        mid += field_a.vertical(column, n)?.abs() + field_b.vertical(column, n)?.abs();
        let r = spec_a.region.distance_to_complement(Site::new(column, n));
        mid_profile += pa.at(r) + pb.at(r);
    }
    Ok(EdgeIndependence {
        l,
        d,
        column,
        i_a,
        i_b,
        gap: (i_a - i_b).abs(),
        tail_bound: top + mid,
        profile_bound: top + mid_profile,
    })
}

/// The shell-max profile of a solved box model.
pub fn decay_profile(solved: &Solved, params: ThermoParams) -> Result<(CurrentField, DecayProfile)> {
    let field = solved.current_field(params)?;
    let profile = bloch_profile(&field, &solved.spec.region);
    Ok((field, profile))
}

/// Richardson extrapolation of a sequence assumed to behave like a + c/L.
pub fn richardson_1_over_l(seq: &BTreeMap<i64, f64>) -> Option<f64> {
    let mut it = seq.iter().rev();
    let (&l2, &v2) = it.next()?;
    let (&l1, &v1) = it.next()?;
    let (l1, l2) = (l1 as f64, l2 as f64);
    Some((l2 * v2 - l1 * v1) / (l2 - l1))
}
