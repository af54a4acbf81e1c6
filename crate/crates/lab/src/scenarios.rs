//! One function per scenario, evaluated at a single grid point.

use std::collections::BTreeMap;

use bulkedge::currents::{bloch_profile, conservation_sum, current_table, divergence_residual};
use bulkedge::engine::{solve, EngineKind, SolveOptions, Solved};
use bulkedge::fock::{EdConfig, QuadraticForm, ThermoParams};
use bulkedge::geometry::{neighbours, Direction, DualEdge, Site, SiteSet};
use bulkedge::report::fmt_f64;
use bulkedge::thermo::{
    bulk_pressure_comparison, edge_independence_gap, indistinguishability_gap, magnetization,
    mu_derivative_report, Observable,
};
use bulkedge::ModelSpec;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{GridPoint, Scenario, ScenarioConfig};
use crate::error::{LabError, Result};

/// A pass/fail comparison `value ≤ limit`. Contract checks are identities
/// and rigorous bounds and decide the exit status; observations record
/// measured behaviour that is expected but not guaranteed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub point: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
    pub contract: bool,
}

impl Check {
    pub fn le(name: impl Into<String>, point: &str, value: f64, limit: f64) -> Check {
        Check {
            name: name.into(),
            point: point.into(),
            value,
            limit,
            pass: value <= limit,
            contract: true,
        }
    }

    pub fn observation(mut self) -> Check {
        self.contract = false;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotRow {
    pub plot: &'static str,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointOutput {
    /// Sweep-table rows without the leading grid-point columns.
    pub rows: Vec<Vec<String>>,
    pub plots: Vec<PlotRow>,
    pub checks: Vec<Check>,
    /// Scalars appended, in order, to the report series of the same name.
    pub series: Vec<(String, f64)>,
}

/// The statement each scenario exercises, in words.
pub fn identity(s: Scenario) -> &'static str {
    match s {
        Scenario::Continuity => {
            "continuity equation: i[H, N_z] equals the lattice divergence of the bond currents around z"
        }
        Scenario::Conservation => {
            "current conservation: in a Gibbs state the signed current through the dual boundary of any site set vanishes"
        }
        Scenario::Bloch => {
            "Bloch's theorem: equilibrium bond currents decay with the distance to the boundary of the box"
        }
        Scenario::MagnetizationGap => {
            "magnetization equals the edge current: m = ∂_b p = tr(ρH′)/|Λ_L| is a row-weighted current sum and differs from I^L by O(1/L)"
        }
        Scenario::EdgeIndependence => {
            "edge independence: the edge current does not depend on the edge contributions to the Hamiltonian"
        }
        Scenario::MuDerivative => {
            "μ-derivatives: ∂_μ of Gibbs expectations equals β times the covariance with N, and ∂_μ m approaches ∂_μ I^L"
        }
        Scenario::Indistinguishability => {
            "local indistinguishability: local expectations of the full Gibbs state and of a restricted Gibbs state agree up to a gap decaying in the buffer distance"
        }
        Scenario::BulkPressure => {
            "edge and bulk pressure: the pressure of the edge system differs from the bulk pressure by at most C_edge·D/(2L+1)"
        }
        Scenario::EngineEquivalence => {
            "engine equivalence: exact diagonalization and the free-fermion engine agree on quadratic Hamiltonians"
        }
    }
}

/// Column names of the sweep table after the grid-point columns.
pub fn columns(s: Scenario) -> &'static [&'static str] {
    match s {
        Scenario::Continuity => &["z1", "z2", "residual"],
        Scenario::Conservation => &["family", "index", "size", "signed_sum"],
        Scenario::Bloch => &["r", "shellmax"],
        Scenario::MagnetizationGap => &[
            "m_fd",
            "m_duhamel",
            "m_current_sum",
            "edge_current_full",
            "gap",
            "scaled_gap",
        ],
        Scenario::EdgeIndependence => &["d", "i_a", "i_b", "gap", "tail_bound", "profile_bound"],
        Scenario::MuDerivative => &["quantity", "d", "covariance", "fd"],
        Scenario::Indistinguishability => &[
            "radius",
            "observable",
            "full",
            "restricted",
            "gap",
            "distance_outside",
        ],
        Scenario::BulkPressure => &["p_edge", "p_bulk", "gap", "c_edge", "bound"],
        Scenario::EngineEquivalence => &["modes", "max_discrepancy"],
    }
}

pub fn point_label(p: GridPoint) -> String {
    format!("L={} b={} beta={} mu={}", p.l, p.b, p.beta, p.mu)
}

fn f(v: f64) -> String {
    fmt_f64(v)
}

fn params(p: GridPoint) -> Result<ThermoParams> {
    Ok(ThermoParams::new(p.beta, p.mu)?)
}

fn solve_with(spec: &ModelSpec, engine: EngineKind) -> Result<Solved> {
    Ok(solve(spec, engine, SolveOptions::default())?)
}

fn box_l(spec: &ModelSpec) -> Result<i64> {
    spec.region.box_half_width().ok_or_else(|| LabError::Config {
        field: "model.region".into(),
        line: None,
        message: "this scenario needs a box region".into(),
    })
}

pub fn run_point(
    config: &ScenarioConfig,
    engine: EngineKind,
    index: usize,
    p: GridPoint,
) -> Result<PointOutput> {
    let spec = config.spec(p)?;
    let label = point_label(p);
    match config.scenario {
        Scenario::Continuity => continuity(&spec, &label),
        Scenario::Conservation => conservation(config, engine, index, p, &spec, &label),
        Scenario::Bloch => bloch(config, engine, p, &spec, &label),
        Scenario::MagnetizationGap => magnetization_gap(config, engine, p, &spec, &label),
        Scenario::EdgeIndependence => edge_independence(config, engine, p, &spec, &label),
        Scenario::MuDerivative => mu_derivative(config, engine, p, &spec, &label),
        Scenario::Indistinguishability => indistinguishability(config, engine, p, &spec, &label),
        Scenario::BulkPressure => bulk_pressure(engine, p, &spec, &label),
        Scenario::EngineEquivalence => engine_equivalence(p, &spec, &label),
    }
}

fn continuity(spec: &ModelSpec, label: &str) -> Result<PointOutput> {
    let cfg = EdConfig::default();
    let mut out = PointOutput::default();
    let mut worst: f64 = 0.0;
    for z in spec.region.iter() {
        let r = divergence_residual(spec, z, &cfg)?;
        worst = worst.max(r);
        out.rows.push(vec![z.x1.to_string(), z.x2.to_string(), f(r)]);
    }
    out.checks.push(Check::le("max divergence residual", label, worst, 1e-12));
    out.series.push(("max_residual".into(), worst));
    Ok(out)
}

/// A connected set grown from a random site by random nearest-neighbour
/// steps, with at most half the sites of `region`.
pub fn random_connected(rng: &mut ChaCha8Rng, region: &SiteSet) -> SiteSet {
    let sites: Vec<Site> = region.iter().collect();
    let target = rng.gen_range(1..=(region.len() / 2).max(1));
    let start = sites[rng.gen_range(0..sites.len())];
    let mut members = vec![start];
    let mut set: SiteSet = std::iter::once(start).collect();
    // A bounded number of attempts keeps thin regions from stalling.
    let mut attempts = 0;
    while members.len() < target && attempts < 100 * target {
        attempts += 1;
        let from = members[rng.gen_range(0..members.len())];
        let n = neighbours(from)[rng.gen_range(0..4)];
        if region.contains(n) && !set.contains(n) {
            set = set.union(&std::iter::once(n).collect());
            members.push(n);
        }
    }
    set
}

fn conservation(
    config: &ScenarioConfig,
    engine: EngineKind,
    index: usize,
    p: GridPoint,
    spec: &ModelSpec,
    label: &str,
) -> Result<PointOutput> {
    let field = solve_with(spec, engine)?.current_field(params(p)?)?;
    let region = &spec.region;
    let mut sets: Vec<(&'static str, SiteSet)> = Vec::new();
    if let Some(l) = region.box_half_width() {
        for m in -l..l {
            sets.push(("right_of_column", region.iter().filter(|x| x.x1 > m).collect()));
        }
        for m in 1..l {
            sets.push(("lower_rectangle", SiteSet::rectangle(1, m, 0, l)));
        }
        for m in -l..l {
            for n in 1..=2 * l {
                sets.push(("corner", SiteSet::rectangle(m + 1, l, n, 2 * l)));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(index as u64));
    for _ in 0..config.samples {
        sets.push(("random", random_connected(&mut rng, region)));
    }
    let mut out = PointOutput::default();
    let mut worst: f64 = 0.0;
    let mut counter: BTreeMap<&str, usize> = BTreeMap::new();
    for (family, z) in sets {
        if z.is_empty() {
            continue;
        }
        let s = conservation_sum(&field, &z, region)?;
        worst = worst.max(s.abs());
        let i = counter.entry(family).or_default();
        out.rows.push(vec![family.into(), i.to_string(), z.len().to_string(), f(s)]);
        *i += 1;
    }
    out.checks.push(Check::le("max |signed boundary sum|", label, worst, 1e-9));
    out.series.push(("max_signed_sum".into(), worst));
    Ok(out)
}

fn bloch(
    config: &ScenarioConfig,
    engine: EngineKind,
    p: GridPoint,
    spec: &ModelSpec,
    label: &str,
) -> Result<PointOutput> {
    let l = box_l(spec)?;
    let field = solve_with(spec, engine)?.current_field(params(p)?)?;
    let profile = bloch_profile(&field, &spec.region);
    let mut out = PointOutput::default();
    for &(r, v) in &profile.shells {
        out.rows.push(vec![r.to_string(), f(v)]);
        out.plots.push(PlotRow { plot: "decay", x: r as f64, y: v });
        out.series.push(("shellmax".into(), v));
    }
    let lo = (spec.range + spec.strip_width + 1) as u64;
    let hi = config.d.iter().copied().max().unwrap_or(l).min(l) as u64;
    let breaks = (lo..hi).filter(|&r| profile.at(r + 1) >= profile.at(r)).count();
    out.checks.push(
        Check::le(format!("non-decreasing steps of shellmax on [{lo}, {hi}]"), label, breaks as f64, 0.0)
            .observation(),
    );
    Ok(out)
}

fn magnetization_gap(
    config: &ScenarioConfig,
    engine: EngineKind,
    p: GridPoint,
    spec: &ModelSpec,
    label: &str,
) -> Result<PointOutput> {
    let l = box_l(spec)?;
    let solved = solve_with(spec, engine)?;
    let tp = params(p)?;
    let depths: Vec<i64> = config.d.iter().copied().filter(|&d| d <= l).collect();
    let r = magnetization(&solved, tp, config.fd_step, &depths)?;
    let mut out = PointOutput::default();
    out.rows.push(vec![
        f(r.m_fd),
        f(r.m_duhamel),
        f(r.m_current_sum),
        f(r.edge_current_full),
        f(r.gap),
        f(r.scaled_gap),
    ]);
    out.checks.push(Check::le(
        "|m_duhamel − m_current_sum|",
        label,
        (r.m_duhamel - r.m_current_sum).abs(),
        1e-9,
    ));
    out.checks.push(Check::le("|m_fd − m_duhamel|", label, (r.m_fd - r.m_duhamel).abs(), 1e-6));
    let profile = bloch_profile(&solved.current_field(tp)?, &spec.region);
    for e in &r.edge_currents {
        out.checks.push(Check::le(
            format!("|I^{} − I^L| against the shell-max tail", e.d),
            label,
            (e.value - r.edge_current_full).abs(),
            profile.tail_sum(e.d as u64),
        ));
        out.series.push((format!("edge_current_d{}", e.d), e.value));
    }
    out.plots.push(PlotRow { plot: "gap_vs_L", x: l as f64, y: r.scaled_gap });
    out.series.push(("m_duhamel".into(), r.m_duhamel));
    out.series.push(("edge_current_full".into(), r.edge_current_full));
    out.series.push(("scaled_gap".into(), r.scaled_gap));
    Ok(out)
}

fn edge_independence(
    config: &ScenarioConfig,
    engine: EngineKind,
    p: GridPoint,
    spec: &ModelSpec,
    label: &str,
) -> Result<PointOutput> {
    let l = box_l(spec)?;
    let tp = params(p)?;
    let bare = spec.without_edge_terms();
    let field_a = solve_with(spec, engine)?.current_field(tp)?;
    let field_b = solve_with(&bare, engine)?.current_field(tp)?;
    let mut out = PointOutput::default();
    for d in config.d.iter().copied().filter(|&d| d <= l) {
        let r = edge_independence_gap(&field_a, spec, &field_b, &bare, d, 0)?;
        out.rows.push(vec![
            d.to_string(),
            f(r.i_a),
            f(r.i_b),
            f(r.gap),
            f(r.tail_bound),
            f(r.profile_bound),
        ]);
        let limit = if spec.has_edge_terms() { r.tail_bound } else { 1e-12 };
        out.checks.push(Check::le(format!("|I^{d}_A − I^{d}_B|"), label, r.gap, limit));
        out.plots.push(PlotRow { plot: "gap_vs_d", x: d as f64, y: r.gap });
        out.series.push(("gap".into(), r.gap));
    }
    Ok(out)
}

/// |a − b| against 1e−5 relative to a, with an absolute floor at the
/// rounding level of a central difference.
fn relative(name: String, label: &str, cov: f64, fd: f64) -> Check {
    Check::le(name, label, (cov - fd).abs(), 1e-5 * cov.abs() + 1e-10)
}

fn mu_derivative(
    config: &ScenarioConfig,
    engine: EngineKind,
    p: GridPoint,
    spec: &ModelSpec,
    label: &str,
) -> Result<PointOutput> {
    let l = box_l(spec)?;
    let solved = solve_with(spec, engine)?;
    let tp = params(p)?;
    let depths: Vec<i64> = config.d.iter().copied().filter(|&d| d <= l).collect();
    let r = mu_derivative_report(&solved, tp, config.fd_step, &depths)?;
    let mut out = PointOutput::default();
    out.rows.push(vec!["dm".into(), String::new(), f(r.dm_covariance), f(r.dm_fd)]);
    out.checks.push(relative("∂_μ m: covariance vs fd".into(), label, r.dm_covariance, r.dm_fd));
    for e in &r.edge {
        out.rows.push(vec!["dI".into(), e.d.to_string(), f(e.covariance), f(e.fd)]);
        out.checks.push(relative(format!("∂_μ I^{}: covariance vs fd", e.d), label, e.covariance, e.fd));
    }
    out.rows.push(vec!["density".into(), String::new(), f(r.density), f(r.density_fd)]);
    out.checks.push(relative("⟨N⟩/V vs −∂_μ p".into(), label, r.density, r.density_fd));
    // Every current at this point.
    let (_, dfield) = solved.current_fields(tp)?;
    let up = solved.current_field(tp.with_mu(tp.mu + config.fd_step))?;
    let down = solved.current_field(tp.with_mu(tp.mu - config.fd_step))?;
    let mut worst: f64 = 0.0;
    for (e, cov) in &dfield.values {
        let fd = (up.values[e] - down.values[e]) / (2.0 * config.fd_step);
        worst = worst.max((cov - fd).abs() - 1e-5 * cov.abs() - 1e-10);
    }
    out.checks.push(Check::le("worst current excess over the fd tolerance", label, worst, 0.0));
    out.plots.push(PlotRow { plot: "gap_vs_L", x: l as f64, y: r.gap.abs() });
    out.series.push(("gap".into(), r.gap));
    out.series.push(("dm".into(), r.dm_covariance));
    Ok(out)
}

fn indistinguishability(
    config: &ScenarioConfig,
    engine: EngineKind,
    p: GridPoint,
    spec: &ModelSpec,
    label: &str,
) -> Result<PointOutput> {
    let l = box_l(spec)?;
    let tp = params(p)?;
    let whole = solve_with(spec, engine)?;
    let center = Site::new(0, l);
    let mut observables = vec![(SiteSet::from_iter([center]), Observable::Density { site: center })];
    let right = Site::new(1, l);
    if spec.region.contains(right) {
        observables.push((
            SiteSet::from_iter([center, right]),
            Observable::Current { edge: DualEdge::new(Direction::X1, center) },
        ));
    }
    let mut out = PointOutput::default();
    let mut curve = Vec::new();
    for &radius in &config.d {
        let sub = SiteSet::ball(center, radius as u64).intersection(&spec.region);
        let part = solve_with(&spec.restrict(&sub)?, engine)?;
        let mut envelope: f64 = 0.0;
        for (x, a) in &observables {
            let g = indistinguishability_gap(&whole, &part, tp, x, a)?;
            envelope = envelope.max(g.gap);
            out.rows.push(vec![
                radius.to_string(),
                g.observable.clone(),
                f(g.full),
                f(g.restricted),
                f(g.gap),
                g.distance_outside.to_string(),
            ]);
        }
        out.plots.push(PlotRow { plot: "gap_vs_radius", x: radius as f64, y: envelope });
        out.series.push(("envelope".into(), envelope));
        curve.push(envelope);
    }
    let rises = curve.windows(2).filter(|w| w[1] >= w[0]).count();
    out.checks.push(Check::le("non-decreasing steps of the gap envelope", label, rises as f64, 0.0).observation());
    Ok(out)
}

fn bulk_pressure(engine: EngineKind, p: GridPoint, spec: &ModelSpec, label: &str) -> Result<PointOutput> {
    let l = box_l(spec)?;
    let r = bulk_pressure_comparison(spec, params(p)?, engine, SolveOptions::default())?;
    let mut out = PointOutput::default();
    out.rows.push(vec![f(r.p_edge), f(r.p_bulk), f(r.gap), f(r.c_edge), f(r.bound)]);
    let limit = if spec.has_edge_terms() { r.bound } else { 1e-10 };
    out.checks.push(Check::le("|p_edge − p_bulk|", label, r.gap, limit));
    out.plots.push(PlotRow { plot: "gap_vs_L", x: l as f64, y: r.gap });
    out.series.push(("gap".into(), r.gap));
    Ok(out)
}

fn engine_equivalence(p: GridPoint, spec: &ModelSpec, label: &str) -> Result<PointOutput> {
    let tp = params(p)?;
    let ed = solve_with(spec, EngineKind::Ed)?;
    let fr = solve_with(spec, EngineKind::Free)?;
    let mut d = (ed.pressure(tp) - fr.pressure(tp)).abs();
    let mut number = QuadraticForm::default();
    for i in 0..ed.modes.len() {
        number.push(i, i, C64::new(1.0, 0.0));
    }
    let mut forms = vec![number];
    for c in current_table(spec).values() {
        forms.push(c.form(&ed.modes)?);
    }
    for form in &forms {
        let (a, da) = ed.quadratic(tp, form)?;
        let (b, db) = fr.quadratic(tp, form)?;
        d = d.max((a - b).abs()).max((da - db).abs());
    }
    let mut out = PointOutput::default();
    out.rows.push(vec![ed.modes.len().to_string(), f(d)]);
    out.checks.push(Check::le("max observable discrepancy", label, d, 1e-10));
    out.series.push(("max_discrepancy".into(), d));
    Ok(out)
}

/// Observations that compare grid points: the scaled magnetization gap
/// should be flat in L and the μ-derivative gap should shrink with L.
pub fn across_points(config: &ScenarioConfig, points: &[GridPoint], outputs: &[PointOutput]) -> Vec<Check> {
    let mut groups: BTreeMap<String, Vec<(i64, f64)>> = BTreeMap::new();
    let key = match config.scenario {
        Scenario::MagnetizationGap => "scaled_gap",
        Scenario::MuDerivative => "gap",
        _ => return Vec::new(),
    };
    for (p, o) in points.iter().zip(outputs) {
        let v = o.series.iter().find(|(n, _)| n == key).map(|(_, v)| *v);
        if let Some(v) = v {
            groups
                .entry(format!("b={} beta={} mu={}", p.b, p.beta, p.mu))
                .or_default()
                .push((p.l, v));
        }
    }
    let mut out = Vec::new();
    for (label, mut seq) in groups {
        if seq.len() < 2 {
            continue;
        }
        seq.sort_by_key(|x| x.0);
        match config.scenario {
            Scenario::MagnetizationGap => {
                let mean = seq.iter().map(|x| x.1).sum::<f64>() / seq.len() as f64;
                let spread = seq.iter().map(|x| (x.1 - mean).abs()).fold(0.0, f64::max);
                out.push(
                    Check::le("spread of (m − I^L)(2L+1) over L", &label, spread, 0.35 * mean.abs())
                        .observation(),
                );
            }
            _ => {
                let rises = seq.windows(2).filter(|w| w[1].1.abs() >= w[0].1.abs()).count();
                out.push(Check::le("non-decreasing steps of |∂_μ m − ∂_μ I^L| in L", &label, rises as f64, 0.0).observation());
            }
        }
    }
    out
}
