//! Acceptance criteria 1–11, each at its stated tolerance.
//!
//! One PASS/FAIL line is printed per criterion (run with `--nocapture` to
//! see them). Criteria listed in `KNOWN_FAILURES` are evaluated exactly like
//! the others and reported as FAIL; the test only insists that they still
//! fail, so a fix shows up as a failure of this list.

use std::collections::BTreeMap;
use std::time::Instant;

use bulkedge::currents::{
    bloch_profile, conservation_sum, divergence_residual, edge_current, CurrentField,
};
use bulkedge::engine::{solve, EngineKind, SolveOptions, Solved};
use bulkedge::fock::{self, EdConfig, ModeIndex, ThermoParams};
use bulkedge::geometry::{interior_dual_edges, neighbours, Direction, DualEdge, Site, SiteSet};
use bulkedge::model::{flux, Block, ModelSpec, PairHop};
use bulkedge::thermo::{
    bulk_pressure_comparison, edge_independence_gap, indistinguishability_gap, magnetization,
    magnetization_fd, mu_derivative_report, MagnetizationReport, Observable,
};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that are implemented literally and do not hold; the analysis
/// is in the README.
const KNOWN_FAILURES: &[u8] = &[4, 5, 7, 11];

// Frozen from the first calibrated run. The ratio threshold is the measured
// shellmax(15)/shellmax(5) = 2.2820100977e-8 plus 1%.
const BLOCH_RATIO_THRESHOLD: f64 = 2.3048302e-8;
const EDGE_INDEPENDENCE_GAP: f64 = 3.54657275769554303e-13;
const MU_GAP_SEQUENCE: [f64; 3] = [
    1.62937719111411090e-2,
    1.62216497136993890e-2,
    1.61831811028723752e-2,
];
const INDISTINGUISHABILITY_CURVE: [f64; 7] = [
    4.47493273286747595e-5,
    9.55338251507065195e-7,
    1.18905275625635909e-8,
    6.45514752761755517e-11,
    4.28546087505310425e-14,
    5.06539254985227672e-16,
    5.55111512312578270e-16,
];
const PIN_RTOL: f64 = 1e-6;
// Entries at the round-off floor are not reproducible bit for bit.
const PIN_ATOL: f64 = 1e-14;

struct Outcome {
    id: u8,
    pass: bool,
    detail: String,
}

fn free_params() -> ThermoParams {
    ThermoParams::new(2.0, 0.0).unwrap()
}

fn hofstadter(l: i64) -> ModelSpec {
    ModelSpec::hofstadter(l, flux(0.15))
}

fn full(spec: &ModelSpec, engine: EngineKind) -> Solved {
    solve(spec, engine, SolveOptions::default()).unwrap()
}

fn with_edge_potential(l: i64, phi: f64) -> ModelSpec {
    let spec = hofstadter(l).with_strip_width(2);
    let pot: BTreeMap<Site, f64> = spec
        .region
        .iter()
        .filter(|x| x.x2 <= 1)
        .map(|x| (x, phi))
        .collect();
    spec.add_edge_potential(&pot).unwrap()
}

fn interacting() -> (ModelSpec, ThermoParams) {
    (
        ModelSpec::nearest_neighbour_density(1, 1.0, 1.0),
        ThermoParams::new(1.0, 0.0).unwrap(),
    )
}

fn pinned(name: &str, got: f64, want: f64) -> (bool, String) {
    if want.is_nan() {
        return (false, format!("{name} = {got:.17e} (not pinned yet)"));
    }
    let ok = (got - want).abs() <= PIN_ATOL + PIN_RTOL * want.abs();
    (ok, format!("{name} = {got:.10e} (pinned {want:.10e})"))
}

fn criterion_1() -> Outcome {
    let spec = ModelSpec::hofstadter_hubbard(1, 1.0, 1.0);
    let cfg = EdConfig::default();
    let worst = spec
        .region
        .iter()
        .map(|z| divergence_residual(&spec, z, &cfg).unwrap())
        .fold(0.0, f64::max);
    Outcome {
        id: 1,
        pass: worst <= 1e-12,
        detail: format!("max residual over 9 sites = {worst:.3e} (≤ 1e-12)"),
    }
}

fn random_connected(rng: &mut ChaCha8Rng, region: &SiteSet) -> SiteSet {
    let sites: Vec<Site> = region.iter().collect();
    let target = rng.gen_range(1..=region.len() / 2);
    let start = sites[rng.gen_range(0..sites.len())];
    let mut members = vec![start];
    let mut set: SiteSet = std::iter::once(start).collect();
    while members.len() < target {
        let from = members[rng.gen_range(0..members.len())];
        let n = neighbours(from)[rng.gen_range(0..4)];
        if region.contains(n) && !set.contains(n) {
            set = set.union(&std::iter::once(n).collect());
            members.push(n);
        }
    }
    set
}

fn criterion_2() -> Outcome {
    let l = 20;
    let spec = hofstadter(l);
    let field = full(&spec, EngineKind::Free)
        .current_field(free_params())
        .unwrap();
    let region = &spec.region;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut check = |z: SiteSet| {
        worst = worst.max(conservation_sum(&field, &z, region).unwrap().abs());
        count += 1;
    };
    // (a) everything right of column m.
    for m in -l..l {
        check(region.iter().filter(|x| x.x1 > m).collect());
    }
    // (b) columns 1..=m, rows 0..=L.
    for m in 1..l {
        check(SiteSet::rectangle(1, m, 0, l));
    }
    // (c) the corner x1 > m, x2 ≥ n.
    for m in -l..l {
        for n in 1..=2 * l {
            check(SiteSet::rectangle(m + 1, l, n, 2 * l));
        }
    }
    let families = count;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut random = 0.0f64;
    for _ in 0..100 {
        let z = random_connected(&mut rng, region);
        assert!(z.is_connected());
        random = random.max(conservation_sum(&field, &z, region).unwrap().abs());
    }
    let w = worst.max(random);
    Outcome {
        id: 2,
        pass: w <= 1e-9,
        detail: format!(
            "{families} family sets max |Σ| = {worst:.3e}, 100 random sets max = {random:.3e} (≤ 1e-9)"
        ),
    }
}

struct Shared {
    solved: BTreeMap<i64, Solved>,
    /// Magnetization reports at the criterion-4 parameters, FD step 1e-5.
    magnetization: BTreeMap<i64, MagnetizationReport>,
}

fn criterion_3(shared: &Shared) -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    let (spec, params) = interacting();
    let ed = full(&spec, EngineKind::Ed);
    let interacting_report = magnetization(&ed, params, 1e-5, &[]).unwrap();
    let mut cases: Vec<(String, &Solved, ThermoParams, &MagnetizationReport)> =
        vec![("L=1 interacting".into(), &ed, params, &interacting_report)];
    for (l, s) in &shared.solved {
        cases.push((format!("L={l} free"), s, free_params(), &shared.magnetization[l]));
    }
    for (name, _, _, r) in &cases {
        let id = (r.m_duhamel - r.m_current_sum).abs();
        let fd = (r.m_fd - r.m_duhamel).abs();
        ok &= id <= 1e-9 && fd <= 1e-6;
        lines.push(format!(
            "{name}: m = {:.6e}, |duhamel − current sum| = {id:.2e}, |fd − duhamel| = {fd:.2e}",
            r.m_duhamel
        ));
    }
    // Step halving in the truncation-dominated range.
    for (name, s, p, r) in cases.iter().take(2) {
        let m = r.m_duhamel;
        let opts = SolveOptions {
            ed: s.ed,
            energies_only: true,
        };
        let e1 = (magnetization_fd(&s.spec, *p, s.engine, 0.04, opts).unwrap() - m).abs();
        let e2 = (magnetization_fd(&s.spec, *p, s.engine, 0.02, opts).unwrap() - m).abs();
        let ratio = e1 / e2;
        ok &= (3.5..=4.5).contains(&ratio);
        lines.push(format!("{name}: fd error ratio h=0.04/0.02 = {ratio:.4}"));
    }
    Outcome {
        id: 3,
        pass: ok,
        detail: lines.join("; "),
    }
}

fn criterion_4(field30: &CurrentField, region: &SiteSet) -> Outcome {
    let profile = bloch_profile(field30, region);
    let lo = 3;
    let hi = 25;
    let brk = profile.first_non_decrease(lo, hi);
    let ratio = profile.at(15) / profile.at(5);
    let below = ratio < BLOCH_RATIO_THRESHOLD;
    let shells: Vec<String> = (1..=30)
        .map(|r| format!("{r}:{:.4e}", profile.at(r)))
        .collect();
    eprintln!("criterion 4 profile: {}", shells.join(" "));
    Outcome {
        id: 4,
        pass: brk.is_none() && below,
        detail: format!(
            "strictly decreasing on [{lo}, {hi}]: {}; shellmax(15)/shellmax(5) = {ratio:.10e} below {BLOCH_RATIO_THRESHOLD:e}: {below}",
            match brk {
                None => "yes".to_string(),
                Some(r) => format!(
                    "no, first break at r = {r} ({:.6e} → {:.6e})",
                    profile.at(r),
                    profile.at(r + 1)
                ),
            }
        ),
    }
}

fn criterion_5(shared: &Shared) -> Outcome {
    let mut scaled = Vec::new();
    let mut opposite = Vec::new();
    let mut local_ok = true;
    let mut local = String::new();
    for (&l, s) in &shared.solved {
        let r = &shared.magnetization[&l];
        scaled.push((l, r.scaled_gap));
        opposite.push((l, r.scaled_opposite_gap));
        if l == 32 {
            let field = s.current_field(free_params()).unwrap();
            let profile = bloch_profile(&field, &s.spec.region);
            let i_l = edge_current(&field, l, l, 0).unwrap().value;
            for d in [5, 10, 15] {
                let i_d = edge_current(&field, l, d, 0).unwrap().value;
                let lhs = (i_d - i_l).abs();
                let rhs = profile.tail_sum(d as u64);
                local_ok &= lhs <= rhs;
                local.push_str(&format!(" d={d}: {lhs:.3e} ≤ {rhs:.3e};"));
            }
        }
    }
    let band = |v: &[(i64, f64)]| {
        let mean = v.iter().map(|x| x.1).sum::<f64>() / v.len() as f64;
        v.iter().all(|x| (x.1 - mean).abs() <= 0.35 * mean.abs())
    };
    let fmt = |v: &[(i64, f64)]| {
        v.iter()
            .map(|(l, x)| format!("L={l}: {x:.5e}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    Outcome {
        id: 5,
        pass: band(&scaled) && local_ok,
        detail: format!(
            "(m−I)(2L+1) [{}] within ±35%: {}; localization{local} holds: {local_ok}; for reference (m+I)(2L+1) [{}] within ±35%: {}",
            fmt(&scaled),
            band(&scaled),
            fmt(&opposite),
            band(&opposite)
        ),
    }
}

fn criterion_6(field_b: &CurrentField) -> Outcome {
    let spec_a = with_edge_potential(30, 0.7);
    let spec_b = hofstadter(30).with_strip_width(2);
    let field_a = full(&spec_a, EngineKind::Free)
        .current_field(free_params())
        .unwrap();
    let r = edge_independence_gap(&field_a, &spec_a, field_b, &spec_b, 15, 0).unwrap();
    let r2 = edge_independence_gap(&field_a, &spec_a, field_b, &spec_b, 2, 0).unwrap();
    let (pin_ok, pin) = pinned("gap", r.gap, EDGE_INDEPENDENCE_GAP);
    Outcome {
        id: 6,
        pass: r.gap < r.tail_bound && pin_ok,
        detail: format!(
            "d=15: {pin}, bound {:.3e}, profile bound {:.3e}; d=2 gap {:.3e}",
            r.tail_bound, r.profile_bound, r2.gap
        ),
    }
}

fn relative_check(cov: f64, fd: f64) -> f64 {
    (cov - fd).abs() / cov.abs().max(f64::MIN_POSITIVE)
}

/// Worst relative error over currents, the number compared relatively, and
/// the number whose derivative vanishes by symmetry. A relative error is
/// undefined for those; they must vanish on both routes instead.
fn current_mu_check(s: &Solved, params: ThermoParams, h: f64) -> (f64, usize, usize) {
    let table = s.current_table();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    let mut vanishing = 0;
    for (e, c) in &table {
        if c.terms.is_empty() {
            continue;
        }
        let form = c.form(&s.modes).unwrap();
        let (_, cov) = s.quadratic(params, &form).unwrap();
        let up = s.quadratic(params.with_mu(params.mu + h), &form).unwrap().0;
        let down = s.quadratic(params.with_mu(params.mu - h), &form).unwrap().0;
        let fd = (up - down) / (2.0 * h);
        if cov.abs() < 1e-12 {
            vanishing += 1;
            if fd.abs() > 1e-10 {
                eprintln!("criterion 7: edge {e} has cov {cov:.3e} but fd {fd:.3e}");
                worst = f64::INFINITY;
            }
            continue;
        }
        worst = worst.max(relative_check(cov, fd));
        n += 1;
    }
    (worst, n, vanishing)
}

fn criterion_7(shared: &Shared) -> Outcome {
    let h = 1e-4;
    let (spec, params) = interacting();
    let ed = full(&spec, EngineKind::Ed);
    let (w1, n1, s1) = current_mu_check(&ed, params, h);
    let free10 = full(&hofstadter(10), EngineKind::Free);
    let p10 = ThermoParams::new(2.0, 0.5).unwrap();
    let (w2, n2, s2) = current_mu_check(&free10, p10, h);
    let rel_ok = w1 <= 1e-5 && w2 <= 1e-5;

    let mu_params = ThermoParams::new(2.0, 0.5).unwrap();
    let mut gaps = Vec::new();
    let mut opposite = Vec::new();
    for s in shared.solved.values() {
        let r = mu_derivative_report(s, mu_params, h, &[]).unwrap();
        gaps.push(r.gap.abs());
        opposite.push(r.opposite_gap.abs());
    }
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let mut pin_ok = true;
    let mut pins = Vec::new();
    for (g, want) in gaps.iter().zip(MU_GAP_SEQUENCE) {
        let (ok, s) = pinned("gap", *g, want);
        pin_ok &= ok;
        pins.push(s);
    }
    Outcome {
        id: 7,
        pass: rel_ok && decreasing && pin_ok,
        detail: format!(
            "L=1 interacting: {n1} currents, max rel = {w1:.2e} ({s1} vanishing on both routes); L=10 free: {n2} currents, max rel = {w2:.2e} ({s2} vanishing); |∂μm − ∂μI| over L=8,16,32 [{}] decreasing: {decreasing}; |∂μm + ∂μI| [{}]",
            pins.join(", "),
            opposite
                .iter()
                .map(|x| format!("{x:.4e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

fn criterion_8() -> Outcome {
    let p = free_params();
    let opts = SolveOptions::default();
    let mut ok = true;
    let mut lines = Vec::new();
    for l in [10, 20, 40] {
        let plain = bulk_pressure_comparison(&hofstadter(l), p, EngineKind::Free, opts).unwrap();
        let pot = bulk_pressure_comparison(&with_edge_potential(l, 0.7), p, EngineKind::Free, opts)
            .unwrap();
        ok &= plain.gap <= 1e-10 && pot.gap <= pot.bound;
        lines.push(format!(
            "L={l}: no edge gap {:.2e}; potential gap {:.4e} ≤ {:.4e} (gap·(2L+1) = {:.4e})",
            plain.gap,
            pot.gap,
            pot.bound,
            pot.gap * (2 * l + 1) as f64
        ));
    }
    Outcome {
        id: 8,
        pass: ok,
        detail: lines.join("; "),
    }
}

/// Quadratic specs with at most 12 modes.
fn small_quadratic_specs() -> Vec<(String, ModelSpec)> {
    let mut out = Vec::new();
    let shapes = [
        (0, 0, 0, 0),
        (0, 1, 0, 0),
        (0, 1, 0, 1),
        (0, 2, 0, 1),
        (0, 2, 0, 2),
        (0, 3, 0, 2),
        (-1, 1, 0, 3),
    ];
    for (i, &(a1, b1, a2, b2)) in shapes.iter().enumerate() {
        for alpha in [0.0, 0.15, 0.25, 1.0 / 3.0] {
            let region = SiteSet::rectangle(a1, b1, a2, b2);
            out.push((
                format!("hofstadter shape {i} α={alpha}"),
                ModelSpec::hofstadter(1, flux(alpha)).with_region(region.clone()),
            ));
            if region.len() <= 6 {
                out.push((
                    format!("spinful shape {i} α={alpha}"),
                    ModelSpec::hofstadter_hubbard(1, flux(alpha), 0.0).with_region(region),
                ));
            }
        }
    }
    // Edge potential and edge hopping, range-2 bulk hops.
    let mut spec = ModelSpec::hofstadter(1, flux(0.2))
        .with_region(SiteSet::rectangle(0, 2, 0, 2))
        .with_strip_width(2);
    spec = spec
        .add_edge_potential(&[(Site::new(0, 0), 0.7), (Site::new(2, 1), -0.3)].into_iter().collect())
        .unwrap();
    let t = C64::new(0.4, 0.2);
    spec.edge_hopping.pairs.push(PairHop {
        from: Site::new(0, 0),
        to: Site::new(1, 1),
        amplitude: Block::from_elem((1, 1), t),
    });
    spec.edge_hopping.pairs.push(PairHop {
        from: Site::new(1, 1),
        to: Site::new(0, 0),
        amplitude: Block::from_elem((1, 1), t.conj()),
    });
    spec.range = 2;
    spec.edge_hopping.range = 2;
    out.push(("edge terms".into(), spec.clone()));
    let mut longer = ModelSpec::hofstadter(1, flux(0.1))
        .with_region(SiteSet::rectangle(0, 3, 0, 2))
        .with_strip_width(2);
    longer.range = 2;
    longer.bulk_hopping.range = 2;
    longer.edge_hopping.range = 2;
    for (d, v) in [((1, 1), C64::new(0.3, 0.0)), ((2, 0), C64::new(0.0, 0.25)), ((1, -1), C64::new(-0.2, 0.1))] {
        longer.bulk_hopping.displacements.push(bulkedge::model::BulkHop {
            displacement: Site::new(d.0, d.1),
            amplitude: Block::from_elem((1, 1), v),
        });
        longer.bulk_hopping.displacements.push(bulkedge::model::BulkHop {
            displacement: Site::new(-d.0, -d.1),
            amplitude: Block::from_elem((1, 1), v.conj()),
        });
    }
    out.push(("range 2".into(), longer));
    out
}

fn criterion_9() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for (_, spec) in small_quadratic_specs() {
        assert!(spec.num_modes() <= 12);
        spec.validate().unwrap();
        let ed = full(&spec, EngineKind::Ed);
        let fr = full(&spec, EngineKind::Free);
        for (beta, mu) in [(0.5, -0.3), (2.0, 0.0), (5.0, 0.7)] {
            let p = ThermoParams::new(beta, mu).unwrap();
            let mut d = (ed.pressure(p) - fr.pressure(p)).abs();
            d = d.max((ed.mean_number(p) - fr.mean_number(p)).abs());
            let table = ed.current_table();
            for c in table.values() {
                let f = c.form(&ed.modes).unwrap();
                let (a, da) = ed.quadratic(p, &f).unwrap();
                let (b, db) = fr.quadratic(p, &f).unwrap();
                d = d.max((a - b).abs()).max((da - db).abs());
            }
            // ∂_μ⟨N⟩ and density derivatives.
            let mut nform = fock::QuadraticForm::default();
            for i in 0..ed.modes.len() {
                nform.push(i, i, C64::new(1.0, 0.0));
            }
            let (a, da) = ed.quadratic(p, &nform).unwrap();
            let (b, db) = fr.quadratic(p, &nform).unwrap();
            d = d.max((a - b).abs()).max((da - db).abs());
            worst = worst.max(d);
            n += 1;
        }
    }
    Outcome {
        id: 9,
        pass: worst <= 1e-10,
        detail: format!("{n} (spec, β, μ) cases, max discrepancy {worst:.3e} (≤ 1e-10)"),
    }
}

fn criterion_10() -> Outcome {
    let cfg = EdConfig::default();
    let mut worst: f64 = 0.0;
    let mut op_worst: f64 = 0.0;
    let cases = [
        (ModelSpec::hofstadter_hubbard(4, 0.7, 1.0), SiteSet::rectangle(-1, 1, 2, 3), Site::new(-2, -1)),
        (ModelSpec::nearest_neighbour_density(4, flux(0.15), 1.0), SiteSet::rectangle(-1, 2, 3, 5), Site::new(1, -2)),
        (ModelSpec::hofstadter(4, flux(0.3)), SiteSet::rectangle(-2, 1, 2, 4), Site::new(2, -1)),
    ];
    let p = ThermoParams::new(1.5, 0.2).unwrap();
    for (spec, x, z) in cases {
        let on_x = spec.restrict(&x).unwrap();
        let shifted = x.translated(Site::new(-z.x1, -z.x2));
        let on_shift = spec.clone().with_region(spec.region.union(&shifted)).restrict(&shifted).unwrap();
        // U_{−z} H_X U_{−z}* = H_{X−z}
        let mx = ModeIndex::for_spec(&on_x);
        let ms = ModeIndex::for_spec(&on_shift);
        let hx = fock::assemble(&on_x, &mx, &cfg).unwrap();
        let hs = fock::assemble(&on_shift, &ms, &cfg).unwrap();
        let map = on_x.magnetic_translation(Site::new(-z.x1, -z.x2));
        op_worst = op_worst.max(hx.translated(&map).sub(&hs).unwrap().max_abs());

        let sx = full(&on_x, EngineKind::Ed);
        let ss = full(&on_shift, EngineKind::Ed);
        let tx = sx.current_table();
        let ts = ss.current_table();
        for e in interior_dual_edges(&x) {
            let es = DualEdge::new(e.k, e.base.minus(z));
            let a = sx.quadratic(p, &tx[&e].form(&sx.modes).unwrap()).unwrap().0;
            let b = ss.quadratic(p, &ts[&es].form(&ss.modes).unwrap()).unwrap().0;
            worst = worst.max((a - b).abs());
        }
    }
    Outcome {
        id: 10,
        pass: worst <= 1e-10 && op_worst <= 1e-12,
        detail: format!(
            "max |⟨J^e⟩_X − ⟨J^(e−z)⟩_(X−z)| = {worst:.3e} (≤ 1e-10); ‖U H_X U* − H_(X−z)‖_max = {op_worst:.3e}"
        ),
    }
}

fn criterion_11() -> Outcome {
    let l = 4;
    let spec = hofstadter(l);
    let p = ThermoParams::new(0.25, 0.3).unwrap();
    let whole = full(&spec, EngineKind::Free);
    let center = Site::new(0, l);
    let observables = [
        (SiteSet::from_iter([center]), Observable::Density { site: center }),
        (
            SiteSet::from_iter([center, Site::new(1, l)]),
            Observable::Current { edge: DualEdge::new(Direction::X1, center) },
        ),
    ];
    let mut curve = Vec::new();
    let mut lines = Vec::new();
    for radius in 1..=7u64 {
        let sub = SiteSet::ball(center, radius).intersection(&spec.region);
        let part = full(&spec.restrict(&sub).unwrap(), EngineKind::Free);
        let mut env: f64 = 0.0;
        let mut text = Vec::new();
        for (x, a) in &observables {
            let g = indistinguishability_gap(&whole, &part, p, x, a).unwrap();
            env = env.max(g.gap);
            text.push(format!(
                "{} gap {:.3e} (dist {} / {:?})",
                g.observable, g.gap, g.distance_outside, g.distance_in_region
            ));
        }
        curve.push(env);
        lines.push(format!("ℓ={radius}: {}", text.join(", ")));
    }
    eprintln!("criterion 11: {}", lines.join("; "));
    let decreasing = curve.windows(2).all(|w| w[1] < w[0]);
    let mut pin_ok = true;
    let mut pins = Vec::new();
    for (g, want) in curve.iter().zip(INDISTINGUISHABILITY_CURVE) {
        let (ok, s) = pinned("gap", *g, want);
        pin_ok &= ok;
        pins.push(s);
    }
    Outcome {
        id: 11,
        pass: decreasing && pin_ok,
        detail: format!("envelope over ball radius 1..7 [{}] strictly decreasing: {decreasing}", pins.join(", ")),
    }
}

#[test]
fn acceptance() {
    let mut outcomes = Vec::new();
    let mut timed = |f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        eprintln!("criterion {} took {:.1}s", o.id, t.elapsed().as_secs_f64());
        outcomes.push(o);
    };
    timed(&mut criterion_1);
    timed(&mut criterion_2);
    {
        let t = Instant::now();
        let spec30 = hofstadter(30).with_strip_width(2);
        let s30 = full(&spec30, EngineKind::Free);
        let field30 = s30.current_field(free_params()).unwrap();
        drop(s30);
        eprintln!("L=30 solve took {:.1}s", t.elapsed().as_secs_f64());
        timed(&mut || criterion_4(&field30, &spec30.region));
        timed(&mut || criterion_6(&field30));
    }
    let t = Instant::now();
    let solved: BTreeMap<i64, Solved> = [8, 16, 32]
        .into_iter()
        .map(|l| (l, full(&hofstadter(l), EngineKind::Free)))
        .collect();
    let magnetization = solved
        .iter()
        .map(|(&l, s)| (l, magnetization(s, free_params(), 1e-5, &[]).unwrap()))
        .collect();
    let shared = Shared { solved, magnetization };
    eprintln!("L=8,16,32 solves and magnetizations took {:.1}s", t.elapsed().as_secs_f64());
    timed(&mut || criterion_3(&shared));
    timed(&mut || criterion_5(&shared));
    timed(&mut || criterion_7(&shared));
    drop(shared);
    timed(&mut criterion_8);
    timed(&mut criterion_9);
    timed(&mut criterion_10);
    timed(&mut criterion_11);

    outcomes.sort_by_key(|o| o.id);
    for o in &outcomes {
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2}: {status}: {}", o.id, o.detail);
    }
    let unexpected: Vec<u8> = outcomes
        .iter()
        .filter(|o| o.pass == KNOWN_FAILURES.contains(&o.id))
        .map(|o| o.id)
        .collect();
    assert!(
        unexpected.is_empty(),
        "criteria {unexpected:?} differ from the expected outcome (known failures: {KNOWN_FAILURES:?})"
    );
}
