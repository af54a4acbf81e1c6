//! Exact diagonalization against the free-fermion engine.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use bulkedge::currents::current_table;
use bulkedge::engine::{solve, EngineKind, SolveOptions, Solved};
use bulkedge::fock::{self, EdConfig, ModeIndex, QuadraticForm, ThermoParams};
use bulkedge::free::{self, fermi_correlations, fermi_derivative_correlations};
use bulkedge::geometry::{Site, SiteSet};
use bulkedge::model::{flux, Block, BulkHop, ModelSpec, PairHop};
use bulkedge::Error;

fn both(spec: &ModelSpec) -> (Solved, Solved) {
    (
        solve(spec, EngineKind::Ed, SolveOptions::default()).unwrap(),
        solve(spec, EngineKind::Free, SolveOptions::default()).unwrap(),
    )
}

/// Largest difference over pressure, ⟨N⟩, every bond current and every
/// μ-derivative.
fn discrepancy(ed: &Solved, fr: &Solved, p: ThermoParams) -> f64 {
    let mut d = (ed.pressure(p) - fr.pressure(p)).abs();
    d = d.max((ed.mean_number(p) - fr.mean_number(p)).abs());
    for c in current_table(&ed.spec).values() {
        let f = c.form(&ed.modes).unwrap();
        let (a, da) = ed.quadratic(p, &f).unwrap();
        let (b, db) = fr.quadratic(p, &f).unwrap();
        d = d.max((a - b).abs()).max((da - db).abs());
    }
    d
}

#[test]
fn plaquette_single_particle_sector_is_the_one_body_spectrum() {
    let spec = ModelSpec::hofstadter(1, FRAC_PI_2).with_region(SiteSet::rectangle(0, 1, 0, 1));
    let h = free::one_body(&spec).unwrap();
    let energies = free::one_body_energies(&h).unwrap();
    let cfg = EdConfig::default();
    let modes = ModeIndex::for_spec(&spec);
    let spectrum = fock::diagonalize(&fock::assemble(&spec, &modes, &cfg).unwrap(), &cfg).unwrap();
    let one = &spectrum.sectors[&1].values;
    assert_eq!(one.len(), energies.len());
    for (a, b) in one.iter().zip(&energies) {
        assert!((a - b).abs() < 1e-12);
    }
    // Flux π/2 through the plaquette: ±√2 ... from 2cos((θ + 2πk)/4).
    let mut want: Vec<f64> = (0..4)
        .map(|k| 2.0 * ((FRAC_PI_2 + 2.0 * std::f64::consts::PI * k as f64) / 4.0).cos())
        .collect();
    want.sort_by(f64::total_cmp);
    for (a, b) in energies.iter().zip(&want) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn plaquette_observables_agree() {
    let spec = ModelSpec::hofstadter(1, FRAC_PI_2).with_region(SiteSet::rectangle(0, 1, 0, 1));
    let (ed, fr) = both(&spec);
    for (beta, mu) in [(0.3, 0.0), (1.0, 0.5), (7.0, -1.0)] {
        let p = ThermoParams::new(beta, mu).unwrap();
        assert!(discrepancy(&ed, &fr, p) < 1e-10);
    }
}

#[test]
fn auto_engine_and_refusal() {
    let free_spec = ModelSpec::hofstadter(1, 0.3);
    assert_eq!(EngineKind::Auto.resolve(&free_spec).unwrap(), EngineKind::Free);
    let pot = free_spec
        .with_strip_width(1)
        .add_edge_potential(&[(Site::new(0, 0), 0.5)].into_iter().collect())
        .unwrap();
    assert_eq!(EngineKind::Auto.resolve(&pot).unwrap(), EngineKind::Free);
    let hub = ModelSpec::hofstadter_hubbard(1, 0.3, 1.0);
    assert_eq!(EngineKind::Auto.resolve(&hub).unwrap(), EngineKind::Ed);
    assert!(matches!(
        solve(&hub, EngineKind::Free, SolveOptions::default()),
        Err(Error::EngineMismatch(_))
    ));
    assert!(matches!(free::one_body(&hub), Err(Error::EngineMismatch(_))));
}

#[test]
fn hubbard_box_exceeds_the_sector_cap() {
    let hub = ModelSpec::hofstadter_hubbard(1, 1.0, 1.0);
    match solve(&hub, EngineKind::Ed, SolveOptions::default()) {
        Err(Error::SectorTooLarge { particles, dim, cap }) => {
            // The first sector over the cap in increasing N is C(18, 7).
            assert_eq!((particles, dim, cap), (7, 31824, 20000));
        }
        other => panic!("expected a cap error, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn particle_hole_symmetric_filling() {
    let spec = ModelSpec::hofstadter(2, 0.0);
    let s = solve(&spec, EngineKind::Free, SolveOptions::default()).unwrap();
    let p = ThermoParams::new(3.0, 0.0).unwrap();
    let g = fermi_correlations(s.free_spectrum().unwrap(), p);
    assert!((g.trace().re - spec.num_modes() as f64 / 2.0).abs() < 1e-10);
}

#[test]
fn correlation_matrix_is_a_projection_at_low_temperature() {
    // Λ_1 at b = 0 has one-body energies 0, ±√2, ±2√2 …; μ = 0.5 sits in a gap.
    let spec = ModelSpec::hofstadter(1, 0.0);
    let s = solve(&spec, EngineKind::Free, SolveOptions::default()).unwrap();
    let mut last = f64::INFINITY;
    for beta in [1.0, 5.0, 25.0, 125.0] {
        let g = fermi_correlations(s.free_spectrum().unwrap(), ThermoParams::new(beta, 0.5).unwrap()).to_dense();
        let defect = (&g - &g.dot(&g)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(defect < last);
        last = defect;
    }
    assert!(last < 1e-12);
}

#[test]
fn currents_vanish_without_field_and_flip_with_it() {
    let p = ThermoParams::new(1.5, 0.3).unwrap();
    let zero = solve(&ModelSpec::hofstadter(3, 0.0), EngineKind::Free, SolveOptions::default())
        .unwrap()
        .current_field(p)
        .unwrap();
    assert!(zero.values.values().all(|j| j.abs() < 1e-13));

    let plus = solve(&ModelSpec::hofstadter(3, 0.9), EngineKind::Free, SolveOptions::default())
        .unwrap()
        .current_field(p)
        .unwrap();
    let minus = solve(&ModelSpec::hofstadter(3, -0.9), EngineKind::Free, SolveOptions::default())
        .unwrap()
        .current_field(p)
        .unwrap();
    assert!(plus.values.values().any(|j| j.abs() > 1e-3));
    for (e, j) in &plus.values {
        assert!((j + minus.values[e]).abs() < 1e-12);
    }
}

#[test]
fn current_mu_derivative_matches_finite_difference_at_l10() {
    let s = solve(&ModelSpec::hofstadter(10, flux(0.15)), EngineKind::Free, SolveOptions::default()).unwrap();
    let p = ThermoParams::new(2.0, 0.5).unwrap();
    let h = 1e-4;
    let (_, dfield) = s.current_fields(p).unwrap();
    let up = s.current_field(p.with_mu(p.mu + h)).unwrap();
    let down = s.current_field(p.with_mu(p.mu - h)).unwrap();
    let scale = dfield.values.values().map(|v| v.abs()).fold(0.0, f64::max);
    assert!(scale > 1e-3);
    for (e, d) in &dfield.values {
        let fd = (up.values[e] - down.values[e]) / (2.0 * h);
        assert!((d - fd).abs() <= 1e-7 * scale, "{e:?}: {d} vs {fd}");
    }
}

#[test]
fn derivative_matrix_limits() {
    let spec = ModelSpec::hofstadter(1, 0.4);
    let s = solve(&spec, EngineKind::Free, SolveOptions::default()).unwrap();
    let beta = 1e-6;
    let d = fermi_derivative_correlations(s.free_spectrum().unwrap(), ThermoParams::new(beta, 0.0).unwrap())
        .to_dense();
    for ((i, j), z) in d.indexed_iter() {
        let want = if i == j { beta / 4.0 } else { 0.0 };
        assert!((z - C64::new(want, 0.0)).norm() < 1e-12 * beta.max(1.0));
    }
}

fn random_spec(alpha: f64, hops: &[(i64, i64, f64, f64)], pot: &[f64], width: i64) -> ModelSpec {
    let mut spec = ModelSpec::hofstadter(1, flux(alpha))
        .with_region(SiteSet::rectangle(0, width - 1, 0, 1))
        .with_strip_width(2);
    spec.range = 2;
    spec.bulk_hopping.range = 2;
    spec.edge_hopping.range = 2;
    for &(a, b, re, im) in hops {
        let t = C64::new(re, im);
        spec.bulk_hopping.displacements.push(BulkHop {
            displacement: Site::new(a, b),
            amplitude: Block::from_elem((1, 1), t),
        });
        spec.bulk_hopping.displacements.push(BulkHop {
            displacement: Site::new(-a, -b),
            amplitude: Block::from_elem((1, 1), t.conj()),
        });
    }
    let t = C64::new(0.3, -0.4);
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
    let phi = spec
        .region
        .iter()
        .zip(pot)
        .map(|(x, v)| (x, *v))
        .collect();
    spec.add_edge_potential(&phi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_quadratic_specs_agree(
        alpha in -0.5f64..0.5,
        width in 2i64..=6,
        hops in proptest::collection::vec((0i64..=1, -1i64..=1, -1.0f64..1.0, -1.0f64..1.0), 0..3),
        pot in proptest::collection::vec(-1.0f64..1.0, 12),
        beta in 0.1f64..6.0,
        mu in -1.5f64..1.5,
    ) {
        // Skip the zero displacement: it is on-site and is covered by potentials.
        let hops: Vec<_> = hops
            .into_iter()
            .filter(|h| (h.0, h.1) != (0, 0))
            .map(|(a, b, re, im)| if a == 0 { (a, b.abs(), re, im) } else { (a, b, re, im) })
            .collect();
        let spec = random_spec(alpha, &hops, &pot, width);
        prop_assert!(spec.num_modes() <= 12);
        let (ed, fr) = both(&spec);
        let p = ThermoParams::new(beta, mu).unwrap();
        prop_assert!(discrepancy(&ed, &fr, p) < 1e-10);
    }
}

#[test]
fn quadratic_form_expectation_of_number_is_trace() {
    let spec = ModelSpec::hofstadter(2, flux(0.1));
    let s = solve(&spec, EngineKind::Free, SolveOptions::default()).unwrap();
    let p = ThermoParams::new(0.8, 0.2).unwrap();
    let mut q = QuadraticForm::default();
    for i in 0..s.modes.len() {
        q.push(i, i, C64::new(1.0, 0.0));
    }
    let (n, dn) = s.quadratic(p, &q).unwrap();
    assert!((n - s.mean_number(p)).abs() < 1e-10);
    assert!(dn > 0.0);
}
