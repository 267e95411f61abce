mod common;

use proptest::prelude::*;
use qgraph::graph::{uniform_chain, MetricGraph, PolygonChainSpec, build_polygon_chain};
use qgraph::oracles::{independent_solver, OracleError};
use qgraph::scattering::{two_port_smatrix, ScatteringSystem, TwoPortScattering};
use qgraph::spectrum::{closed_eigenvalues, SearchLimit, DEFAULT_TOLERANCE};
use qgraph::stats::{fit_rho1, FitOptions, SpacingSample};
use qgraph::timedomain::{enumerate_paths, synthesize_auto, synthesize_output, PulseSpec, TimeGrid};
use qgraph::SPEED_OF_LIGHT;
use std::f64::consts::PI;

fn max_entry_diff(a: &TwoPortScattering, b: &TwoPortScattering) -> f64 {
    a.as_array()
        .iter()
        .flatten()
        .zip(b.as_array().iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest eigenvalue of `S^dagger S`.
fn max_power_gain(s: &TwoPortScattering) -> f64 {
    let m = s.as_array();
    let a = m[0][0].norm_sqr() + m[1][0].norm_sqr();
    let d = m[0][1].norm_sqr() + m[1][1].norm_sqr();
    let b = (m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1]).norm_sqr();
    0.5 * (a + d) + (0.25 * (a - d).powi(2) + b).sqrt()
}

fn chain_strategy() -> impl Strategy<Value = MetricGraph> {
    (
        prop::collection::vec(3usize..=5, 1..=3),
        prop::collection::vec(0.05f64..0.5, 3),
        0.05f64..0.5,
    )
        .prop_map(|(sizes, lengths, connector)| {
            let spec = PolygonChainSpec {
                polygon_edge_lengths: lengths[..sizes.len()].to_vec(),
                polygon_sizes: sizes,
                connector_length: connector,
            };
            build_polygon_chain(&spec).unwrap()
        })
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn degree_two_split_leaves_scattering_unchanged(
        graph in chain_strategy(),
        edge_pick in 0usize..1000,
        fraction in 0.05f64..0.95,
        k in 0.5f64..60.0,
        beta in prop::sample::select(vec![0.0, 0.009]),
    ) {
        let edge = edge_pick % graph.edge_count();
        let split = graph.split_edge(edge, fraction * graph.edges()[edge].length).unwrap();
        let a = two_port_smatrix(&graph, k, beta).unwrap();
        let b = two_port_smatrix(&split, k, beta).unwrap();
        prop_assert!(max_entry_diff(&a, &b) < 1e-10, "{}", max_entry_diff(&a, &b));
    }

    #[test]
    fn lossless_is_unitary_and_reciprocal(graph in chain_strategy(), k in 0.5f64..60.0) {
        let s = two_port_smatrix(&graph, k, 0.0).unwrap();
        prop_assert!(s.unitarity_defect() < 1e-10);
        prop_assert!(s.reciprocity_defect() < 1e-12);
    }

    #[test]
    fn absorption_is_sub_unitary(graph in chain_strategy(), k in 0.5f64..60.0, beta in 1e-4f64..0.05) {
        let s = two_port_smatrix(&graph, k, beta).unwrap();
        prop_assert!(max_power_gain(&s) < 1.0);
        prop_assert!(s.reciprocity_defect() < 1e-12);
    }

    #[test]
    fn mirror_symmetry_about_pi(x in 0.001f64..3.1) {
        let g = uniform_chain(&[3, 4, 3], 0.25, 0.25).unwrap();
        let t = |kl: f64| two_port_smatrix(&g, kl / 0.25, 0.0).unwrap().transmission();
        prop_assert!((t(PI + x) - t(PI - x)).abs() < 1e-9);
    }

    #[test]
    fn mirror_symmetry_about_three_pi_for_third_connectors(x in 0.001f64..3.1) {
        let g = uniform_chain(&[3, 4, 3], 0.25, 0.25 / 3.0).unwrap();
        let t = |kl: f64| two_port_smatrix(&g, kl / 0.25, 0.0).unwrap().transmission();
        prop_assert!((t(3.0 * PI + x) - t(3.0 * PI - x)).abs() < 1e-9);
    }

    #[test]
    fn rho1_fit_ignores_spacing_scale(scale in 0.1f64..10.0, seed in 0u64..1000) {
        let spacings = common::br_spacings(500, 0.5, seed);
        let options = FitOptions { bootstrap_resamples: 0, ..FitOptions::default() };
        let a = fit_rho1(&SpacingSample::new(spacings.clone()).unwrap(), &options).unwrap();
        let b = fit_rho1(&SpacingSample::new(spacings.iter().map(|s| s * scale).collect()).unwrap(), &options).unwrap();
        prop_assert!((a.rho1 - b.rho1).abs() < 1e-5, "{} {}", a.rho1, b.rho1);
    }
}

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn bond_and_vertex_solvers_agree(k in 0.5f64..200.0, beta in prop::sample::select(vec![0.0, 0.009])) {
        for (name, graph) in common::geometries() {
            let engine = ScatteringSystem::new(&graph).unwrap().smatrix(k, beta).unwrap();
            match independent_solver(&graph, k, beta) {
                Ok(reference) => {
                    let d = max_entry_diff(&engine, &reference);
                    prop_assert!(d < 1e-8, "{name} at k = {k}: {d}");
                }
                Err(OracleError::NearDirichlet { .. }) => {}
                Err(e) => prop_assert!(false, "{name}: {e}"),
            }
        }
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn eigenvalues_scale_inversely_with_length(alpha in 0.3f64..3.0) {
        let g = qgraph::graph::irrational_c3c4c3(0.25);
        let base = closed_eigenvalues(&g, 0.0, SearchLimit::Count(40), DEFAULT_TOLERANCE).unwrap();
        let scaled = closed_eigenvalues(&g.scaled(alpha).unwrap(), 0.0, SearchLimit::Count(40), DEFAULT_TOLERANCE).unwrap();
        for (a, b) in base.wavenumbers.iter().zip(&scaled.wavenumbers) {
            prop_assert!((a / alpha - b).abs() < 1e-9 * a / alpha);
        }
    }

    #[test]
    fn synthesis_is_linear(scale in -3.0f64..3.0) {
        prop_assume!(scale.abs() > 1e-3);
        let g = uniform_chain(&[3], 0.1, 0.1).unwrap();
        let p = PulseSpec::new(0.41, 125e-12, 0.0).unwrap();
        let q = PulseSpec::new(0.41 * scale, 125e-12, 0.0).unwrap();
        let grid = TimeGrid::for_pulse(&p, 200e-9);
        let a = synthesize_output(&g, &p, 0.009, &grid).unwrap();
        let b = synthesize_output(&g, &q, 0.009, &grid).unwrap();
        let peak = a.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.samples.iter().zip(&b.samples) {
            prop_assert!((x * scale - y).abs() <= 1e-12 * peak * scale.abs());
        }
    }

    #[test]
    fn traces_are_passive(
        fwhm in 60e-12f64..400e-12,
        beta in prop::sample::select(vec![0.0, 0.009]),
        sides in prop::sample::select(vec![3usize, 4, 5]),
        l in 0.05f64..0.3,
    ) {
        // single polygons: chains can hold near-trapped modes that outlast
        // any practical record when lossless
        let g = uniform_chain(&[sides], l, l).unwrap();
        let p = PulseSpec::new(0.41, fwhm, 0.0).unwrap();
        let out = synthesize_auto(&g, &p, beta).unwrap();
        let input = qgraph::timedomain::gaussian_pulse(&p, &TimeGrid { start: out.start, dt: out.dt, len: out.len() }).unwrap();
        prop_assert!(out.energy() <= input.energy() * (1.0 + 1e-6));
    }
}

#[test]
fn closed_eigenvalues_make_vertex_matrix_singular() {
    let g = qgraph::graph::irrational_c3c4c3(0.25).closed();
    let list = closed_eigenvalues(&g, 0.0, SearchLimit::Count(60), DEFAULT_TOLERANCE).unwrap();
    assert_eq!(list.len(), 60);
    for w in list.wavenumbers.windows(2) {
        let at = common::inverse_condition(&common::vertex_matrix(&g, w[0]));
        assert!(at < 1e-9, "k = {}: {at}", w[0]);
        let between = common::inverse_condition(&common::vertex_matrix(&g, 0.5 * (w[0] + w[1])));
        assert!(between > 1e3 * at, "midpoint after k = {}: {between}", w[0]);
    }
}

#[test]
fn delay_line_has_exactly_one_walk_at_its_length() {
    let g = MetricGraph::from_named(
        ["a", "b"],
        [("ab".into(), "a".into(), "b".into(), 0.6)],
        [("in".into(), "a".into()), ("out".into(), "b".into())],
    )
    .unwrap();
    let found = enumerate_paths(&g, "in", "out", 0.6, 1000).unwrap();
    assert_eq!(found.paths.len(), 1);
    assert!(!found.partial);
    assert_eq!(found.paths[0].amplitude, 1.0);
    assert!((found.paths[0].length / SPEED_OF_LIGHT - 0.6 / SPEED_OF_LIGHT).abs() < 1e-20);
}
