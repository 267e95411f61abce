#![allow(dead_code)]

use nalgebra::DMatrix;
use qgraph::graph::{irrational_c3c4c3, uniform_chain, MetricGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Fraction of Berry-Robnik spacings larger than `s`, from the gap
/// probability `E(s) = exp(-rho1 s) erfc(sqrt(pi) rho2 s / 2)` as `-E'(s)`.
pub fn br_survival(s: f64, rho1: f64) -> f64 {
    let rho2 = 1.0 - rho1;
    (-rho1 * s).exp() * (rho1 * libm::erfc(0.5 * PI.sqrt() * rho2 * s) + rho2 * (-0.25 * PI * rho2 * rho2 * s * s).exp())
}

/// Spacings drawn by inverting the survival function.
pub fn br_spacings(n: usize, rho1: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>().max(1e-300);
            let (mut lo, mut hi) = (0.0, 1.0);
            while br_survival(hi, rho1) > u {
                hi *= 2.0;
            }
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if br_survival(mid, rho1) > u {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Triangle with a dangling stub on the lead-free vertex.
pub fn stub_graph() -> MetricGraph {
    MetricGraph::from_named(
        ["a", "b", "c", "d"],
        [
            ("ab".into(), "a".into(), "b".into(), 0.31),
            ("bc".into(), "b".into(), "c".into(), 0.23),
            ("ca".into(), "c".into(), "a".into(), 0.27),
            ("cd".into(), "c".into(), "d".into(), 0.113),
        ],
        [("in".into(), "a".into()), ("out".into(), "b".into())],
    )
    .unwrap()
}

/// The three geometries used for cross-solver checks.
pub fn geometries() -> Vec<(&'static str, MetricGraph)> {
    vec![
        ("C3C4C3 l'=l/3", uniform_chain(&[3, 4, 3], 0.25, 0.25 / 3.0).unwrap()),
        ("irrational C3C4C3", irrational_c3c4c3(0.25)),
        ("triangle with stub", stub_graph()),
    ]
}

/// Neumann vertex matrix of the closed graph: the closed graph has an
/// eigenvalue at `k` (away from `sin(k l_e) = 0`) exactly where it is
/// singular.
pub fn vertex_matrix(graph: &MetricGraph, k: f64) -> DMatrix<f64> {
    let n = graph.vertex_count();
    let mut m = DMatrix::zeros(n, n);
    for e in graph.edges() {
        let (s, c) = (k * e.length).sin_cos();
        if e.is_loop() {
            m[(e.u, e.u)] += 2.0 / s - 2.0 * c / s;
        } else {
            m[(e.u, e.u)] -= c / s;
            m[(e.v, e.v)] -= c / s;
            m[(e.u, e.v)] += 1.0 / s;
            m[(e.v, e.u)] += 1.0 / s;
        }
    }
    m
}

/// Smallest singular value over the largest.
pub fn inverse_condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    min / max
}
