//! Closed-graph spectrum from the eigenphases of the bond evolution
//! `U(k) = S_B D(k)`.
//!
//! For real `k` the eigenphases of `U(k)` increase strictly with `k`, and
//! `det U(k) = det S_B * exp(i k sum_b l_b)`. Taking each phase in
//! `[0, 2 pi)`, the number of phases that have wrapped through zero between
//! `k0` and `k` is therefore
//! `(sum_b l_b (k - k0) + sum theta(k0) - sum theta(k)) / 2 pi`,
//! an exact integer that counts eigenvalues with multiplicity. Eigenvalues
//! are isolated by bisecting this counting function; a bracket holding a
//! single eigenvalue is then closed with Brent's method on the real secular
//! function `Z(k) = det(I - U(k)) exp(-i Phi(k)/2) i^n / 2^n
//! = prod_j sin(theta_j / 2)`, where `Phi` is the continuous phase sum.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bonds::{directed_bonds, BondSystem};
use crate::graph::MetricGraph;

/// Relative bisection tolerance in `k`.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("graph has no edges")]
    NoEdges,
    #[error("invalid range [{0}, {1}]")]
    InvalidRange(f64, f64),
    #[error("tolerance must be > 0, got {0}")]
    InvalidTolerance(f64),
    #[error("eigenvalue computation failed at k = {0}")]
    Eigen(f64),
}

const SCHUR_THRESHOLDS: [f64; 3] = [f64::EPSILON, 1e-14, 1e-12];
const SCHUR_MAX_ITER: usize = 5_000;

/// Bond evolution operator of a closed graph.
#[derive(Debug, Clone)]
pub struct BondEvolution {
    bonds: BondSystem,
    /// `S_B` without the propagation phases.
    scattering: DMatrix<Complex64>,
    reference_k: f64,
    reference_phase_sum: f64,
}

impl BondEvolution {
    /// Uses the graph with its leads detached.
    pub fn new(graph: &MetricGraph) -> Result<Self, SpectrumError> {
        if graph.edge_count() == 0 {
            return Err(SpectrumError::NoEdges);
        }
        let bonds = directed_bonds(&graph.closed());
        let n = bonds.len();
        let mut scattering = DMatrix::<Complex64>::zeros(n, n);
        for v in 0..bonds.vertex_count() {
            let d = bonds.degree(v) as f64;
            for &out in bonds.outgoing(v) {
                for &inc in bonds.incoming(v) {
                    let s = if out == bonds.reverse(inc) { 2.0 / d - 1.0 } else { 2.0 / d };
                    scattering[(out, inc)] = Complex64::new(s, 0.0);
                }
            }
        }
        // No eigenvalue lies below pi / (total length), so this point has
        // counting function zero while keeping every phase clear of 0.
        let reference_k = 1e-3 * std::f64::consts::PI / graph.total_length();
        let mut evolution = Self {
            bonds,
            scattering,
            reference_k,
            reference_phase_sum: 0.0,
        };
        evolution.reference_phase_sum = evolution.phase_sum(reference_k)?;
        Ok(evolution)
    }

    pub fn dimension(&self) -> usize {
        self.bonds.len()
    }

    pub fn matrix(&self, k: f64) -> DMatrix<Complex64> {
        let mut u = self.scattering.clone();
        for (j, b) in self.bonds.bonds().iter().enumerate() {
            let phase = Complex64::from_polar(1.0, k * b.length);
            for x in u.column_mut(j).iter_mut() {
                *x *= phase;
            }
        }
        u
    }

    fn eigenvalues(&self, k: f64) -> Result<Vec<Complex64>, SpectrumError> {
        // exactly degenerate spectra can keep the QR iteration from deflating
        // at machine precision; a looser threshold moves phases by ~1e-12 only
        let m = self.matrix(k);
        for eps in SCHUR_THRESHOLDS {
            if let Some(values) = nalgebra::linalg::Schur::try_new(m.clone(), eps, SCHUR_MAX_ITER)
                .and_then(|s| s.eigenvalues())
            {
                return Ok(values.iter().copied().collect());
            }
        }
        Err(SpectrumError::Eigen(k))
    }

    /// Eigenphases in `(-pi, pi]`, ascending.
    pub fn eigenphases(&self, k: f64) -> Result<Vec<f64>, SpectrumError> {
        let mut phases: Vec<f64> = self
            .eigenvalues(k)?
            .iter()
            .map(|z| {
                let a = z.arg();
                if a <= -std::f64::consts::PI {
                    a + std::f64::consts::TAU
                } else {
                    a
                }
            })
            .collect();
        phases.sort_by(f64::total_cmp);
        Ok(phases)
    }

    fn phase_sum(&self, k: f64) -> Result<f64, SpectrumError> {
        Ok(self
            .eigenvalues(k)?
            .iter()
            .map(|z| z.arg().rem_euclid(std::f64::consts::TAU))
            .sum())
    }

    fn continuous_phase_sum(&self, k: f64) -> f64 {
        self.reference_phase_sum + self.bonds.total_bond_length() * (k - self.reference_k)
    }

    /// Real secular function `prod_j sin(theta_j(k) / 2)`; it changes sign
    /// at every simple eigenvalue.
    pub fn secular(&self, k: f64) -> f64 {
        let n = self.dimension();
        let a = DMatrix::<Complex64>::identity(n, n) - self.matrix(k);
        let det = a.lu().determinant();
        let i_pow = Complex64::i().powu((n % 4) as u32);
        let z = det * Complex64::from_polar(1.0, -0.5 * self.continuous_phase_sum(k)) * i_pow;
        z.re / 2f64.powi(n as i32)
    }

    /// Number of eigenvalues in `(0, k]`, with multiplicity.
    pub fn count(&self, k: f64) -> Result<usize, SpectrumError> {
        if k <= self.reference_k {
            return Ok(0);
        }
        let wrapped = (self.continuous_phase_sum(k) - self.phase_sum(k)?) / std::f64::consts::TAU;
        Ok(wrapped.round().max(0.0) as usize)
    }
}

/// Eigenphases of the closed graph's bond evolution at wave number `k`.
pub fn eigenphases(graph: &MetricGraph, k: f64) -> Result<Vec<f64>, SpectrumError> {
    BondEvolution::new(graph)?.eigenphases(k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Degeneracy {
    pub k: f64,
    pub multiplicity: usize,
}

/// Closed-graph eigenvalues `k_m` (rad/m), ascending, repeated according to
/// multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueList {
    pub wavenumbers: Vec<f64>,
    /// Clusters that could not be separated at the bisection tolerance.
    pub degeneracies: Vec<Degeneracy>,
}

impl EigenvalueList {
    pub fn len(&self) -> usize {
        self.wavenumbers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavenumbers.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.wavenumbers
            .iter()
            .map(|&k| crate::frequency_from_wavenumber(k))
            .collect()
    }
}

/// How far [`closed_eigenvalues`] searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchLimit {
    /// Every eigenvalue up to this wave number.
    MaxWavenumber(f64),
    /// The first `n` eigenvalues above the lower bound.
    Count(usize),
}

fn isolate(
    evolution: &BondEvolution,
    lo: f64,
    hi: f64,
    n_lo: usize,
    n_hi: usize,
    tol: f64,
    roots: &mut Vec<(f64, usize)>,
) -> Result<(), SpectrumError> {
    if n_hi == n_lo {
        return Ok(());
    }
    if n_hi == n_lo + 1 {
        let f_lo = evolution.secular(lo);
        let f_hi = evolution.secular(hi);
        if f_lo * f_hi < 0.0 {
            roots.push((brent(|k| evolution.secular(k), lo, hi, f_lo, f_hi, tol * hi.max(1.0)), 1));
            return Ok(());
        }
    }
    if hi - lo <= tol * hi.max(1.0) {
        roots.push((0.5 * (lo + hi), n_hi - n_lo));
        return Ok(());
    }
    let mid = 0.5 * (lo + hi);
    let n_mid = evolution.count(mid)?.clamp(n_lo, n_hi);
    isolate(evolution, lo, mid, n_lo, n_mid, tol, roots)?;
    isolate(evolution, mid, hi, n_mid, n_hi, tol, roots)
}

/// Brent's method on a bracket with `f(a) f(b) < 0`.
fn brent(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, xtol: f64) -> f64 {
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    b
}

/// Eigenvalues of `graph` with its leads removed, `k > k_min`, found by
/// bisection on the eigenphase counting function with relative tolerance
/// `tol`. The interval is split into chunks that are searched concurrently.
pub fn closed_eigenvalues(
    graph: &MetricGraph,
    k_min: f64,
    limit: SearchLimit,
    tol: f64,
) -> Result<EigenvalueList, SpectrumError> {
    if !(tol > 0.0) {
        return Err(SpectrumError::InvalidTolerance(tol));
    }
    if !(k_min >= 0.0 && k_min.is_finite()) {
        return Err(SpectrumError::InvalidRange(k_min, f64::NAN));
    }
    let evolution = BondEvolution::new(graph)?;
    let n_min = evolution.count(k_min)?;
    let mean_spacing = std::f64::consts::PI / graph.total_length();
    let (k_max, n_max) = match limit {
        SearchLimit::MaxWavenumber(k_max) => {
            if !(k_max > k_min && k_max.is_finite()) {
                return Err(SpectrumError::InvalidRange(k_min, k_max));
            }
            (k_max, evolution.count(k_max)?)
        }
        SearchLimit::Count(n) => {
            let target = n_min + n;
            let mut k_max = k_min + (n as f64 + 10.0) * mean_spacing;
            let mut count = evolution.count(k_max)?;
            while count < target {
                k_max += (target - count) as f64 * mean_spacing + mean_spacing;
                count = evolution.count(k_max)?;
            }
            (k_max, count)
        }
    };

    // chunks of about 16 levels
    let chunks = ((n_max - n_min) / 16).max(1);
    let edges: Vec<f64> = (0..=chunks)
        .map(|i| k_min + (k_max - k_min) * i as f64 / chunks as f64)
        .collect();
    let counts: Vec<usize> = edges
        .par_iter()
        .map(|&k| evolution.count(k))
        .collect::<Result<_, _>>()?;
    let mut counts = counts;
    counts[0] = n_min;
    counts[chunks] = n_max;
    for i in 1..=chunks {
        counts[i] = counts[i].clamp(counts[i - 1], n_max);
    }
    let pieces: Vec<Vec<(f64, usize)>> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let mut roots = Vec::new();
            isolate(&evolution, edges[i], edges[i + 1], counts[i], counts[i + 1], tol, &mut roots)?;
            Ok(roots)
        })
        .collect::<Result<_, SpectrumError>>()?;

    let mut wavenumbers = Vec::with_capacity(n_max - n_min);
    let mut degeneracies = Vec::new();
    for (k, multiplicity) in pieces.into_iter().flatten() {
        if multiplicity > 1 {
            degeneracies.push(Degeneracy { k, multiplicity });
        }
        wavenumbers.extend(std::iter::repeat_n(k, multiplicity));
    }
    if let SearchLimit::Count(n) = limit {
        wavenumbers.truncate(n);
        degeneracies.retain(|d| wavenumbers.last().is_some_and(|&last| d.k <= last));
    }
    Ok(EigenvalueList {
        wavenumbers,
        degeneracies,
    })
}
