//! Two-port scattering matrix of an open graph.
//!
//! The amplitudes leaving each vertex along each directed bond are the
//! unknowns. A wave that leaves along bond `b` arrives at its terminal vertex
//! multiplied by `exp(i k l_b)` and is redistributed there by the Neumann
//! vertex matrix `2/d - delta`. Stacking these conditions gives the
//! `2E x 2E` system `(I - S_B D(k)) a = s_in`, solved once per wave number.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bonds::{directed_bonds, BondSystem};
use crate::graph::MetricGraph;

/// Condition numbers above this mark a wave number as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatteringError {
    #[error("vertex degree must be at least 1")]
    ZeroDegree,
    #[error("absorption coefficient must be finite and >= 0, got {0}")]
    InvalidBeta(f64),
    #[error("wave number must be finite and > 0, got {0}")]
    InvalidWavenumber(f64),
    #[error("two-port scattering needs exactly 2 leads, graph has {0}")]
    LeadCount(usize),
    #[error("bond system is singular at k = {k} rad/m (condition estimate {condition:.3e})")]
    Singular { k: f64, condition: f64 },
    #[error("invalid scan: {0}")]
    InvalidScan(String),
}

/// Neumann scattering matrix of a vertex of degree `d`:
/// every channel transmits with `2/d` and reflects with `2/d - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexScattering {
    degree: usize,
}

impl VertexScattering {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn transmission(&self) -> f64 {
        2.0 / self.degree as f64
    }

    pub fn reflection(&self) -> f64 {
        self.transmission() - 1.0
    }

    /// Entry for scattering from channel `from` into channel `to`.
    pub fn entry(&self, to: usize, from: usize) -> f64 {
        if to == from {
            self.reflection()
        } else {
            self.transmission()
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.degree, self.degree, |i, j| self.entry(i, j))
    }
}

pub fn neumann_sigma(degree: usize) -> Result<VertexScattering, ScatteringError> {
    if degree == 0 {
        return Err(ScatteringError::ZeroDegree);
    }
    Ok(VertexScattering { degree })
}

/// Absorbing wave number `k + i beta sqrt(k)`.
pub fn complexify_wavenumber(k: f64, beta: f64) -> Result<Complex64, ScatteringError> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(ScatteringError::InvalidBeta(beta));
    }
    Ok(Complex64::new(k, beta * k.abs().sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPortScattering {
    /// Wave number, rad/m.
    pub k: f64,
    pub s11: Complex64,
    pub s12: Complex64,
    pub s21: Complex64,
    pub s22: Complex64,
}

impl TwoPortScattering {
    pub fn frequency(&self) -> f64 {
        crate::frequency_from_wavenumber(self.k)
    }

    /// Transmission amplitude `|S12|`.
    pub fn transmission(&self) -> f64 {
        self.s12.norm()
    }

    pub fn as_array(&self) -> [[Complex64; 2]; 2] {
        [[self.s11, self.s12], [self.s21, self.s22]]
    }

    /// Largest entry of `|S^dagger S - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let s = self.as_array();
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..2 {
                    acc += s[r][i].conj() * s[r][j];
                }
                if i == j {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    pub fn reciprocity_defect(&self) -> f64 {
        (self.s12 - self.s21).norm()
    }
}

/// Precomputed bond structure for repeated S-matrix evaluation on one graph.
#[derive(Debug, Clone)]
pub struct ScatteringSystem {
    bonds: BondSystem,
    lead_vertices: [usize; 2],
}

impl ScatteringSystem {
    pub fn new(graph: &MetricGraph) -> Result<Self, ScatteringError> {
        if graph.leads().len() != 2 {
            return Err(ScatteringError::LeadCount(graph.leads().len()));
        }
        let bonds = directed_bonds(graph);
        for v in 0..bonds.vertex_count() {
            neumann_sigma(bonds.degree(v))?;
        }
        let lead_vertices = [graph.leads()[0].vertex, graph.leads()[1].vertex];
        Ok(Self {
            bonds,
            lead_vertices,
        })
    }

    pub fn bonds(&self) -> &BondSystem {
        &self.bonds
    }

    /// The matrix `I - S_B D(k~)` acting on outgoing bond amplitudes.
    fn system_matrix(&self, k: Complex64) -> DMatrix<Complex64> {
        let bs = &self.bonds;
        let n = bs.len();
        let phase: Vec<Complex64> = bs
            .bonds()
            .iter()
            .map(|b| (Complex64::i() * k * b.length).exp())
            .collect();
        let mut a = DMatrix::<Complex64>::identity(n, n);
        for v in 0..bs.vertex_count() {
            let sigma = VertexScattering {
                degree: bs.degree(v),
            };
            for &out in bs.outgoing(v) {
                for &inc in bs.incoming(v) {
                    let s = if out == bs.reverse(inc) {
                        sigma.reflection()
                    } else {
                        sigma.transmission()
                    };
                    a[(out, inc)] -= phase[inc] * s;
                }
            }
        }
        a
    }

    /// S-matrix at real wave number `k` with absorption `beta`.
    pub fn smatrix(&self, k: f64, beta: f64) -> Result<TwoPortScattering, ScatteringError> {
        if !(k.is_finite() && k > 0.0) {
            return Err(ScatteringError::InvalidWavenumber(k));
        }
        let kc = complexify_wavenumber(k, beta)?;
        self.smatrix_complex(k, kc)
    }

    /// S-matrix for an arbitrary complex wave number `kc`; `k` is only
    /// recorded in the result.
    pub fn smatrix_complex(&self, k: f64, kc: Complex64) -> Result<TwoPortScattering, ScatteringError> {
        let bs = &self.bonds;
        let n = bs.len();
        let a = self.system_matrix(kc);
        let norm_a = one_norm(&a);
        let inverse = a
            .lu()
            .try_inverse()
            .ok_or(ScatteringError::Singular { k, condition: f64::INFINITY })?;
        let condition = norm_a * one_norm(&inverse);
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(ScatteringError::Singular { k, condition });
        }

        // Source vectors: unit amplitude injected on lead 0 or lead 1.
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        let phase: Vec<Complex64> = bs
            .bonds()
            .iter()
            .map(|b| (Complex64::i() * kc * b.length).exp())
            .collect();
        for (src, &src_vertex) in self.lead_vertices.iter().enumerate() {
            let t_src = 2.0 / bs.degree(src_vertex) as f64;
            let mut rhs = DVector::<Complex64>::zeros(n);
            for &b in bs.outgoing(src_vertex) {
                rhs[b] = Complex64::new(t_src, 0.0);
            }
            let amp = &inverse * rhs;
            for (dst, &dst_vertex) in self.lead_vertices.iter().enumerate() {
                let t = 2.0 / bs.degree(dst_vertex) as f64;
                let mut acc: Complex64 = bs
                    .incoming(dst_vertex)
                    .iter()
                    .map(|&b| amp[b] * phase[b] * t)
                    .sum();
                if dst_vertex == src_vertex {
                    acc += if dst == src { t - 1.0 } else { t };
                }
                out[dst][src] = acc;
            }
        }
        Ok(TwoPortScattering {
            k,
            s11: out[0][0],
            s12: out[0][1],
            s21: out[1][0],
            s22: out[1][1],
        })
    }
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Two-port S-matrix of `graph` at wave number `k` (rad/m) with absorption
/// coefficient `beta` (m^(-1/2)).
pub fn two_port_smatrix(graph: &MetricGraph, k: f64, beta: f64) -> Result<TwoPortScattering, ScatteringError> {
    ScatteringSystem::new(graph)?.smatrix(k, beta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanDefect {
    pub k: f64,
    pub message: String,
}

/// S-matrix samples on an increasing wave-number grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumScan {
    pub beta: f64,
    pub samples: Vec<TwoPortScattering>,
    /// Grid points where the solve failed; they are absent from `samples`.
    pub defects: Vec<ScanDefect>,
}

impl SpectrumScan {
    pub fn wavenumbers(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.k).collect()
    }

    pub fn transmission(&self) -> Vec<f64> {
        self.samples.iter().map(TwoPortScattering::transmission).collect()
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(TwoPortScattering::unitarity_defect)
            .fold(0.0, f64::max)
    }

    pub fn max_reciprocity_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(TwoPortScattering::reciprocity_defect)
            .fold(0.0, f64::max)
    }
}

/// Uniform grid of `points` wave numbers from `kmin` to `kmax` inclusive.
pub fn uniform_grid(kmin: f64, kmax: f64, points: usize) -> Vec<f64> {
    let step = (kmax - kmin) / (points - 1) as f64;
    (0..points).map(|i| kmin + step * i as f64).collect()
}

/// Evaluates the S-matrix on an arbitrary increasing grid.
pub fn scan_grid(graph: &MetricGraph, grid: &[f64], beta: f64) -> Result<SpectrumScan, ScatteringError> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ScatteringError::InvalidScan("grid must be strictly increasing".into()));
    }
    complexify_wavenumber(1.0, beta)?;
    let system = ScatteringSystem::new(graph)?;
    let results: Vec<_> = grid.par_iter().map(|&k| (k, system.smatrix(k, beta))).collect();
    let mut samples = Vec::with_capacity(grid.len());
    let mut defects = Vec::new();
    for (k, r) in results {
        match r {
            Ok(s) => samples.push(s),
            Err(e) => defects.push(ScanDefect {
                k,
                message: e.to_string(),
            }),
        }
    }
    Ok(SpectrumScan {
        beta,
        samples,
        defects,
    })
}

/// Transmission scan over `points` uniformly spaced wave numbers in
/// `[kmin, kmax]`.
pub fn transmission_scan(
    graph: &MetricGraph,
    kmin: f64,
    kmax: f64,
    points: usize,
    beta: f64,
) -> Result<SpectrumScan, ScatteringError> {
    if !(kmin > 0.0 && kmax > kmin && kmax.is_finite()) {
        return Err(ScatteringError::InvalidScan(format!(
            "need 0 < kmin < kmax, got [{kmin}, {kmax}]"
        )));
    }
    if points < 2 {
        return Err(ScatteringError::InvalidScan("need at least 2 points".into()));
    }
    scan_grid(graph, &uniform_grid(kmin, kmax, points), beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::uniform_chain;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn sigma_small_degrees() {
        assert_eq!(neumann_sigma(1).unwrap().matrix()[(0, 0)], 1.0);
        let s2 = neumann_sigma(2).unwrap().matrix();
        assert_eq!((s2[(0, 0)], s2[(0, 1)]), (0.0, 1.0));
        let s3 = neumann_sigma(3).unwrap();
        assert!((s3.reflection() + 1.0 / 3.0).abs() < 1e-15);
        assert!((s3.transmission() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(neumann_sigma(0), Err(ScatteringError::ZeroDegree));
    }

    #[test]
    fn sigma_is_orthogonal_involution() {
        for d in 1..8 {
            let m = neumann_sigma(d).unwrap().matrix();
            let sq = &m * &m;
            assert!((sq - DMatrix::<f64>::identity(d, d)).amax() < 1e-14);
            assert_eq!(m, m.transpose());
        }
    }

    #[test]
    fn complexify() {
        assert_eq!(complexify_wavenumber(4.0, 0.0).unwrap(), Complex64::new(4.0, 0.0));
        let z = complexify_wavenumber(4.0, 0.009).unwrap();
        assert!((z.im - 0.018).abs() < 1e-15);
        assert!(complexify_wavenumber(4.0, -1.0).is_err());
        let l = 2.0;
        let factor = (Complex64::i() * z * l).exp().norm();
        assert!((factor - (-0.018 * l).exp()).abs() < 1e-15);
        assert!(factor < 1.0);
    }

    #[test]
    fn single_polygon_values() {
        let l = 0.25;
        let c3 = uniform_chain(&[3], l, l).unwrap();
        let c4 = uniform_chain(&[4], l, l).unwrap();
        let s = two_port_smatrix(&c3, FRAC_PI_2 / l, 0.0).unwrap();
        assert!((s.s21.norm() - 0.5f64.sqrt()).abs() < 1e-12);
        let s = two_port_smatrix(&c4, FRAC_PI_2 / l, 0.0).unwrap();
        assert!(s.s21.norm() < 1e-12);
        let s = two_port_smatrix(&c3, PI / l, 0.0).unwrap();
        assert!(s.s21.norm() < 1e-12);
    }

    #[test]
    fn wrong_lead_count() {
        let g = uniform_chain(&[3], 0.25, 0.25).unwrap().closed();
        assert_eq!(two_port_smatrix(&g, 1.0, 0.0).unwrap_err(), ScatteringError::LeadCount(0));
    }

    #[test]
    fn bare_edge_is_a_delay_line() {
        let g = MetricGraph::from_named(
            ["a", "b"],
            [("ab".into(), "a".into(), "b".into(), 0.7)],
            [("in".into(), "a".into()), ("out".into(), "b".into())],
        )
        .unwrap();
        let k = 3.3;
        let s = two_port_smatrix(&g, k, 0.0).unwrap();
        assert!(s.s11.norm() < 1e-14);
        assert!((s.s21 - (Complex64::i() * k * 0.7).exp()).norm() < 1e-14);
    }

    #[test]
    fn scan_rejects_bad_ranges() {
        let g = uniform_chain(&[3], 0.25, 0.25).unwrap();
        assert!(transmission_scan(&g, 0.0, 1.0, 10, 0.0).is_err());
        assert!(transmission_scan(&g, 1.0, 2.0, 1, 0.0).is_err());
        assert!(transmission_scan(&g, 1.0, 2.0, 10, -0.1).is_err());
    }

    #[test]
    fn bound_state_becomes_a_defect() {
        // kl = 2 pi supports a triangle state vanishing at every vertex.
        let g = uniform_chain(&[3], 0.25, 0.25).unwrap();
        let k = 2.0 * PI / 0.25;
        let scan = scan_grid(&g, &[k - 0.5, k, k + 0.5], 0.0).unwrap();
        assert_eq!(scan.samples.len() + scan.defects.len(), 3);
    }
}
