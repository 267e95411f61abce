//! Reference results used to cross-check the bond solver.
//!
//! [`t_c3`] and [`t_c4`] are the closed-form lead-to-lead transmission
//! amplitudes of a single triangle and square with leads on adjacent
//! vertices. They carry the opposite overall sign to the S-matrix
//! convention of [`crate::scattering`] (where a bare edge transmits
//! `+e^{ikl}`), so `S21 = -t`; see [`engine_s21`].
//!
//! [`independent_solver`] solves the same boundary-value problem in terms of
//! vertex values instead of bond amplitudes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::graph::MetricGraph;
use crate::scattering::{complexify_wavenumber, ScatteringError, TwoPortScattering};

/// Half-width of the excluded band around `kl = 0 mod 2 pi` for the
/// closed forms, and around `kl = 0 mod pi` for the vertex solver.
pub const GUARD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("kl = {0} lies within the guard band of a removable singularity")]
    GuardBand(f64),
    #[error("k = {k} puts edge `{edge}` within {GUARD} of sin(kl) = 0")]
    NearDirichlet { k: f64, edge: String },
    #[error("graph needs exactly 2 leads, has {0}")]
    LeadCount(usize),
    #[error("vertex system is singular at k = {0}")]
    Singular(f64),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolygonKind {
    Triangle,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolygonTransmission {
    pub kind: PolygonKind,
    pub kl: f64,
    pub t: Complex64,
}

fn distance_to_multiple(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    r.min(period - r)
}

fn guarded_z(kl: f64, also_minus_one: bool) -> Result<Complex64, OracleError> {
    use std::f64::consts::{PI, TAU};
    let near_one = distance_to_multiple(kl, TAU) <= GUARD;
    let near_minus_one = also_minus_one && distance_to_multiple(kl - PI, TAU) <= GUARD;
    if !kl.is_finite() || near_one || near_minus_one {
        return Err(OracleError::GuardBand(kl));
    }
    Ok(Complex64::from_polar(1.0, kl))
}

/// Triangle: `4z(z^3-1)(z+1) / (9 - z^2 - 8z^3 - z^4 + z^6)`, `z = e^{ikl}`.
pub fn t_c3(kl: f64) -> Result<Complex64, OracleError> {
    let z = guarded_z(kl, false)?;
    let num = 4.0 * z * (z.powu(3) - 1.0) * (z + 1.0);
    let den = 9.0 - z.powu(2) - 8.0 * z.powu(3) - z.powu(4) + z.powu(6);
    Ok(num / den)
}

/// Square: `4z(z^4-1)(z^2+1) / (9 - z^2 - 8z^4 - z^6 + z^8)`, `z = e^{ikl}`.
///
/// Numerator and denominator both vanish at `z = -1` as well as `z = 1`,
/// so both points are guarded. The limit at `z = -1` is full transmission.
pub fn t_c4(kl: f64) -> Result<Complex64, OracleError> {
    let z = guarded_z(kl, true)?;
    let num = 4.0 * z * (z.powu(4) - 1.0) * (z.powu(2) + 1.0);
    let den = 9.0 - z.powu(2) - 8.0 * z.powu(4) - z.powu(6) + z.powu(8);
    Ok(num / den)
}

/// The closed form mapped onto this crate's S-matrix sign convention.
pub fn engine_s21(kind: PolygonKind, kl: f64) -> Result<Complex64, OracleError> {
    Ok(-polygon_transmission(kind, kl)?.t)
}

pub fn polygon_transmission(kind: PolygonKind, kl: f64) -> Result<PolygonTransmission, OracleError> {
    let t = match kind {
        PolygonKind::Triangle => t_c3(kl)?,
        PolygonKind::Square => t_c4(kl)?,
    };
    Ok(PolygonTransmission { kind, kl, t })
}

/// S-matrix from vertex values.
///
/// On an edge of length `l` between vertices with values `phi_u`, `phi_v`
/// the wave is `[phi_u sin(k(l-x)) + phi_v sin(kx)] / sin(kl)`; the
/// Neumann condition then reads, after dividing by `k`,
/// `sum_e [phi_w / sin(k l_e) - phi_v cot(k l_e)] + i sum_leads (phi_v - 2 a_in) = 0`.
/// Absorption enters through the complex wave number on every edge.
pub fn independent_solver(graph: &MetricGraph, k: f64, beta: f64) -> Result<TwoPortScattering, OracleError> {
    let leads = graph.leads();
    if leads.len() != 2 {
        return Err(OracleError::LeadCount(leads.len()));
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(ScatteringError::InvalidWavenumber(k).into());
    }
    for e in graph.edges() {
        if distance_to_multiple(k * e.length, std::f64::consts::PI) <= GUARD {
            return Err(OracleError::NearDirichlet {
                k,
                edge: e.id.clone(),
            });
        }
    }
    let kc = complexify_wavenumber(k, beta)?;
    let n = graph.vertex_count();
    let i = Complex64::i();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for e in graph.edges() {
        let kl = kc * e.length;
        let (sin, cos) = (kl.sin(), kl.cos());
        for (here, there) in [(e.u, e.v), (e.v, e.u)] {
            m[(here, here)] -= cos / sin;
            m[(here, there)] += 1.0 / sin;
        }
    }
    for l in leads {
        m[(l.vertex, l.vertex)] += i;
    }
    let lu = m.lu();
    let mut s = [[Complex64::new(0.0, 0.0); 2]; 2];
    for src in 0..2 {
        let mut rhs = DVector::<Complex64>::zeros(n);
        rhs[leads[src].vertex] += 2.0 * i;
        let phi = lu.solve(&rhs).ok_or(OracleError::Singular(k))?;
        if phi.iter().any(|z| !z.is_finite()) {
            return Err(OracleError::Singular(k));
        }
        for dst in 0..2 {
            let incoming = if dst == src { 1.0 } else { 0.0 };
            s[dst][src] = phi[leads[dst].vertex] - incoming;
        }
    }
    Ok(TwoPortScattering {
        k,
        s11: s[0][0],
        s12: s[0][1],
        s21: s[1][0],
        s22: s[1][1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::uniform_chain;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn triangle_values() {
        let t = t_c3(FRAC_PI_2).unwrap();
        let expected = Complex64::new(1.0, 0.0) / Complex64::new(1.0, 1.0);
        assert!((t - expected).norm() < 1e-14);
        assert!((t.norm() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!(t_c3(PI).unwrap().norm() < 1e-14);
        assert!(t_c3(2.0 * PI / 3.0).unwrap().norm() < 1e-14);
    }

    #[test]
    fn square_values() {
        assert!(t_c4(FRAC_PI_2).unwrap().norm() < 1e-14);
        // removable 0/0 at z = -1; the limit is |t| = 1
        assert!(t_c4(PI).is_err());
        assert!((t_c4(PI + 1e-4).unwrap().norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn flux_bound_on_dense_grid() {
        for i in 1..10_000 {
            let kl = std::f64::consts::TAU * i as f64 / 10_000.0;
            assert!(t_c3(kl).unwrap().norm() <= 1.0 + 1e-12);
            if let Ok(t) = t_c4(kl) {
                assert!(t.norm() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn guard_band() {
        assert_eq!(t_c3(0.0), Err(OracleError::GuardBand(0.0)));
        assert!(t_c4(2.0 * PI + 5e-7).is_err());
        assert!(t_c4(2.0 * PI + 2e-6).is_ok());
    }

    #[test]
    fn vertex_solver_matches_triangle() {
        let l = 0.25;
        let g = uniform_chain(&[3], l, l).unwrap();
        let s = independent_solver(&g, FRAC_PI_2 / l, 0.0).unwrap();
        assert!((s.s21 + t_c3(FRAC_PI_2).unwrap()).norm() < 1e-12);
        let e = engine_s21(PolygonKind::Triangle, FRAC_PI_2).unwrap();
        assert!((s.s21 - e).norm() < 1e-12);
    }

    #[test]
    fn vertex_solver_rejects_dirichlet_points() {
        let g = uniform_chain(&[3], 0.25, 0.25).unwrap();
        assert!(matches!(
            independent_solver(&g, PI / 0.25, 0.0),
            Err(OracleError::NearDirichlet { .. })
        ));
    }
}
