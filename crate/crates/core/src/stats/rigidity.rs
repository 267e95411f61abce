//! Dyson-Mehta spectral rigidity.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{StatsError, UnfoldedSpectrum};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidityPoint {
    /// Window length.
    pub l: f64,
    pub delta3: f64,
    /// Spread of the window values divided by the square root of the number
    /// of non-overlapping windows that fit in the spectrum.
    pub std_error: f64,
    pub windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityCurve {
    pub points: Vec<RigidityPoint>,
}

/// Least-squares deviation of the staircase from its best straight line
/// over one window, divided by the window length. `levels` are the levels
/// inside the window measured from the window centre.
fn window_delta3(levels: &[f64], l: f64) -> f64 {
    let half = 0.5 * l;
    let (mut j0, mut j1, mut j2) = (0.0, 0.0, 0.0);
    for (j, &y) in levels.iter().enumerate() {
        let tail = half - y;
        j0 += tail;
        j1 += 0.5 * (half * half - y * y);
        j2 += (2 * j + 1) as f64 * tail;
    }
    ((j2 - j0 * j0 / l - 12.0 * j1 * j1 / (l * l * l)) / l).max(0.0)
}

/// `Delta_3(L)` averaged over windows of length `l` whose left edges step by
/// `step` (use `l / 4` for the default overlap) across the spectrum.
pub fn delta3_empirical(spectrum: &UnfoldedSpectrum, l: f64, step: f64) -> Result<RigidityPoint, StatsError> {
    if !(l > 0.0 && step > 0.0) {
        return Err(StatsError::InvalidWindow);
    }
    let span = spectrum.span();
    if l > span {
        return Err(StatsError::WindowTooLong { window: l, span });
    }
    let levels = &spectrum.levels;
    let first = levels[0];
    let count = ((span - l) / step).floor() as usize + 1;
    let mut values = Vec::with_capacity(count);
    let mut shifted = Vec::new();
    for w in 0..count {
        let start = first + step * w as f64;
        let lo = levels.partition_point(|&e| e < start);
        let hi = levels.partition_point(|&e| e <= start + l);
        shifted.clear();
        shifted.extend(levels[lo..hi].iter().map(|e| e - start - 0.5 * l));
        values.push(window_delta3(&shifted, l));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let independent = (span / l).floor().max(1.0);
    Ok(RigidityPoint {
        l,
        delta3: mean,
        std_error: (var / independent).sqrt(),
        windows: values.len(),
    })
}

/// [`delta3_empirical`] at each window length with step `l / 4`.
pub fn delta3_curve(spectrum: &UnfoldedSpectrum, lengths: &[f64]) -> Result<RigidityCurve, StatsError> {
    let points = lengths
        .iter()
        .map(|&l| delta3_empirical(spectrum, l, 0.25 * l))
        .collect::<Result<_, _>>()?;
    Ok(RigidityCurve { points })
}

/// `L / 15`.
pub fn delta3_poisson(l: f64) -> f64 {
    l / 15.0
}

/// Large-`L` expansion `(ln(2 pi L) + gamma - 5/4 - pi^2/8) / pi^2`.
pub fn delta3_goe_asymptotic(l: f64) -> f64 {
    ((2.0 * PI * l).ln() + EULER_GAMMA - 1.25 - PI * PI / 8.0) / (PI * PI)
}

fn sinc(r: f64) -> f64 {
    if r.abs() < 1e-4 {
        let x = PI * r;
        1.0 - x * x / 6.0
    } else {
        (PI * r).sin() / (PI * r)
    }
}

fn sinc_derivative(r: f64) -> f64 {
    if r.abs() < 1e-4 {
        -PI * PI * r / 3.0
    } else {
        let x = PI * r;
        (x * x.cos() - x.sin()) / (PI * r * r)
    }
}

/// GOE rigidity from the two-level cluster function
/// `Y2(r) = s(r)^2 + s'(r) (1/2 - int_0^r s)`, `s(r) = sin(pi r)/(pi r)`:
/// `Delta_3(L) = L/15 - (1/(15 L^4)) int_0^L (L-r)^3 (2L^2 - 9Lr - 3r^2) Y2(r) dr`.
/// Valid for every `L >= 0`; `Delta_3(0) = 0`.
pub fn delta3_goe(l: f64) -> f64 {
    if l <= 0.0 {
        return 0.0;
    }
    let n = ((400.0 * l).ceil() as usize).max(400) * 2;
    let h = l / n as f64;
    let s: Vec<f64> = (0..=n).map(|i| sinc(h * i as f64)).collect();
    // cumulative integral of s by Simpson on even nodes, 3-point rule on odd
    let mut cumulative = vec![0.0; n + 1];
    for i in (2..=n).step_by(2) {
        cumulative[i] = cumulative[i - 2] + h / 3.0 * (s[i - 2] + 4.0 * s[i - 1] + s[i]);
        cumulative[i - 1] = cumulative[i - 2] + h / 12.0 * (5.0 * s[i - 2] + 8.0 * s[i - 1] - s[i]);
    }
    let integrand = |i: usize| {
        let r = h * i as f64;
        let y2 = s[i] * s[i] + sinc_derivative(r) * (0.5 - cumulative[i]);
        (l - r).powi(3) * (2.0 * l * l - 9.0 * l * r - 3.0 * r * r) * y2
    };
    let mut acc = integrand(0) + integrand(n);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * integrand(i);
    }
    let integral = acc * h / 3.0;
    l / 15.0 - integral / (15.0 * l.powi(4))
}

/// Berry-Robnik rigidity `Delta_3^Poisson(rho1 L) + Delta_3^GOE(rho2 L)`.
pub fn delta3_br(l: f64, rho1: f64) -> Result<f64, StatsError> {
    if !(0.0..=1.0).contains(&rho1) {
        return Err(StatsError::InvalidRho(rho1));
    }
    Ok(delta3_poisson(rho1 * l) + delta3_goe((1.0 - rho1) * l))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct minimization over a fine grid of the staircase integral.
    fn brute_force_window(levels: &[f64], l: f64) -> f64 {
        let n = 20_000;
        let h = l / n as f64;
        let ys: Vec<f64> = (0..n).map(|i| -0.5 * l + h * (i as f64 + 0.5)).collect();
        let stair: Vec<f64> = ys.iter().map(|&y| levels.iter().filter(|&&e| e <= y).count() as f64).collect();
        // normal equations for A, B
        let (mut sy, mut syy, mut sn, mut syn) = (0.0, 0.0, 0.0, 0.0);
        for (y, s) in ys.iter().zip(&stair) {
            sy += y;
            syy += y * y;
            sn += s;
            syn += y * s;
        }
        let m = n as f64;
        let a = (m * syn - sy * sn) / (m * syy - sy * sy);
        let b = (sn - a * sy) / m;
        ys.iter().zip(&stair).map(|(y, s)| (s - a * y - b).powi(2)).sum::<f64>() * h / l
    }

    #[test]
    fn closed_form_window_matches_brute_force() {
        let levels = [-1.7, -0.4, -0.35, 0.2, 1.1, 2.9];
        let l = 6.5;
        let a = window_delta3(&levels, l);
        let b = brute_force_window(&levels, l);
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }

    #[test]
    fn picket_fence() {
        let levels: Vec<f64> = (0..2000).map(f64::from).collect();
        let spectrum = UnfoldedSpectrum::from_levels(levels).unwrap();
        for l in [10.0, 30.0, 80.0] {
            let p = delta3_empirical(&spectrum, l, 0.25 * l).unwrap();
            assert!((p.delta3 - 1.0 / 12.0).abs() < 1.0 / (l * l) + 1e-9, "L={l}: {}", p.delta3);
        }
    }

    #[test]
    fn window_errors() {
        let spectrum = UnfoldedSpectrum::from_levels(vec![0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(delta3_empirical(&spectrum, 5.0, 1.0), Err(StatsError::WindowTooLong { .. })));
        assert_eq!(delta3_empirical(&spectrum, 0.0, 1.0), Err(StatsError::InvalidWindow));
    }

    #[test]
    fn reference_curves() {
        assert_eq!(delta3_poisson(15.0), 1.0);
        assert!((delta3_goe_asymptotic(15.0) - 0.2674).abs() < 1e-4);
        // Monte-Carlo GOE (200 spectra of 3000 levels) gives 0.2740 +- 0.0004
        assert!((delta3_goe(15.0) - 0.2738).abs() < 1e-3, "{}", delta3_goe(15.0));
        assert_eq!(delta3_goe(0.0), 0.0);
        // no level correlations can act inside a tiny window
        assert!((delta3_goe(0.01) - 0.01 / 15.0).abs() < 1e-5);
        for l in [0.5, 2.0, 10.0, 40.0] {
            assert!((delta3_br(l, 1.0).unwrap() - delta3_poisson(l)).abs() < 1e-15);
            assert!((delta3_br(l, 0.0).unwrap() - delta3_goe(l)).abs() < 1e-15);
            assert!(delta3_goe(l) <= delta3_poisson(l));
        }
        assert!(delta3_br(1.0, -0.1).is_err());
    }

    #[test]
    fn goe_rigidity_approaches_asymptote() {
        // the expansion drops a correction of about 0.1 / L
        for l in [15.0, 30.0, 60.0, 120.0] {
            let gap = delta3_goe(l) - delta3_goe_asymptotic(l);
            assert!(gap > 0.0 && gap < 0.12 / l, "L={l}: {gap}");
        }
    }
}
