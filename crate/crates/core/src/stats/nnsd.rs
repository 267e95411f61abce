//! Nearest-neighbour spacing distributions and the maximum-likelihood
//! Berry-Robnik fit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SpacingSample, StatsError};
use std::f64::consts::PI;

fn check_spacing(s: f64) -> Result<(), StatsError> {
    if s >= 0.0 {
        Ok(())
    } else {
        Err(StatsError::NegativeSpacing(s))
    }
}

/// `exp(-s)`.
pub fn pdf_poisson(s: f64) -> Result<f64, StatsError> {
    check_spacing(s)?;
    Ok((-s).exp())
}

/// Wigner surmise `(pi/2) s exp(-pi s^2 / 4)`.
pub fn pdf_goe(s: f64) -> Result<f64, StatsError> {
    check_spacing(s)?;
    Ok(0.5 * PI * s * (-0.25 * PI * s * s).exp())
}

fn berry_robnik(s: f64, rho1: f64) -> f64 {
    let rho2 = 1.0 - rho1;
    let first = rho1 * rho1 * (-rho1 * s).exp() * libm::erfc(0.5 * PI.sqrt() * rho2 * s);
    let second = (2.0 * rho1 * rho2 + 0.5 * PI * rho2.powi(3) * s) * (-rho1 * s - 0.25 * PI * rho2 * rho2 * s * s).exp();
    first + second
}

/// Berry-Robnik spacing density for a Poisson fraction `rho1` and a GOE
/// fraction `1 - rho1`.
pub fn pdf_berry_robnik(s: f64, rho1: f64) -> Result<f64, StatsError> {
    check_spacing(s)?;
    if !(0.0..=1.0).contains(&rho1) {
        return Err(StatsError::InvalidRho(rho1));
    }
    Ok(berry_robnik(s, rho1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub bootstrap_resamples: usize,
    pub seed: u64,
    /// Golden-section tolerance on `rho1`.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bootstrap_resamples: 1000,
            seed: 0x5eed,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub rho1: f64,
    /// Bootstrap standard deviation of the estimate.
    pub std_error: f64,
    pub log_likelihood: f64,
    pub spacings: usize,
}

impl FitResult {
    pub fn rho2(&self) -> f64 {
        1.0 - self.rho1
    }
}

pub const MIN_SPACINGS: usize = 100;

fn log_likelihood(spacings: &[f64], rho1: f64) -> f64 {
    spacings
        .iter()
        .map(|&s| berry_robnik(s, rho1).max(f64::MIN_POSITIVE).ln())
        .sum()
}

/// Maximizes `f` on `[a, b]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // the maximum may sit on the boundary of [0, 1]
    [mid, 0.0, 1.0]
        .into_iter()
        .map(|x| (x, f(x)))
        .fold((mid, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0
}

fn point_estimate(spacings: &[f64], tol: f64) -> f64 {
    golden_max(|r| log_likelihood(spacings, r), 0.0, 1.0, tol)
}

/// Maximum-likelihood `rho1` of the Berry-Robnik distribution. Spacings are
/// rescaled to unit mean first; the standard error comes from a seeded
/// nonparametric bootstrap.
pub fn fit_rho1(sample: &SpacingSample, options: &FitOptions) -> Result<FitResult, StatsError> {
    if sample.len() < MIN_SPACINGS {
        return Err(StatsError::TooFewSpacings {
            needed: MIN_SPACINGS,
            got: sample.len(),
        });
    }
    let first = sample.0[0];
    if sample.0.iter().all(|&s| s == first) {
        return Err(StatsError::DegenerateSample);
    }
    let s = sample.normalized().0;
    let rho1 = point_estimate(&s, options.tolerance);
    let log_likelihood = log_likelihood(&s, rho1);

    let n = s.len();
    let estimates: Vec<f64> = (0..options.bootstrap_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(i as u64);
            let resample: Vec<f64> = (0..n).map(|_| s[rng.random_range(0..n)]).collect();
            let m = resample.iter().sum::<f64>() / n as f64;
            let resample: Vec<f64> = resample.iter().map(|x| x / m).collect();
            point_estimate(&resample, options.tolerance)
        })
        .collect();
    let std_error = if estimates.len() > 1 {
        let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
        let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (estimates.len() - 1) as f64;
        var.sqrt()
    } else {
        f64::NAN
    };
    Ok(FitResult {
        rho1,
        std_error,
        log_likelihood,
        spacings: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * i as f64);
        }
        acc * h / 3.0
    }

    #[test]
    fn limits() {
        assert_eq!(pdf_poisson(0.0).unwrap(), 1.0);
        assert_eq!(pdf_goe(0.0).unwrap(), 0.0);
        assert!(pdf_poisson(-1.0).is_err());
        for s in [0.0, 0.3, 1.0, 2.7] {
            assert!((pdf_berry_robnik(s, 1.0).unwrap() - pdf_poisson(s).unwrap()).abs() < 1e-15);
            assert!((pdf_berry_robnik(s, 0.0).unwrap() - pdf_goe(s).unwrap()).abs() < 1e-15);
        }
        assert!((pdf_berry_robnik(0.0, 0.5).unwrap() - 0.75).abs() < 1e-15);
        assert!(pdf_berry_robnik(0.5, 1.2).is_err());
    }

    #[test]
    fn normalization_and_mean() {
        assert!((simpson(|s| pdf_poisson(s).unwrap(), 0.0, 60.0, 60_000) - 1.0).abs() < 1e-8);
        assert!((simpson(|s| pdf_goe(s).unwrap(), 0.0, 60.0, 60_000) - 1.0).abs() < 1e-8);
        for rho in [0.0, 0.1, 0.37, 0.5, 0.8, 1.0] {
            let norm = simpson(|s| berry_robnik(s, rho), 0.0, 60.0, 60_000);
            let mean = simpson(|s| s * berry_robnik(s, rho), 0.0, 60.0, 60_000);
            assert!((norm - 1.0).abs() < 1e-6, "rho {rho}: {norm}");
            assert!((mean - 1.0).abs() < 1e-6, "rho {rho}: {mean}");
        }
    }

    #[test]
    fn golden_section_finds_interior_and_boundary() {
        assert!((golden_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 1e-9) - 0.3).abs() < 1e-8);
        assert_eq!(golden_max(|x| x, 0.0, 1.0, 1e-9), 1.0);
    }

    #[test]
    fn rejects_small_and_degenerate() {
        let small = SpacingSample(vec![1.0; 10]);
        assert!(matches!(fit_rho1(&small, &FitOptions::default()), Err(StatsError::TooFewSpacings { .. })));
        let flat = SpacingSample(vec![1.0; 200]);
        assert_eq!(fit_rho1(&flat, &FitOptions::default()), Err(StatsError::DegenerateSample));
    }
}
