//! Synthetic reference spectra: Poisson, GOE and Berry-Robnik
//! superpositions, all with unit mean spacing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::rigidity::delta3_empirical;
use super::{StatsError, UnfoldedSpectrum};

/// Uncorrelated levels with mean spacing `1 / density`, starting near zero.
pub fn poisson_levels<R: Rng + ?Sized>(count: usize, density: f64, rng: &mut R) -> Vec<f64> {
    let mut x = 0.0;
    (0..count)
        .map(|_| {
            let step: f64 = Exp1.sample(rng);
            x += step / density;
            x
        })
        .collect()
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (`e.len() == d.len() - 1`), by implicit QL with Wilkinson
/// shifts. Returns `None` if an eigenvalue fails to converge.
pub fn tridiagonal_eigenvalues(d: &[f64], e: &[f64]) -> Option<Vec<f64>> {
    let n = d.len();
    let mut d = d.to_vec();
    let mut e: Vec<f64> = e.iter().copied().chain(std::iter::once(0.0)).collect();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 60 {
                return None;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Some(d)
}

/// Eigenvalues of an `n x n` GOE matrix from the tridiagonal model with
/// diagonal `N(0, 2)` and off-diagonal `chi_{n-i}`, both scaled by `1/sqrt 2`.
/// The density is the semicircle of radius `sqrt(2n)`.
fn goe_raw<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let scale = 0.5f64.sqrt();
    let d: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * 2f64.sqrt() * scale
        })
        .collect();
    let e: Vec<f64> = (1..n)
        .map(|i| ChiSquared::new((n - i) as f64).expect("positive dof").sample(rng).sqrt() * scale)
        .collect();
    tridiagonal_eigenvalues(&d, &e).expect("QL converges for GOE tridiagonals")
}

/// Integrated semicircle density of radius `r` holding `n` levels.
fn semicircle_count(x: f64, r: f64, n: f64) -> f64 {
    let t = (x / r).clamp(-1.0, 1.0);
    n / 2.0 + n / PI * (t * (1.0 - t * t).sqrt() + t.asin())
}

/// `count` consecutive unfolded GOE levels (unit mean spacing) taken from
/// the central half of the semicircle.
pub fn goe_levels<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<f64> {
    // the central half of the radius holds about 61% of the levels
    let n = (count as f64 / 0.55).ceil() as usize + 16;
    let r = (2.0 * n as f64).sqrt();
    let raw = goe_raw(n, rng);
    let central: Vec<f64> = raw
        .iter()
        .filter(|x| x.abs() < 0.5 * r)
        .map(|&x| semicircle_count(x, r, n as f64))
        .collect();
    let first = central[0];
    central.into_iter().take(count).map(|x| x - first).collect()
}

/// Superposition of independent Poisson (fraction `rho1`) and GOE
/// (fraction `1 - rho1`) sequences, `count` levels in total on average.
pub fn berry_robnik_levels<R: Rng + ?Sized>(count: usize, rho1: f64, rng: &mut R) -> Result<Vec<f64>, StatsError> {
    if !(0.0..=1.0).contains(&rho1) {
        return Err(StatsError::InvalidRho(rho1));
    }
    let span = count as f64;
    let rho2 = 1.0 - rho1;
    let mut levels = Vec::with_capacity(count + 16);
    if rho1 > 0.0 {
        let mut x = 0.0;
        loop {
            let step: f64 = Exp1.sample(rng);
            x += step / rho1;
            if x >= span {
                break;
            }
            levels.push(x);
        }
    }
    if rho2 > 0.0 {
        let needed = (rho2 * span).ceil() as usize + 2;
        let offset: f64 = rng.random::<f64>() / rho2;
        levels.extend(
            goe_levels(needed, rng)
                .into_iter()
                .map(|x| x / rho2 + offset)
                .filter(|&x| x < span),
        );
    }
    levels.sort_by(f64::total_cmp);
    Ok(levels)
}

/// Monte-Carlo mean and spread of the rigidity at one window length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidityBand {
    pub l: f64,
    pub mean: f64,
    /// Sample-to-sample standard deviation.
    pub std: f64,
}

/// Rigidity of `samples` Berry-Robnik spectra of `count` levels each.
/// Sample `i` uses stream `i` of a ChaCha generator seeded with `seed`.
pub fn rigidity_band(
    rho1: f64,
    count: usize,
    lengths: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<RigidityBand>, StatsError> {
    let per_sample: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let levels = berry_robnik_levels(count, rho1, &mut rng)?;
            let spectrum = UnfoldedSpectrum::from_levels(levels)?;
            lengths
                .iter()
                .map(|&l| delta3_empirical(&spectrum, l, 0.25 * l).map(|p| p.delta3))
                .collect()
        })
        .collect::<Result<_, StatsError>>()?;
    let n = samples as f64;
    Ok(lengths
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let mean = per_sample.iter().map(|v| v[j]).sum::<f64>() / n;
            let var = per_sample.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            RigidityBand {
                l,
                mean,
                std: var.sqrt(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::rigidity::{delta3_br, delta3_goe, delta3_poisson};
    use nalgebra::DMatrix;

    #[test]
    fn ql_matches_dense_symmetric_eigen() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 40;
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let e: Vec<f64> = (1..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = d[i];
            if i + 1 < n {
                m[(i, i + 1)] = e[i];
                m[(i + 1, i)] = e[i];
            }
        }
        let mut dense: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        let ql = tridiagonal_eigenvalues(&d, &e).unwrap();
        for (a, b) in dense.iter().zip(&ql) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn unfolded_samples_have_unit_spacing() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for levels in [
            poisson_levels(4000, 1.0, &mut rng),
            goe_levels(4000, &mut rng),
            berry_robnik_levels(4000, 0.4, &mut rng).unwrap(),
        ] {
            let mean = (levels[levels.len() - 1] - levels[0]) / (levels.len() - 1) as f64;
            assert!((mean - 1.0).abs() < 0.05, "{mean}");
        }
    }

    #[test]
    fn monte_carlo_rigidity_matches_formulas() {
        let lengths = [2.0, 8.0, 15.0];
        for (rho1, exact) in [
            (1.0, lengths.map(delta3_poisson)),
            (0.0, lengths.map(delta3_goe)),
            (0.5, lengths.map(|l| delta3_br(l, 0.5).unwrap())),
        ] {
            let band = rigidity_band(rho1, 1000, &lengths, 60, 3).unwrap();
            for (b, want) in band.iter().zip(exact) {
                let se = b.std / 60f64.sqrt();
                assert!((b.mean - want).abs() < 4.0 * se + 0.02 * want, "rho1 {rho1} L {}: {} vs {want}", b.l, b.mean);
            }
        }
    }
}
