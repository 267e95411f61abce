//! Spectral statistics: unfolding, nearest-neighbour spacings, Berry-Robnik
//! fits and spectral rigidity.

pub mod ensembles;
pub mod nnsd;
pub mod rigidity;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use nnsd::{fit_rho1, pdf_berry_robnik, pdf_goe, pdf_poisson, FitOptions, FitResult};
pub use rigidity::{
    delta3_br, delta3_curve, delta3_empirical, delta3_goe, delta3_goe_asymptotic, delta3_poisson, RigidityCurve,
    RigidityPoint,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("levels are not sorted ascending (index {0})")]
    Unsorted(usize),
    #[error("total length must be finite and > 0, got {0}")]
    InvalidLength(f64),
    #[error("spacing must be >= 0, got {0}")]
    NegativeSpacing(f64),
    #[error("rho1 must lie in [0, 1], got {0}")]
    InvalidRho(f64),
    #[error("need at least {needed} spacings, got {got}")]
    TooFewSpacings { needed: usize, got: usize },
    #[error("spacing sample is degenerate (all spacings equal)")]
    DegenerateSample,
    #[error("window length {window} exceeds spectrum span {span}")]
    WindowTooLong { window: f64, span: f64 },
    #[error("window length and step must be > 0")]
    InvalidWindow,
}

/// Dimensionless levels with unit mean spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldedSpectrum {
    pub levels: Vec<f64>,
    /// Total edge length used for the Weyl term, meters.
    pub total_length: f64,
}

impl UnfoldedSpectrum {
    /// Wraps levels that are already unfolded (e.g. synthetic data).
    pub fn from_levels(levels: Vec<f64>) -> Result<Self, StatsError> {
        check_sorted(&levels)?;
        Ok(Self {
            levels,
            total_length: f64::NAN,
        })
    }

    pub fn span(&self) -> f64 {
        match (self.levels.first(), self.levels.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn spacings(&self) -> SpacingSample {
        SpacingSample(self.levels.windows(2).map(|w| w[1] - w[0]).collect())
    }
}

/// Nearest-neighbour spacings `s_m = eps_{m+1} - eps_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingSample(pub Vec<f64>);

impl SpacingSample {
    pub fn new(spacings: Vec<f64>) -> Result<Self, StatsError> {
        if let Some(&s) = spacings.iter().find(|s| !(**s >= 0.0)) {
            return Err(StatsError::NegativeSpacing(s));
        }
        Ok(Self(spacings))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// Spacings rescaled to unit mean.
    pub fn normalized(&self) -> Self {
        let m = self.mean();
        Self(self.0.iter().map(|s| s / m).collect())
    }
}

fn check_sorted(levels: &[f64]) -> Result<(), StatsError> {
    match levels.windows(2).position(|w| !(w[1] >= w[0])) {
        Some(i) => Err(StatsError::Unsorted(i + 1)),
        None => Ok(()),
    }
}

/// Weyl unfolding `eps_m = (2 L / c) nu_m` of ascending frequencies in Hz.
pub fn unfold(frequencies: &[f64], total_length: f64) -> Result<UnfoldedSpectrum, StatsError> {
    if !(total_length.is_finite() && total_length > 0.0) {
        return Err(StatsError::InvalidLength(total_length));
    }
    check_sorted(frequencies)?;
    let scale = 2.0 * total_length / crate::SPEED_OF_LIGHT;
    Ok(UnfoldedSpectrum {
        levels: frequencies.iter().map(|nu| scale * nu).collect(),
        total_length,
    })
}

/// Normalized spacing histogram for display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// Bin centres.
    pub centers: Vec<f64>,
    /// Probability density per bin.
    pub density: Vec<f64>,
}

pub const DEFAULT_BIN_WIDTH: f64 = 0.25;

pub fn spacing_histogram(sample: &SpacingSample, bin_width: f64) -> Histogram {
    let max = sample.0.iter().copied().fold(0.0, f64::max);
    let bins = ((max / bin_width).floor() as usize + 1).max(1);
    let mut counts = vec![0usize; bins];
    for &s in &sample.0 {
        counts[((s / bin_width) as usize).min(bins - 1)] += 1;
    }
    let norm = sample.len().max(1) as f64 * bin_width;
    Histogram {
        bin_width,
        centers: (0..bins).map(|i| (i as f64 + 0.5) * bin_width).collect(),
        density: counts.iter().map(|&c| c as f64 / norm).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unfold_values() {
        let u = unfold(&[0.0, 1e9], 2.0).unwrap();
        assert_eq!(u.levels[0], 0.0);
        assert!((u.levels[1] - 4.0 / 299_792_458.0 * 1e9).abs() < 1e-12);
        assert!((u.levels[1] - 13.3426).abs() < 1e-4);
    }

    #[test]
    fn unfold_rejects_unsorted() {
        assert_eq!(unfold(&[2.0, 1.0], 1.0), Err(StatsError::Unsorted(1)));
        assert!(unfold(&[1.0], 0.0).is_err());
    }

    #[test]
    fn unfolding_is_linear() {
        let nu = [1e8, 2.5e8, 7e8];
        let alpha = 1.7;
        let scaled: Vec<f64> = nu.iter().map(|x| alpha * x).collect();
        let a = unfold(&scaled, 1.3).unwrap();
        let b = unfold(&nu, alpha * 1.3).unwrap();
        for (x, y) in a.levels.iter().zip(&b.levels) {
            assert!((x - y).abs() < 1e-12 * x.abs());
        }
    }

    #[test]
    fn histogram_integrates_to_one() {
        let s = SpacingSample::new(vec![0.1, 0.3, 0.9, 1.2, 2.6]).unwrap();
        let h = spacing_histogram(&s, 0.25);
        let total: f64 = h.density.iter().sum::<f64>() * h.bin_width;
        assert!((total - 1.0).abs() < 1e-12);
        assert!(SpacingSample::new(vec![-0.1]).is_err());
    }
}
