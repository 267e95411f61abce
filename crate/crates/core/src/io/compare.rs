//! Measured versus simulated transmission.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::touchstone::MeasuredTwoPort;
use crate::graph::MetricGraph;
use crate::resonance::{peak_analysis, ResonanceError};
use crate::scattering::{scan_grid, ScatteringError, SpectrumScan, TwoPortScattering};
use crate::wavenumber_from_frequency;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompareError {
    #[error("measured and simulated frequency ranges do not overlap")]
    EmptyOverlap,
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
    #[error(transparent)]
    Resonance(#[from] ResonanceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub frequency_hz: f64,
    pub measured: f64,
    pub simulated: f64,
    /// `measured - simulated` in `|S21|`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakOffset {
    pub measured_hz: f64,
    pub simulated_hz: f64,
    /// `measured - simulated`.
    pub offset_hz: f64,
    pub measured_height: f64,
    pub simulated_height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub residuals: Vec<Residual>,
    pub rms: f64,
    pub peak_offsets: Vec<PeakOffset>,
}

/// Default prominence for peak matching.
pub const DEFAULT_PROMINENCE: f64 = 0.1;

fn as_scan(data: &MeasuredTwoPort, keep: impl Fn(f64) -> bool) -> SpectrumScan {
    SpectrumScan {
        beta: f64::NAN,
        samples: (0..data.len())
            .filter(|&i| keep(data.frequencies[i]))
            .map(|i| TwoPortScattering {
                k: wavenumber_from_frequency(data.frequencies[i]),
                s11: data.s11[i],
                s12: data.s12[i],
                s21: data.s21[i],
                s22: data.s22[i],
            })
            .collect(),
        defects: Vec::new(),
    }
}

fn interpolate(x: &[f64], y: &[f64], at: f64) -> f64 {
    let j = x.partition_point(|&v| v < at);
    if j == 0 {
        return y[0];
    }
    if j == x.len() {
        return y[x.len() - 1];
    }
    let f = (at - x[j - 1]) / (x[j] - x[j - 1]);
    y[j - 1] + f * (y[j] - y[j - 1])
}

/// `|S21|` residuals at the measured frequencies inside the common range
/// (simulated values interpolated linearly), their RMS, and the offset of
/// each measured peak from the nearest simulated peak.
pub fn compare_spectra(
    measured: &MeasuredTwoPort,
    simulated: &MeasuredTwoPort,
    prominence: f64,
) -> Result<CompareReport, CompareError> {
    if measured.is_empty() || simulated.is_empty() {
        return Err(CompareError::EmptyOverlap);
    }
    let lo = measured.frequencies[0].max(simulated.frequencies[0]);
    let hi = measured.frequencies[measured.len() - 1].min(simulated.frequencies[simulated.len() - 1]);
    let inside = |f: f64| f >= lo && f <= hi;
    let sim_t = simulated.transmission();
    let residuals: Vec<Residual> = (0..measured.len())
        .filter(|&i| inside(measured.frequencies[i]))
        .map(|i| {
            let f = measured.frequencies[i];
            let m = measured.s21[i].norm();
            let s = interpolate(&simulated.frequencies, &sim_t, f);
            Residual {
                frequency_hz: f,
                measured: m,
                simulated: s,
                residual: m - s,
            }
        })
        .collect();
    if residuals.is_empty() {
        return Err(CompareError::EmptyOverlap);
    }
    let rms = (residuals.iter().map(|r| r.residual * r.residual).sum::<f64>() / residuals.len() as f64).sqrt();

    let peaks = |d: &MeasuredTwoPort| -> Result<_, CompareError> {
        let scan = as_scan(d, inside);
        if scan.samples.len() < 3 {
            return Ok(Vec::new());
        }
        Ok(peak_analysis(&scan, prominence)?)
    };
    let sim_peaks = peaks(simulated)?;
    let peak_offsets = peaks(measured)?
        .into_iter()
        .filter_map(|m| {
            let s = sim_peaks
                .iter()
                .min_by(|a, b| (a.center_hz - m.center_hz).abs().total_cmp(&(b.center_hz - m.center_hz).abs()))?;
            Some(PeakOffset {
                measured_hz: m.center_hz,
                simulated_hz: s.center_hz,
                offset_hz: m.center_hz - s.center_hz,
                measured_height: m.height,
                simulated_height: s.height,
            })
        })
        .collect();
    Ok(CompareReport {
        residuals,
        rms,
        peak_offsets,
    })
}

/// Simulates `graph` at the measured positive frequencies and compares.
pub fn compare(
    measured: &MeasuredTwoPort,
    graph: &MetricGraph,
    beta: f64,
    prominence: f64,
) -> Result<CompareReport, CompareError> {
    let positive: Vec<f64> = measured.frequencies.iter().copied().filter(|&f| f > 0.0).collect();
    if positive.is_empty() {
        return Err(CompareError::EmptyOverlap);
    }
    let grid: Vec<f64> = positive.iter().map(|&f| wavenumber_from_frequency(f)).collect();
    let scan = scan_grid(graph, &grid, beta)?;
    let mut simulated = MeasuredTwoPort::from_scan(&scan);
    // samples keep their grid wave number exactly, so restore the measured
    // frequency instead of the rounded k -> nu conversion
    let mut j = 0;
    for (f, s) in simulated.frequencies.iter_mut().zip(&scan.samples) {
        while grid[j] != s.k {
            j += 1;
        }
        *f = positive[j];
    }
    compare_spectra(measured, &simulated, prominence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::uniform_chain;
    use crate::frequency_from_wavenumber;
    use crate::scattering::{transmission_scan, uniform_grid};

    fn chain() -> MetricGraph {
        uniform_chain(&[3, 4, 3], 0.25, 0.25).unwrap()
    }

    #[test]
    fn self_comparison_is_exact() {
        let scan = transmission_scan(&chain(), 2.0, 14.0, 3000, 0.0).unwrap();
        let data = MeasuredTwoPort::from_scan(&scan);
        let report = compare(&data, &chain(), 0.0, DEFAULT_PROMINENCE).unwrap();
        assert!(report.rms < 1e-12, "{}", report.rms);
        assert!(!report.peak_offsets.is_empty());
        for p in &report.peak_offsets {
            assert!(p.offset_hz.abs() < 1.0);
        }
    }

    #[test]
    fn absorption_lowers_peaks() {
        let lossless = MeasuredTwoPort::from_scan(&transmission_scan(&chain(), 7.0, 12.0, 4000, 0.0).unwrap());
        let lossy = MeasuredTwoPort::from_scan(&transmission_scan(&chain(), 7.0, 12.0, 4000, 0.009).unwrap());
        let report = compare_spectra(&lossy, &lossless, DEFAULT_PROMINENCE).unwrap();
        assert!(report.rms > 0.0);
        assert!(!report.peak_offsets.is_empty());
        for p in &report.peak_offsets {
            assert!(p.measured_height < p.simulated_height);
        }
    }

    #[test]
    fn known_shift_is_reported() {
        let shift_hz = 0.4e6;
        let grid = uniform_grid(7.0, 12.0, 6000);
        let simulated = MeasuredTwoPort::from_scan(&scan_grid(&chain(), &grid, 0.0).unwrap());
        let shifted_grid: Vec<f64> = grid
            .iter()
            .map(|&k| wavenumber_from_frequency(frequency_from_wavenumber(k) - shift_hz))
            .collect();
        let mut measured = MeasuredTwoPort::from_scan(&scan_grid(&chain(), &shifted_grid, 0.0).unwrap());
        measured.frequencies = simulated.frequencies.clone();
        let report = compare_spectra(&measured, &simulated, DEFAULT_PROMINENCE).unwrap();
        assert!(report.peak_offsets.len() >= 2);
        for p in &report.peak_offsets {
            assert!((p.offset_hz - shift_hz).abs() < 0.01 * shift_hz, "{}", p.offset_hz);
        }
    }

    #[test]
    fn disjoint_ranges() {
        let a = MeasuredTwoPort::from_scan(&transmission_scan(&chain(), 2.0, 3.0, 10, 0.0).unwrap());
        let b = MeasuredTwoPort::from_scan(&transmission_scan(&chain(), 4.0, 5.0, 10, 0.0).unwrap());
        assert_eq!(compare_spectra(&a, &b, 0.1), Err(CompareError::EmptyOverlap));
    }
}
