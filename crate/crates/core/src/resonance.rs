//! Transmission peaks: centre, full width at half maximum and height.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frequency_from_wavenumber;
use crate::scattering::SpectrumScan;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResonanceError {
    #[error("scan has {0} samples, need at least 3")]
    TooFewSamples(usize),
    #[error("prominence threshold must be finite and >= 0, got {0}")]
    InvalidProminence(f64),
}

/// A transmission peak. Widths below 3 grid steps are flagged because the
/// half-height interpolation is unreliable there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub center_hz: f64,
    /// Full width at half maximum, `2 * delta_nu`.
    pub fwhm_hz: f64,
    pub height: f64,
    pub center_k: f64,
    pub fwhm_k: f64,
    pub under_resolved: bool,
}

/// Height of a peak above the higher of the two valleys separating it from
/// taller neighbours (or the scan ends).
fn prominence(t: &[f64], i: usize) -> f64 {
    let peak = t[i];
    let mut left = peak;
    for &v in t[..i].iter().rev() {
        if v > peak {
            break;
        }
        left = left.min(v);
    }
    let mut right = peak;
    for &v in &t[i + 1..] {
        if v > peak {
            break;
        }
        right = right.min(v);
    }
    peak - left.max(right)
}

/// Walks from the peak until the curve drops below `half` and interpolates
/// the crossing. `None` if a taller point or the scan end is met first.
fn half_crossing(k: &[f64], t: &[f64], i: usize, half: f64, forward: bool) -> Option<f64> {
    let mut j = i;
    loop {
        let next = if forward {
            (j + 1 < t.len()).then_some(j + 1)?
        } else {
            j.checked_sub(1)?
        };
        if t[next] > t[i] {
            return None;
        }
        if t[next] < half {
            let outer = if forward {
                (next + 1 < t.len()).then_some(next + 1)
            } else {
                next.checked_sub(1)
            };
            return Some(match outer {
                Some(o) if t[o] <= t[next] => quadratic_crossing([k[j], k[next], k[o]], [t[j], t[next], t[o]], half),
                _ => k[j] + (t[j] - half) / (t[j] - t[next]) * (k[next] - k[j]),
            });
        }
        j = next;
    }
}

/// Local maxima of `T = |S12|` with at least `prominence` prominence.
/// Half maximum is half the peak height. Its crossings are bracketed by
/// samples and placed on a parabola through the bracket and the next sample
/// outwards (linear if that sample is missing or rising); peaks whose
/// crossings are not bracketed inside the scan are skipped. The centre and height come
/// from a parabola through the three samples around the maximum.
pub fn peak_analysis(scan: &SpectrumScan, prominence_threshold: f64) -> Result<Vec<Resonance>, ResonanceError> {
    if !(prominence_threshold.is_finite() && prominence_threshold >= 0.0) {
        return Err(ResonanceError::InvalidProminence(prominence_threshold));
    }
    let n = scan.samples.len();
    if n < 3 {
        return Err(ResonanceError::TooFewSamples(n));
    }
    let k = scan.wavenumbers();
    let t = scan.transmission();
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if !(t[i] > t[i - 1] && t[i] >= t[i + 1]) || prominence(&t, i) < prominence_threshold {
            continue;
        }
        let half = 0.5 * t[i];
        let (Some(lo), Some(hi)) = (half_crossing(&k, &t, i, half, false), half_crossing(&k, &t, i, half, true))
        else {
            continue;
        };
        let (center_k, height) = parabola_vertex([k[i - 1], k[i], k[i + 1]], [t[i - 1], t[i], t[i + 1]]);
        let step = 0.5 * (k[i + 1] - k[i - 1]);
        let fwhm_k = hi - lo;
        peaks.push(Resonance {
            center_hz: frequency_from_wavenumber(center_k),
            fwhm_hz: frequency_from_wavenumber(fwhm_k),
            height: height.clamp(t[i], 1.0f64.max(t[i])),
            center_k,
            fwhm_k,
            under_resolved: fwhm_k < 3.0 * step,
        });
    }
    Ok(peaks)
}

/// Crossing of `half` between `x[0]` and `x[1]` on the parabola through the
/// three points, by bisection (the samples bracket the crossing).
fn quadratic_crossing(x: [f64; 3], y: [f64; 3], half: f64) -> f64 {
    let p = |z: f64| {
        y[0] * (z - x[1]) * (z - x[2]) / ((x[0] - x[1]) * (x[0] - x[2]))
            + y[1] * (z - x[0]) * (z - x[2]) / ((x[1] - x[0]) * (x[1] - x[2]))
            + y[2] * (z - x[0]) * (z - x[1]) / ((x[2] - x[0]) * (x[2] - x[1]))
    };
    let (mut a, mut b) = (x[0], x[1]);
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if p(m) >= half {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d2 - d1) / (x[2] - x[0]);
    if a >= 0.0 {
        return (x[1], y[1]);
    }
    let b = d1 - a * (x[0] + x[1]);
    let xv = (-b / (2.0 * a)).clamp(x[0], x[2]);
    let yv = y[1] + (xv - x[1]) * (d1 + a * (xv - x[0]));
    (xv, yv.max(y[1]))
}
