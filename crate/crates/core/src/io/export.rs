//! CSV and JSON exports and atomic file writes.
//!
//! Numbers are written by the `csv` serializer (shortest round-trip form,
//! `.` decimal separator regardless of locale).

use serde::Serialize;
use std::io::Write;
use std::path::Path;

use crate::scattering::SpectrumScan;
use crate::spectrum::EigenvalueList;
use crate::stats::ensembles::RigidityBand;
use crate::stats::RigidityCurve;
use crate::timedomain::{PathRecord, TimeTrace};
use crate::SPEED_OF_LIGHT;

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("in-memory CSV rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer flushes")).expect("CSV output is UTF-8")
}

#[derive(Serialize)]
struct ScanRow {
    k_rad_per_m: f64,
    kl_over_pi: f64,
    nu_hz: f64,
    re_s11: f64,
    im_s11: f64,
    re_s12: f64,
    im_s12: f64,
    re_s21: f64,
    im_s21: f64,
    re_s22: f64,
    im_s22: f64,
    #[serde(rename = "T")]
    t: f64,
}

/// One row per sample; `kl_over_pi` uses `reference_length`.
pub fn scan_csv(scan: &SpectrumScan, reference_length: f64) -> String {
    to_csv(scan.samples.iter().map(|s| ScanRow {
        k_rad_per_m: s.k,
        kl_over_pi: s.k * reference_length / std::f64::consts::PI,
        nu_hz: s.frequency(),
        re_s11: s.s11.re,
        im_s11: s.s11.im,
        re_s12: s.s12.re,
        im_s12: s.s12.im,
        re_s21: s.s21.re,
        im_s21: s.s21.im,
        re_s22: s.s22.re,
        im_s22: s.s22.im,
        t: s.transmission(),
    }))
}

#[derive(Serialize)]
struct TraceRow {
    t_seconds: f64,
    volts: f64,
}

pub fn trace_csv(trace: &TimeTrace) -> String {
    to_csv(trace.samples.iter().enumerate().map(|(i, &v)| TraceRow {
        t_seconds: trace.time(i),
        volts: v,
    }))
}

#[derive(Serialize)]
struct TracePairRow {
    t_seconds: f64,
    input_volts: f64,
    output_volts: f64,
}

/// Input and output traces on the same grid side by side.
pub fn trace_pair_csv(input: &TimeTrace, output: &TimeTrace) -> String {
    to_csv(output.samples.iter().enumerate().map(|(i, &v)| TracePairRow {
        t_seconds: output.time(i),
        input_volts: input.samples.get(i).copied().unwrap_or(0.0),
        output_volts: v,
    }))
}

#[derive(Serialize)]
struct EigenRow {
    m: usize,
    k_rad_per_m: f64,
    nu_hz: f64,
    epsilon: f64,
}

/// Levels with their Weyl-unfolded value `2 L nu / c`.
pub fn eigenvalues_csv(list: &EigenvalueList, total_length: f64) -> String {
    to_csv(list.wavenumbers.iter().enumerate().map(|(i, &k)| {
        let nu = crate::frequency_from_wavenumber(k);
        EigenRow {
            m: i + 1,
            k_rad_per_m: k,
            nu_hz: nu,
            epsilon: 2.0 * total_length * nu / SPEED_OF_LIGHT,
        }
    }))
}

#[derive(Serialize)]
struct PathRow {
    length_m: f64,
    length_over_unit: f64,
    delay_s: f64,
    amplitude: f64,
    path: String,
}

pub fn paths_csv(paths: &[PathRecord], unit_length: f64) -> String {
    to_csv(paths.iter().map(|p| PathRow {
        length_m: p.length,
        length_over_unit: p.length / unit_length,
        delay_s: p.length / SPEED_OF_LIGHT,
        amplitude: p.amplitude,
        path: p.label(),
    }))
}

#[derive(Serialize)]
struct RigidityRow {
    l: f64,
    delta3: f64,
    std_error: f64,
    windows: usize,
    model: f64,
    band_mean: Option<f64>,
    band_std: Option<f64>,
}

/// Empirical rigidity with a model column and optional Monte-Carlo band.
pub fn rigidity_csv(curve: &RigidityCurve, model: &[f64], bands: Option<&[RigidityBand]>) -> String {
    to_csv(curve.points.iter().enumerate().map(|(i, p)| RigidityRow {
        l: p.l,
        delta3: p.delta3,
        std_error: p.std_error,
        windows: p.windows,
        model: model.get(i).copied().unwrap_or(f64::NAN),
        band_mean: bands.and_then(|b| b.get(i)).map(|b| b.mean),
        band_std: bands.and_then(|b| b.get(i)).map(|b| b.std),
    }))
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("exports serialize to JSON");
    s.push('\n');
    s
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::uniform_chain;
    use crate::scattering::transmission_scan;

    #[test]
    fn scan_columns() {
        let scan = transmission_scan(&uniform_chain(&[3], 0.25, 0.25).unwrap(), 1.0, 4.0, 2, 0.0).unwrap();
        let csv = scan_csv(&scan, 0.25);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "k_rad_per_m,kl_over_pi,nu_hz,re_s11,im_s11,re_s12,im_s12,re_s21,im_s21,re_s22,im_s22,T"
        );
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(first.len(), 12);
        assert!(!csv.contains(';'));
    }

    #[test]
    fn trace_rows() {
        let t = TimeTrace {
            start: 0.0,
            dt: 1e-11,
            samples: vec![0.0, 0.5, -0.25],
        };
        let csv = trace_csv(&t);
        assert_eq!(csv.lines().next().unwrap(), "t_seconds,volts");
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(csv.lines().nth(3).unwrap().split(',').nth(1).unwrap(), "-0.25");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
