use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, Context};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use qgraph::graph::{uniform_chain, MetricGraph};
use qgraph::io::export::{eigenvalues_csv, paths_csv, rigidity_csv, scan_csv, to_json, trace_pair_csv};
use qgraph::io::{parse_graph_file, read_touchstone, write_atomic, write_touchstone, DataFormat, FrequencyUnit};
use qgraph::io::{LinePlot, MeasuredTwoPort, Series};
use qgraph::oracles::{engine_s21, independent_solver, OracleError, PolygonKind};
use qgraph::resonance::peak_analysis;
use qgraph::scattering::{transmission_scan, ScatteringSystem};
use qgraph::spectrum::{closed_eigenvalues, EigenvalueList, SearchLimit, DEFAULT_TOLERANCE};
use qgraph::stats::ensembles::rigidity_band;
use qgraph::stats::{
    delta3_br, delta3_curve, delta3_goe, delta3_poisson, fit_rho1, pdf_berry_robnik, pdf_goe, pdf_poisson,
    spacing_histogram, unfold, FitOptions, FitResult,
};
use qgraph::timedomain::{
    enumerate_paths, gaussian_pulse, group_paths, synthesize_auto, synthesize_output, PulseSpec, TimeGrid,
};
use qgraph::SPEED_OF_LIGHT;

use crate::{Format, GraphArg, Output, Polygon};

pub enum Failure {
    /// Bad argument values; exit status 2.
    Usage(String),
    /// Anything that went wrong while computing or writing; exit status 1.
    Defect(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Defect(e.into())
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn load_graph(arg: &GraphArg) -> Result<(MetricGraph, f64)> {
    let bytes = std::fs::read(&arg.graph).with_context(|| format!("reading {}", arg.graph.display()))?;
    let graph = parse_graph_file(&bytes).with_context(|| format!("parsing {}", arg.graph.display()))?;
    let unit = match arg.unit_length {
        Some(u) if u.is_finite() && u > 0.0 => u,
        Some(u) => return Err(usage(format!("--unit-length must be > 0, got {u}"))),
        None => graph
            .min_edge_length()
            .ok_or_else(|| anyhow!("graph has no edges"))?,
    };
    Ok((graph, unit))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    write_atomic(path, contents.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Writes the selected format to `--out` or stdout and the plot, if asked.
fn emit(
    output: &Output,
    csv: impl FnOnce() -> String,
    json: impl FnOnce() -> String,
    plot: impl FnOnce() -> LinePlot,
) -> Result<()> {
    let body = match output.format {
        Format::Csv => csv(),
        Format::Json => json(),
    };
    match &output.out {
        Some(path) => write_file(path, &body)?,
        None => print!("{body}"),
    }
    if let Some(path) = &output.plot {
        write_file(path, &plot().render())?;
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(usage(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(usage(format!("--beta must be finite and >= 0, got {beta}")))
    }
}

#[allow(clippy::too_many_arguments)]
pub fn spectrum(
    arg: &GraphArg,
    kl_min: f64,
    kl_max: f64,
    points: usize,
    beta: f64,
    prominence: f64,
    touchstone: Option<&Path>,
    output: &Output,
) -> Result<()> {
    let (graph, unit) = load_graph(arg)?;
    check_positive("--kl-min", kl_min)?;
    check_beta(beta)?;
    if !(kl_max > kl_min && kl_max.is_finite()) {
        return Err(usage(format!("--kl-max must exceed --kl-min, got [{kl_min}, {kl_max}]")));
    }
    if points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let scan = transmission_scan(&graph, kl_min / unit, kl_max / unit, points, beta)?;
    let resonances = if scan.samples.len() >= 3 {
        peak_analysis(&scan, prominence)?
    } else {
        Vec::new()
    };
    emit(
        output,
        || scan_csv(&scan, unit),
        || {
            to_json(&json!({
                "unit_length_m": unit,
                "beta": beta,
                "max_unitarity_defect": scan.max_unitarity_defect(),
                "max_reciprocity_defect": scan.max_reciprocity_defect(),
                "resonances": resonances,
                "defects": scan.defects,
                "samples": scan.samples,
            }))
        },
        || {
            let kl: Vec<f64> = scan.samples.iter().map(|s| s.k * unit).collect();
            LinePlot {
                title: format!("Transmission, beta = {beta}"),
                x_label: "kl".into(),
                y_label: "|S21|".into(),
                series: vec![Series::new("T", &kl, &scan.transmission())],
            }
        },
    )?;
    if let Some(path) = touchstone {
        let data = MeasuredTwoPort::from_scan(&scan);
        write_file(path, &write_touchstone(&data, FrequencyUnit::GHz, DataFormat::Ri))?;
    }
    if let Some(first) = scan.defects.first() {
        return Err(Failure::Defect(anyhow!(
            "{} grid points failed, first at k = {}: {}",
            scan.defects.len(),
            first.k,
            first.message
        )));
    }
    Ok(())
}

fn weyl_deviation(list: &EigenvalueList, total_length: f64) -> (f64, f64) {
    // counting function minus the smooth Weyl term at each level
    let scale = total_length / PI;
    let dev: Vec<f64> = list
        .wavenumbers
        .iter()
        .enumerate()
        .map(|(i, &k)| (i + 1) as f64 - scale * k)
        .collect();
    let max = dev.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let mean = dev.iter().sum::<f64>() / dev.len().max(1) as f64;
    (max, mean)
}

fn levels(graph: &MetricGraph, count: usize) -> Result<EigenvalueList> {
    if count < 2 {
        return Err(usage("--levels must be at least 2"));
    }
    Ok(closed_eigenvalues(graph, 0.0, SearchLimit::Count(count), DEFAULT_TOLERANCE)?)
}

pub fn eigs(
    arg: &GraphArg,
    count: Option<usize>,
    k_max: Option<f64>,
    k_min: f64,
    tol: f64,
    output: &Output,
) -> Result<()> {
    let (graph, _) = load_graph(arg)?;
    if !(k_min.is_finite() && k_min >= 0.0) {
        return Err(usage(format!("--k-min must be >= 0, got {k_min}")));
    }
    check_positive("--tol", tol)?;
    let limit = match (count, k_max) {
        (Some(n), _) => SearchLimit::Count(n),
        (None, Some(k)) => {
            if !(k > k_min && k.is_finite()) {
                return Err(usage(format!("--k-max must exceed --k-min, got {k}")));
            }
            SearchLimit::MaxWavenumber(k)
        }
        (None, None) => return Err(usage("one of --count, --k-max is required")),
    };
    let list = closed_eigenvalues(&graph, k_min, limit, tol)?;
    let total = graph.total_length();
    let (max_dev, mean_dev) = weyl_deviation(&list, total);
    eprintln!(
        "{} levels, total length {total} m, counting-function offset mean {mean_dev:.3} max {max_dev:.3}",
        list.len()
    );
    emit(
        output,
        || eigenvalues_csv(&list, total),
        || {
            to_json(&json!({
                "total_length_m": total,
                "wavenumbers": list.wavenumbers,
                "frequencies_hz": list.frequencies(),
                "degeneracies": list.degeneracies,
            }))
        },
        || {
            let nu: Vec<f64> = list.frequencies().iter().map(|f| f * 1e-9).collect();
            let n: Vec<f64> = (1..=nu.len()).map(|m| m as f64).collect();
            let weyl: Vec<f64> = nu.iter().map(|f| 2.0 * total * f * 1e9 / SPEED_OF_LIGHT).collect();
            LinePlot {
                title: "Level counting function".into(),
                x_label: "frequency (GHz)".into(),
                y_label: "N".into(),
                series: vec![Series::new("N", &nu, &n), Series::new("Weyl", &nu, &weyl)],
            }
        },
    )
}

fn fit(graph: &MetricGraph, list: &EigenvalueList, bootstrap: usize, seed: u64) -> Result<FitResult> {
    let spectrum = unfold(&list.frequencies(), graph.total_length())?;
    let options = FitOptions {
        bootstrap_resamples: bootstrap,
        seed,
        ..FitOptions::default()
    };
    Ok(fit_rho1(&spectrum.spacings(), &options)?)
}

pub fn stats(arg: &GraphArg, count: usize, bootstrap: usize, bin_width: f64, seed: u64, output: &Output) -> Result<()> {
    let (graph, _) = load_graph(arg)?;
    check_positive("--bin-width", bin_width)?;
    let list = levels(&graph, count)?;
    let total = graph.total_length();
    let spacings = unfold(&list.frequencies(), total)?.spacings().normalized();
    let result = fit(&graph, &list, bootstrap, seed)?;
    let hist = spacing_histogram(&spacings, bin_width);
    let (max_dev, mean_dev) = weyl_deviation(&list, total);
    eprintln!(
        "rho1 = {:.4} +- {:.4} from {} spacings",
        result.rho1, result.std_error, result.spacings
    );
    let models = |s: f64| -> Result<(f64, f64, f64)> {
        Ok((pdf_poisson(s)?, pdf_goe(s)?, pdf_berry_robnik(s, result.rho1)?))
    };
    let rows: Vec<(f64, f64, (f64, f64, f64))> = hist
        .centers
        .iter()
        .zip(&hist.density)
        .map(|(&s, &d)| Ok((s, d, models(s)?)))
        .collect::<Result<_>>()?;
    let curve_s: Vec<f64> = (0..=200).map(|i| i as f64 * 0.02).collect();
    let curve: Vec<(f64, f64, f64)> = curve_s.iter().map(|&s| models(s)).collect::<Result<_>>()?;
    emit(
        output,
        || {
            let mut s = String::from("s,density,poisson,goe,berry_robnik\n");
            for (c, d, (p, g, b)) in &rows {
                let _ = writeln!(s, "{c},{d},{p},{g},{b}");
            }
            s
        },
        || {
            to_json(&json!({
                "levels": list.len(),
                "total_length_m": total,
                "k_range": [list.wavenumbers.first(), list.wavenumbers.last()],
                "fit": {
                    "rho1": result.rho1,
                    "rho2": result.rho2(),
                    "std_error": result.std_error,
                    "log_likelihood": result.log_likelihood,
                    "spacings": result.spacings,
                    "bootstrap_resamples": bootstrap,
                    "seed": seed,
                },
                "weyl": { "max_deviation": max_dev, "mean_offset": mean_dev },
                "histogram": hist,
                "degeneracies": list.degeneracies,
            }))
        },
        || {
            let centers: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let density: Vec<f64> = rows.iter().map(|r| r.1).collect();
            LinePlot {
                title: format!("Spacing distribution, rho1 = {:.3}", result.rho1),
                x_label: "s".into(),
                y_label: "P(s)".into(),
                series: vec![
                    Series::new("histogram", &centers, &density),
                    Series::new("Poisson", &curve_s, &curve.iter().map(|c| c.0).collect::<Vec<_>>()),
                    Series::new("GOE", &curve_s, &curve.iter().map(|c| c.1).collect::<Vec<_>>()),
                    Series::new("Berry-Robnik", &curve_s, &curve.iter().map(|c| c.2).collect::<Vec<_>>()),
                ],
            }
        },
    )
}

pub fn delta3(
    arg: &GraphArg,
    count: usize,
    (l_min, l_max, l_step): (f64, f64, f64),
    rho1: Option<f64>,
    samples: usize,
    seed: u64,
    output: &Output,
) -> Result<()> {
    let (graph, _) = load_graph(arg)?;
    check_positive("--l-min", l_min)?;
    check_positive("--l-step", l_step)?;
    if !(l_max >= l_min && l_max.is_finite()) {
        return Err(usage(format!("--l-max must be >= --l-min, got {l_max}")));
    }
    if let Some(r) = rho1 {
        if !(0.0..=1.0).contains(&r) {
            return Err(usage(format!("--rho1 must lie in [0, 1], got {r}")));
        }
    }
    let steps = ((l_max - l_min) / l_step + 1e-9).floor() as usize;
    let lengths: Vec<f64> = (0..=steps).map(|i| l_min + i as f64 * l_step).collect();
    let list = levels(&graph, count)?;
    let spectrum = unfold(&list.frequencies(), graph.total_length())?;
    let (rho1, source) = match rho1 {
        Some(r) => (r, "given"),
        None => (fit(&graph, &list, 0, seed)?.rho1, "fitted"),
    };
    let curve = delta3_curve(&spectrum, &lengths)?;
    let model: Vec<f64> = lengths.iter().map(|&l| delta3_br(l, rho1)).collect::<std::result::Result<_, _>>()?;
    let bands = if samples > 1 {
        Some(rigidity_band(rho1, list.len(), &lengths, samples, seed)?)
    } else {
        None
    };
    let outside = bands.as_ref().map(|b| {
        curve
            .points
            .iter()
            .zip(b)
            .filter(|(p, b)| (p.delta3 - b.mean).abs() > 3.0 * b.std)
            .count()
    });
    eprintln!(
        "rho1 = {rho1:.4} ({source}); {}",
        match outside {
            Some(n) => format!("{n} of {} points outside the 3-sigma band", lengths.len()),
            None => "no Monte-Carlo band".into(),
        }
    );
    emit(
        output,
        || rigidity_csv(&curve, &model, bands.as_deref()),
        || {
            let points: Vec<_> = curve
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let band = bands.as_ref().map(|b| b[i]);
                    json!({
                        "l": p.l,
                        "delta3": p.delta3,
                        "std_error": p.std_error,
                        "windows": p.windows,
                        "berry_robnik": model[i],
                        "goe": delta3_goe(p.l),
                        "poisson": delta3_poisson(p.l),
                        "band_mean": band.map(|b| b.mean),
                        "band_std": band.map(|b| b.std),
                    })
                })
                .collect();
            to_json(&json!({
                "levels": list.len(),
                "rho1": rho1,
                "rho1_source": source,
                "band_samples": samples,
                "seed": seed,
                "points_outside_3sigma": outside,
                "points": points,
            }))
        },
        || {
            let emp: Vec<f64> = curve.points.iter().map(|p| p.delta3).collect();
            let goe: Vec<f64> = lengths.iter().map(|&l| delta3_goe(l)).collect();
            let poisson: Vec<f64> = lengths.iter().map(|&l| delta3_poisson(l)).collect();
            LinePlot {
                title: format!("Spectral rigidity, rho1 = {rho1:.3}"),
                x_label: "L".into(),
                y_label: "Delta3".into(),
                series: vec![
                    Series::new("graph", &lengths, &emp),
                    Series::new("Berry-Robnik", &lengths, &model),
                    Series::new("GOE", &lengths, &goe),
                    Series::new("Poisson", &lengths, &poisson),
                ],
            }
        },
    )
}

pub fn pulse(
    arg: &GraphArg,
    amplitude: f64,
    fwhm: f64,
    beta: f64,
    duration: Option<f64>,
    threshold: f64,
    output: &Output,
) -> Result<()> {
    let (graph, unit) = load_graph(arg)?;
    check_beta(beta)?;
    let spec = PulseSpec::new(amplitude, fwhm, 0.0).map_err(|e| usage(e.to_string()))?;
    let out = match duration {
        Some(d) => {
            check_positive("--duration", d)?;
            synthesize_output(&graph, &spec, beta, &TimeGrid::for_pulse(&spec, d))?
        }
        None => synthesize_auto(&graph, &spec, beta)?,
    };
    let grid = TimeGrid {
        start: out.start,
        dt: out.dt,
        len: out.len(),
    };
    let input = gaussian_pulse(&spec, &grid)?;
    let peaks = out.peaks(threshold * amplitude.abs());
    emit(
        output,
        || trace_pair_csv(&input, &out),
        || {
            let peaks: Vec<_> = peaks
                .iter()
                .map(|p| {
                    json!({
                        "time_s": p.time,
                        "volts": p.value,
                        "ratio": p.value / amplitude,
                        "delay_over_unit": p.time * SPEED_OF_LIGHT / unit,
                    })
                })
                .collect();
            to_json(&json!({
                "pulse": spec,
                "beta": beta,
                "unit_length_m": unit,
                "dt_s": out.dt,
                "samples": out.len(),
                "input_energy": input.energy(),
                "output_energy": out.energy(),
                "peaks": peaks,
            }))
        },
        || {
            let t: Vec<f64> = out.times().iter().map(|t| t * 1e9).collect();
            // the response is long; show the window holding the listed peaks
            let last = peaks.last().map_or(out.len(), |p| (p.index * 5 / 4 + 10).min(out.len()));
            LinePlot {
                title: format!("Pulse response, beta = {beta}"),
                x_label: "t (ns)".into(),
                y_label: "U (V)".into(),
                series: vec![
                    Series::new("input", &t[..last], &input.samples[..last]),
                    Series::new("output", &t[..last], &out.samples[..last]),
                ],
            }
        },
    )
}

/// `7l` in units of `unit`, or meters with an optional `m` suffix.
fn parse_length(s: &str, unit: f64) -> Option<f64> {
    let s = s.trim();
    let v = if let Some(n) = s.strip_suffix('l') {
        n.trim().parse::<f64>().ok()? * unit
    } else {
        s.strip_suffix('m').unwrap_or(s).trim().parse::<f64>().ok()?
    };
    (v.is_finite() && v >= 0.0).then_some(v)
}

pub fn paths(
    arg: &GraphArg,
    max_length: &str,
    lead_in: Option<String>,
    lead_out: Option<String>,
    budget: usize,
    output: &Output,
) -> Result<()> {
    let (graph, unit) = load_graph(arg)?;
    let bound = parse_length(max_length, unit)
        .ok_or_else(|| usage(format!("--max-length: expected meters or `<n>l`, got `{max_length}`")))?;
    let lead = |given: Option<String>, i: usize| -> Result<String> {
        given
            .or_else(|| graph.leads().get(i).map(|l| l.id.clone()))
            .ok_or_else(|| Failure::Defect(anyhow!("graph has fewer than two leads")))
    };
    let (lead_in, lead_out) = (lead(lead_in, 0)?, lead(lead_out, 1)?);
    let found = enumerate_paths(&graph, &lead_in, &lead_out, bound, budget)?;
    let groups = group_paths(&found.paths);
    for g in &groups {
        eprintln!(
            "{:>6.3}l  {:>4} paths  amplitude {:+.5}",
            g.length / unit,
            g.paths.len(),
            g.amplitude
        );
    }
    emit(
        output,
        || paths_csv(&found.paths, unit),
        || {
            let groups: Vec<_> = groups
                .iter()
                .map(|g| {
                    json!({
                        "length_m": g.length,
                        "length_over_unit": g.length / unit,
                        "delay_s": g.delay(),
                        "amplitude": g.amplitude,
                        "paths": g.paths.iter().map(|p| json!({"path": p.label(), "amplitude": p.amplitude})).collect::<Vec<_>>(),
                    })
                })
                .collect();
            to_json(&json!({
                "lead_in": lead_in,
                "lead_out": lead_out,
                "unit_length_m": unit,
                "max_length_m": bound,
                "partial": found.partial,
                "groups": groups,
            }))
        },
        || {
            // one stem per group
            let mut x = Vec::new();
            let mut y = Vec::new();
            for g in &groups {
                let at = g.length / unit;
                x.extend([at, at, f64::NAN]);
                y.extend([0.0, g.amplitude, f64::NAN]);
            }
            LinePlot {
                title: "Summed path amplitude".into(),
                x_label: "length / l".into(),
                y_label: "amplitude".into(),
                series: vec![Series::new("groups", &x, &y)],
            }
        },
    )?;
    if found.partial {
        return Err(Failure::Defect(anyhow!(
            "search budget of {budget} nodes exhausted; the path list is incomplete"
        )));
    }
    Ok(())
}

pub fn compare(arg: &GraphArg, measured: &Path, beta: f64, prominence: f64, output: &Output) -> Result<()> {
    let (graph, _) = load_graph(arg)?;
    check_beta(beta)?;
    let bytes = std::fs::read(measured).with_context(|| format!("reading {}", measured.display()))?;
    let data = read_touchstone(&bytes).with_context(|| format!("parsing {}", measured.display()))?;
    let report = qgraph::io::compare(&data, &graph, beta, prominence)?;
    eprintln!(
        "{} frequencies, RMS |S21| residual {:.3e}, {} matched peaks",
        report.residuals.len(),
        report.rms,
        report.peak_offsets.len()
    );
    emit(
        output,
        || {
            let mut s = String::from("nu_hz,measured,simulated,residual\n");
            for r in &report.residuals {
                let _ = writeln!(s, "{},{},{},{}", r.frequency_hz, r.measured, r.simulated, r.residual);
            }
            s
        },
        || to_json(&report),
        || {
            let f: Vec<f64> = report.residuals.iter().map(|r| r.frequency_hz * 1e-9).collect();
            let m: Vec<f64> = report.residuals.iter().map(|r| r.measured).collect();
            let s: Vec<f64> = report.residuals.iter().map(|r| r.simulated).collect();
            LinePlot {
                title: format!("Measured and simulated, beta = {beta}"),
                x_label: "frequency (GHz)".into(),
                y_label: "|S21|".into(),
                series: vec![Series::new("measured", &f, &m), Series::new("simulated", &f, &s)],
            }
        },
    )
}

fn check_tolerance(max: f64, tolerance: Option<f64>) -> Result<()> {
    match tolerance {
        Some(tol) if !(max <= tol) => Err(Failure::Defect(anyhow!("deviation {max:e} exceeds tolerance {tol:e}"))),
        _ => Ok(()),
    }
}

pub fn oracle_polygon(polygon: Polygon, points: usize, length: f64, tolerance: Option<f64>, output: &Output) -> Result<()> {
    check_positive("--length", length)?;
    if points == 0 {
        return Err(usage("--points must be > 0"));
    }
    let (kind, n) = match polygon {
        Polygon::Triangle => (PolygonKind::Triangle, 3),
        Polygon::Square => (PolygonKind::Square, 4),
    };
    let system = ScatteringSystem::new(&uniform_chain(&[n], length, length)?)?;
    let mut rows = Vec::with_capacity(points);
    let mut skipped = 0;
    for i in 0..points {
        let kl = TAU * (i as f64 + 0.5) / points as f64;
        let oracle = match engine_s21(kind, kl) {
            Ok(t) => t,
            Err(OracleError::GuardBand(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let engine = system.smatrix(kl / length, 0.0)?.s21;
        rows.push((kl, engine, oracle, (engine - oracle).norm()));
    }
    let max = rows.iter().fold(0.0f64, |m, r| m.max(r.3));
    eprintln!("{} points ({skipped} in guard bands), max |S21 - t| = {max:e}", rows.len());
    emit(
        output,
        || {
            let mut s = String::from("kl,re_engine,im_engine,re_oracle,im_oracle,abs_diff\n");
            for (kl, e, o, d) in &rows {
                let _ = writeln!(s, "{kl},{},{},{},{},{d}", e.re, e.im, o.re, o.im);
            }
            s
        },
        || {
            to_json(&json!({
                "polygon": format!("{kind:?}"),
                "points": rows.len(),
                "skipped": skipped,
                "max_deviation": max,
            }))
        },
        || {
            let kl: Vec<f64> = rows.iter().map(|r| r.0).collect();
            LinePlot {
                title: format!("{kind:?}: engine and closed form"),
                x_label: "kl".into(),
                y_label: "|S21|".into(),
                series: vec![
                    Series::new("engine", &kl, &rows.iter().map(|r| r.1.norm()).collect::<Vec<_>>()),
                    Series::new("closed form", &kl, &rows.iter().map(|r| r.2.norm()).collect::<Vec<_>>()),
                ],
            }
        },
    )?;
    check_tolerance(max, tolerance)
}

pub fn oracle_graph(
    path: &Path,
    points: usize,
    beta: f64,
    k_max: f64,
    tolerance: Option<f64>,
    seed: u64,
    output: &Output,
) -> Result<()> {
    let (graph, _) = load_graph(&GraphArg {
        graph: path.to_path_buf(),
        unit_length: None,
    })?;
    check_beta(beta)?;
    check_positive("--k-max", k_max)?;
    let system = ScatteringSystem::new(&graph)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(points);
    let mut skipped = 0;
    for _ in 0..points {
        let k = rng.random_range(f64::EPSILON..k_max);
        let reference = match independent_solver(&graph, k, beta) {
            Ok(s) => s,
            Err(OracleError::NearDirichlet { .. } | OracleError::Singular(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let engine = system.smatrix(k, beta)?;
        let diff = engine
            .as_array()
            .iter()
            .flatten()
            .zip(reference.as_array().iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        rows.push((k, diff));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let max = rows.iter().fold(0.0f64, |m, r| m.max(r.1));
    eprintln!("{} points ({skipped} skipped), max entry deviation {max:e}", rows.len());
    emit(
        output,
        || {
            let mut s = String::from("k_rad_per_m,max_abs_diff\n");
            for (k, d) in &rows {
                let _ = writeln!(s, "{k},{d}");
            }
            s
        },
        || {
            to_json(&json!({
                "points": rows.len(),
                "skipped": skipped,
                "beta": beta,
                "seed": seed,
                "max_deviation": max,
            }))
        },
        || {
            let k: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let d: Vec<f64> = rows.iter().map(|r| r.1.max(1e-18).log10()).collect();
            LinePlot {
                title: "Engine against vertex-value solver".into(),
                x_label: "k (rad/m)".into(),
                y_label: "log10 max |dS|".into(),
                series: vec![Series::new("deviation", &k, &d)],
            }
        },
    )?;
    check_tolerance(max, tolerance)
}

#[cfg(test)]
mod tests {
    use super::parse_length;

    #[test]
    fn length_bounds() {
        assert_eq!(parse_length("7l", 0.25), Some(1.75));
        assert_eq!(parse_length("1.5m", 0.25), Some(1.5));
        assert_eq!(parse_length("2", 0.25), Some(2.0));
        assert_eq!(parse_length("-1", 0.25), None);
        assert_eq!(parse_length("x", 0.25), None);
    }
}
