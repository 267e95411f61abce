//! Gaussian pulses through a graph: frequency-domain synthesis of the output
//! trace and enumeration of the lead-to-lead walks that explain its peaks.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};
use thiserror::Error;

use crate::bonds::directed_bonds;
use crate::graph::MetricGraph;
use crate::scattering::{ScatteringError, ScatteringSystem};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeDomainError {
    #[error("pulse FWHM must be finite and > 0, got {0}")]
    InvalidWidth(f64),
    #[error("pulse amplitude must be finite and nonzero, got {0}")]
    InvalidAmplitude(f64),
    #[error("time step {dt} s exceeds FWHM/10 = {limit} s")]
    UnderSampled { dt: f64, limit: f64 },
    #[error("grid starts at {start} s, after t0 - 5 sigma = {limit} s")]
    GridStartsLate { start: f64, limit: f64 },
    #[error("grid needs at least 2 samples")]
    GridTooShort,
    #[error("response tail {tail:.3e} V exceeds {limit:.3e} V at the end of a {duration:.3e} s record")]
    RecordTooShort { tail: f64, limit: f64, duration: f64 },
    #[error("graph needs exactly 2 leads, has {0}")]
    LeadCount(usize),
    #[error("unknown lead `{0}`")]
    UnknownLead(String),
    #[error("path length bound must be finite and >= 0, got {0}")]
    InvalidBound(f64),
    #[error("no path groups to compare")]
    EmptyGroups,
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
}

/// `x(t) = A exp(-(t - t0)^2 / (2 sigma^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Volts.
    pub amplitude: f64,
    /// Seconds.
    pub fwhm: f64,
    /// Seconds.
    pub t0: f64,
}

impl PulseSpec {
    pub fn new(amplitude: f64, fwhm: f64, t0: f64) -> Result<Self, TimeDomainError> {
        if !(fwhm.is_finite() && fwhm > 0.0) {
            return Err(TimeDomainError::InvalidWidth(fwhm));
        }
        if !(amplitude.is_finite() && amplitude != 0.0) {
            return Err(TimeDomainError::InvalidAmplitude(amplitude));
        }
        Ok(Self { amplitude, fwhm, t0 })
    }

    pub fn sigma(&self) -> f64 {
        self.fwhm / (2.0 * (2.0 * LN_2).sqrt())
    }

    pub fn value(&self, t: f64) -> f64 {
        let s = self.sigma();
        self.amplitude * (-(t - self.t0).powi(2) / (2.0 * s * s)).exp()
    }

    /// Largest time step allowed by the `10 / FWHM` sample-rate rule.
    pub fn max_step(&self) -> f64 {
        self.fwhm / 10.0
    }
}

/// Empty lead-in before the pulse, in FWHM. With absorption the `sqrt(k)`
/// damping has no matching dispersion, so the response carries a small
/// acausal precursor decaying like `|t|^(-3/2)`; without a lead-in it wraps
/// onto the end of the record.
pub const PRE_ROLL: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub dt: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn duration(&self) -> f64 {
        self.dt * self.len as f64
    }

    /// Grid from `t0 - 6 sigma - PRE_ROLL * FWHM` with step `FWHM / 10`
    /// covering at least `duration` seconds after the pre-roll, rounded up to
    /// a power-of-two length.
    pub fn for_pulse(pulse: &PulseSpec, duration: f64) -> Self {
        let dt = pulse.max_step();
        let pre_roll = PRE_ROLL * pulse.fwhm;
        let len = (((duration + pre_roll) / dt).ceil() as usize).max(2).next_power_of_two();
        Self {
            start: pulse.t0 - 6.0 * pulse.sigma() - pre_roll,
            dt,
            len,
        }
    }
}

/// Uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTrace {
    pub start: f64,
    pub dt: f64,
    /// Volts.
    pub samples: Vec<f64>,
}

impl TimeTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + self.dt * i as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// `sum x^2 dt`, V^2 s.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() * self.dt
    }

    /// Linear interpolation; zero outside the record.
    pub fn value_at(&self, t: f64) -> f64 {
        let x = (t - self.start) / self.dt;
        if x < 0.0 || x > (self.len() - 1) as f64 {
            return 0.0;
        }
        let i = (x.floor() as usize).min(self.len() - 2);
        let f = x - i as f64;
        self.samples[i] * (1.0 - f) + self.samples[i + 1] * f
    }

    /// Local extrema of `|x|` at least `threshold` in magnitude, with the
    /// extremum refined by a parabola through the neighbouring samples.
    pub fn peaks(&self, threshold: f64) -> Vec<TracePeak> {
        let y = &self.samples;
        let mut out = Vec::new();
        for i in 1..y.len().saturating_sub(1) {
            let (a, b, c) = (y[i - 1].abs(), y[i].abs(), y[i + 1].abs());
            if b < threshold || !(b > a && b >= c) {
                continue;
            }
            let denom = y[i - 1] - 2.0 * y[i] + y[i + 1];
            let shift = if denom != 0.0 {
                (0.5 * (y[i - 1] - y[i + 1]) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            let value = y[i] - 0.25 * (y[i - 1] - y[i + 1]) * shift;
            out.push(TracePeak {
                time: self.time(i) + shift * self.dt,
                value,
                index: i,
            });
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePeak {
    pub time: f64,
    /// Signed peak value, volts.
    pub value: f64,
    /// Sample index of the extremum.
    pub index: usize,
}

/// Samples the pulse on `grid`.
pub fn gaussian_pulse(pulse: &PulseSpec, grid: &TimeGrid) -> Result<TimeTrace, TimeDomainError> {
    if grid.len < 2 {
        return Err(TimeDomainError::GridTooShort);
    }
    if !(grid.dt > 0.0 && grid.dt <= pulse.max_step()) {
        return Err(TimeDomainError::UnderSampled {
            dt: grid.dt,
            limit: pulse.max_step(),
        });
    }
    let limit = pulse.t0 - 5.0 * pulse.sigma();
    if grid.start > limit {
        return Err(TimeDomainError::GridStartsLate {
            start: grid.start,
            limit,
        });
    }
    Ok(TimeTrace {
        start: grid.start,
        dt: grid.dt,
        samples: (0..grid.len)
            .map(|i| pulse.value(grid.start + grid.dt * i as f64))
            .collect(),
    })
}

/// Fraction of the first positive bin frequency at which the DC transfer
/// value is evaluated.
pub const DC_FRACTION: f64 = 1e-3;
/// Relative spectral level below which pulse bins are dropped.
pub const SPECTRAL_CUTOFF: f64 = 1e-6;
/// Allowed response amplitude, relative to `A`, in the last tenth of the record.
pub const TAIL_LIMIT: f64 = 1e-4;

/// Output at the second lead for the pulse injected at the first.
///
/// The input trace is Fourier transformed, each retained positive-frequency
/// bin is multiplied by `conj(S21)` (the engine uses `e^{+ikx}` for a forward
/// wave, so the time factor is `e^{-i omega t}`), negative frequencies are
/// filled by Hermitian symmetry, and the result is transformed back. The DC
/// bin uses the real part of `S21` at `DC_FRACTION` of the first positive
/// bin frequency, where its phase is already negligible. Errors if the response has not
/// decayed below `TAIL_LIMIT * A` by the end of the record, since the
/// remainder would wrap around.
pub fn synthesize_output(
    graph: &MetricGraph,
    pulse: &PulseSpec,
    beta: f64,
    grid: &TimeGrid,
) -> Result<TimeTrace, TimeDomainError> {
    let leads = graph.leads().len();
    if leads != 2 {
        return Err(TimeDomainError::LeadCount(leads));
    }
    let input = gaussian_pulse(pulse, grid)?;
    let n = grid.len;
    let mut planner = FftPlanner::<f64>::new();
    let mut spectrum: Vec<Complex64> = input.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut spectrum);

    let half = n / 2;
    let peak = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let df = 1.0 / (n as f64 * grid.dt);
    let bins: Vec<usize> = (0..=half).filter(|&j| spectrum[j].norm() > SPECTRAL_CUTOFF * peak).collect();
    let system = ScatteringSystem::new(graph)?;
    let transfer: Vec<Complex64> = bins
        .par_iter()
        .map(|&j| {
            let k = if j == 0 {
                DC_FRACTION * 2.0 * PI * df / SPEED_OF_LIGHT
            } else {
                2.0 * PI * j as f64 * df / SPEED_OF_LIGHT
            };
            // a bin can land on an embedded bound state; step off it
            let s = system
                .smatrix(k, beta)
                .or_else(|_| system.smatrix(k * (1.0 + 1e-9), beta))?;
            Ok(if j == 0 {
                Complex64::new(s.s21.re, 0.0)
            } else {
                s.s21.conj()
            })
        })
        .collect::<Result<_, ScatteringError>>()?;

    let mut output = vec![Complex64::new(0.0, 0.0); n];
    for (&j, &h) in bins.iter().zip(&transfer) {
        output[j] = spectrum[j] * h;
        if j != 0 && j != n - j {
            output[n - j] = output[j].conj();
        }
    }
    if n % 2 == 0 {
        output[half].im = 0.0;
    }
    planner.plan_fft_inverse(n).process(&mut output);
    let samples: Vec<f64> = output.iter().map(|z| z.re / n as f64).collect();

    let limit = TAIL_LIMIT * pulse.amplitude.abs();
    let tail = samples[n - n / 10..].iter().map(|x| x.abs()).fold(0.0, f64::max);
    if tail > limit {
        return Err(TimeDomainError::RecordTooShort {
            tail,
            limit,
            duration: grid.duration(),
        });
    }
    Ok(TimeTrace {
        start: grid.start,
        dt: grid.dt,
        samples,
    })
}

/// Longest record tried by [`synthesize_auto`], in samples.
pub const MAX_RECORD: usize = 1 << 22;

/// [`synthesize_output`] on a [`TimeGrid::for_pulse`] grid, doubling the
/// record until the tail criterion holds or [`MAX_RECORD`] is reached.
/// The first record spans 20 transits of the total edge length.
pub fn synthesize_auto(graph: &MetricGraph, pulse: &PulseSpec, beta: f64) -> Result<TimeTrace, TimeDomainError> {
    let mut grid = TimeGrid::for_pulse(pulse, 20.0 * graph.total_length() / SPEED_OF_LIGHT + 12.0 * pulse.sigma());
    loop {
        match synthesize_output(graph, pulse, beta, &grid) {
            Err(TimeDomainError::RecordTooShort { .. }) if grid.len < MAX_RECORD => grid.len *= 2,
            other => return other,
        }
    }
}

/// A lead-to-lead walk over directed bonds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    /// Vertex names from the input-lead vertex to the output-lead vertex.
    pub vertices: Vec<String>,
    pub bonds: Vec<usize>,
    /// Meters.
    pub length: f64,
    /// Product of vertex coefficients: `2/d` on entry, exit and every
    /// transit, `2/d - 1` on every backscatter.
    pub amplitude: f64,
}

impl PathRecord {
    /// Vertex names concatenated, or joined by `-` if any name is longer
    /// than one character.
    pub fn label(&self) -> String {
        if self.vertices.iter().all(|v| v.chars().count() == 1) {
            self.vertices.concat()
        } else {
            self.vertices.join("-")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnumeration {
    pub paths: Vec<PathRecord>,
    /// Set when the node budget ran out before the search finished.
    pub partial: bool,
}

/// Default cap on depth-first search nodes.
pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

/// Lengths closer than this are one group, meters.
pub const GROUP_TOLERANCE: f64 = 1e-9;

/// All walks from `lead_in` to `lead_out` no longer than `max_length`
/// (plus [`GROUP_TOLERANCE`]) with nonzero amplitude, ordered by length and
/// then by vertex sequence.
pub fn enumerate_paths(
    graph: &MetricGraph,
    lead_in: &str,
    lead_out: &str,
    max_length: f64,
    node_budget: usize,
) -> Result<PathEnumeration, TimeDomainError> {
    if !(max_length.is_finite() && max_length >= 0.0) {
        return Err(TimeDomainError::InvalidBound(max_length));
    }
    let find = |id: &str| {
        graph
            .leads()
            .iter()
            .find(|l| l.id == id)
            .map(|l| l.vertex)
            .ok_or_else(|| TimeDomainError::UnknownLead(id.to_string()))
    };
    let (start, end) = (find(lead_in)?, find(lead_out)?);
    let bonds = directed_bonds(graph);
    let bound = max_length + GROUP_TOLERANCE;
    let factor = |v: usize| 2.0 / graph.degree(v) as f64;

    let mut search = Search {
        graph,
        bonds: &bonds,
        end,
        bound,
        budget: node_budget,
        visited: 0,
        partial: false,
        stack: Vec::new(),
        found: Vec::new(),
    };
    if start == end {
        search.record(start, 0.0, factor(start) * factor(end));
    }
    for &b in bonds.outgoing(start) {
        search.walk(b, 0.0, factor(start), start);
    }
    let partial = search.partial;
    let mut paths = search.found;
    paths.sort_by(|a, b| {
        a.length
            .total_cmp(&b.length)
            .then_with(|| a.vertices.cmp(&b.vertices))
            .then_with(|| a.bonds.cmp(&b.bonds))
    });
    Ok(PathEnumeration { paths, partial })
}

struct Search<'a> {
    graph: &'a MetricGraph,
    bonds: &'a crate::bonds::BondSystem,
    end: usize,
    bound: f64,
    budget: usize,
    visited: usize,
    partial: bool,
    stack: Vec<usize>,
    found: Vec<PathRecord>,
}

impl Search<'_> {
    fn record(&mut self, start: usize, length: f64, amplitude: f64) {
        let mut vertices = vec![self.graph.vertices()[start].clone()];
        vertices.extend(
            self.stack
                .iter()
                .map(|&b| self.graph.vertices()[self.bonds.bonds()[b].terminal].clone()),
        );
        self.found.push(PathRecord {
            vertices,
            bonds: self.stack.clone(),
            length,
            amplitude,
        });
    }

    fn walk(&mut self, bond: usize, length: f64, amplitude: f64, start: usize) {
        let b = self.bonds.bonds()[bond];
        let length = length + b.length;
        if length > self.bound || self.partial {
            return;
        }
        self.visited += 1;
        if self.visited > self.budget {
            self.partial = true;
            return;
        }
        self.stack.push(bond);
        let v = b.terminal;
        let d = self.graph.degree(v) as f64;
        if v == self.end {
            self.record(start, length, amplitude * 2.0 / d);
        }
        let back = self.bonds.reverse(bond);
        for &next in self.bonds.outgoing(v) {
            let coefficient = if next == back { 2.0 / d - 1.0 } else { 2.0 / d };
            if coefficient != 0.0 {
                self.walk(next, length, amplitude * coefficient, start);
            }
        }
        self.stack.pop();
    }
}

/// Paths sharing one total length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathGroup {
    pub length: f64,
    pub paths: Vec<PathRecord>,
    pub amplitude: f64,
}

impl PathGroup {
    /// Arrival delay `length / c`, seconds.
    pub fn delay(&self) -> f64 {
        self.length / SPEED_OF_LIGHT
    }
}

/// Groups length-sorted paths whose lengths agree within [`GROUP_TOLERANCE`].
pub fn group_paths(paths: &[PathRecord]) -> Vec<PathGroup> {
    let mut groups: Vec<PathGroup> = Vec::new();
    for p in paths {
        match groups.last_mut() {
            Some(g) if (p.length - g.length).abs() <= GROUP_TOLERANCE => {
                g.amplitude += p.amplitude;
                g.paths.push(p.clone());
            }
            _ => groups.push(PathGroup {
                length: p.length,
                paths: vec![p.clone()],
                amplitude: p.amplitude,
            }),
        }
    }
    groups
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakPrediction {
    pub length: f64,
    pub delay: f64,
    pub path_count: usize,
    /// Summed path amplitude, equal to output/input peak ratio for
    /// well-separated groups without dispersion.
    pub ratio: f64,
    /// `ratio * A`, volts.
    pub voltage: f64,
}

/// Predicted output peak for each group given the input amplitude.
pub fn predict_peak_ratios(groups: &[PathGroup], input_amplitude: f64) -> Result<Vec<PeakPrediction>, TimeDomainError> {
    if groups.is_empty() {
        return Err(TimeDomainError::EmptyGroups);
    }
    Ok(groups
        .iter()
        .map(|g| PeakPrediction {
            length: g.length,
            delay: g.delay(),
            path_count: g.paths.len(),
            ratio: g.amplitude,
            voltage: g.amplitude * input_amplitude,
        })
        .collect())
}

/// Ratio of summed amplitudes between two networks at every length present
/// in both.
pub fn cross_network_ratios(a: &[PathGroup], b: &[PathGroup]) -> Result<BTreeMap<u64, (f64, f64)>, TimeDomainError> {
    if a.is_empty() || b.is_empty() {
        return Err(TimeDomainError::EmptyGroups);
    }
    let mut out = BTreeMap::new();
    for ga in a {
        if let Some(gb) = b.iter().find(|gb| (gb.length - ga.length).abs() <= GROUP_TOLERANCE) {
            // keyed by length in nanometres for stable ordering
            out.insert((ga.length * 1e9).round() as u64, (ga.length, ga.amplitude / gb.amplitude));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{uniform_chain, MetricGraph};

    fn delay_line(length: f64) -> MetricGraph {
        MetricGraph::from_named(
            ["a", "b"],
            [("ab".into(), "a".into(), "b".into(), length)],
            [("in".into(), "a".into()), ("out".into(), "b".into())],
        )
        .unwrap()
    }

    #[test]
    fn pulse_shape() {
        let p = PulseSpec::new(0.41, 125e-12, 1e-9).unwrap();
        assert!((p.sigma() - 53.08e-12).abs() < 0.01e-12);
        assert_eq!(p.value(1e-9), 0.41);
        assert!((p.value(1e-9 + 62.5e-12) - 0.205).abs() < 1e-12);
        assert!(PulseSpec::new(0.0, 1.0, 0.0).is_err());
        assert!(PulseSpec::new(1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn grid_checks() {
        let p = PulseSpec::new(1.0, 125e-12, 1e-9).unwrap();
        let g = TimeGrid::for_pulse(&p, 5e-9);
        assert!(gaussian_pulse(&p, &g).is_ok());
        let coarse = TimeGrid { dt: 20e-12, ..g };
        assert!(matches!(gaussian_pulse(&p, &coarse), Err(TimeDomainError::UnderSampled { .. })));
        let late = TimeGrid { start: 0.9e-9, ..g };
        assert!(matches!(gaussian_pulse(&p, &late), Err(TimeDomainError::GridStartsLate { .. })));
    }

    #[test]
    fn delay_line_shifts_pulse() {
        let len = 0.6;
        let p = PulseSpec::new(0.41, 125e-12, 1e-9).unwrap();
        let grid = TimeGrid::for_pulse(&p, 12e-9);
        let out = synthesize_output(&delay_line(len), &p, 0.0, &grid).unwrap();
        let tau = len / SPEED_OF_LIGHT;
        for i in 0..out.len() {
            let t = out.time(i);
            assert!((out.samples[i] - p.value(t - tau)).abs() < 1e-6, "t = {t}");
        }
        let peak = out.peaks(0.1);
        assert_eq!(peak.len(), 1);
        assert!((peak[0].time - p.t0 - tau).abs() < 0.5 * grid.dt);
    }

    #[test]
    fn short_record_is_rejected() {
        let p = PulseSpec::new(1.0, 125e-12, 1e-9).unwrap();
        let grid = TimeGrid::for_pulse(&p, 2e-9);
        let g = uniform_chain(&[3, 4, 3], 0.25, 0.25).unwrap();
        assert!(matches!(
            synthesize_output(&g, &p, 0.0, &grid),
            Err(TimeDomainError::RecordTooShort { .. })
        ));
    }

    #[test]
    fn delay_line_has_one_path() {
        let e = enumerate_paths(&delay_line(0.6), "in", "out", 0.6, 1000).unwrap();
        assert_eq!(e.paths.len(), 1);
        assert_eq!(e.paths[0].label(), "ab");
        assert_eq!(e.paths[0].amplitude, 1.0);
        // degree-2 ends backscatter with coefficient 0, so nothing longer exists
        assert_eq!(enumerate_paths(&delay_line(0.6), "in", "out", 10.0, 1000).unwrap().paths.len(), 1);
    }

    #[test]
    fn chain_path_counts() {
        let l = 0.25;
        for (sizes, counts, first) in [([3, 4, 3], [1, 2, 7], "acdghj"), ([4, 3, 4], [1, 1, 7], "adeghk")] {
            let g = uniform_chain(&sizes, l, l).unwrap();
            let e = enumerate_paths(&g, "in", "out", 7.0 * l, DEFAULT_NODE_BUDGET).unwrap();
            assert!(!e.partial);
            let groups = group_paths(&e.paths);
            assert_eq!(groups.len(), 3);
            for (g, (n, mult)) in groups.iter().zip(counts.iter().zip([5.0, 6.0, 7.0])) {
                assert_eq!(g.paths.len(), *n);
                assert!((g.length - mult * l).abs() < 1e-12);
            }
            assert_eq!(groups[0].paths[0].label(), first);
            assert!((groups[0].amplitude - (2.0f64 / 3.0).powi(6)).abs() < 1e-15);
        }
    }

    #[test]
    fn node_budget_sets_partial_flag() {
        let g = uniform_chain(&[3, 4, 3], 0.25, 0.25).unwrap();
        let e = enumerate_paths(&g, "in", "out", 20.0, 50).unwrap();
        assert!(e.partial);
        assert!(enumerate_paths(&g, "in", "nope", 1.0, 50).is_err());
    }
}
