//! Touchstone v1 two-port (`.s2p`) files.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

use crate::scattering::SpectrumScan;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TouchstoneError {
    #[error("file is not UTF-8: {0}")]
    Utf8(String),
    #[error("line {line}: malformed option line: {message}")]
    OptionLine { line: usize, message: String },
    #[error("line {line}: `{token}` is not a number")]
    Number { line: usize, token: String },
    #[error("data holds {0} values, not a multiple of 9")]
    Incomplete(usize),
    #[error("frequencies must increase strictly (row {row}: {previous} Hz then {current} Hz)")]
    NonMonotone { row: usize, previous: f64, current: f64 },
    #[error("row {row}: non-finite S-parameter")]
    NonFinite { row: usize },
    #[error("measured data has no rows")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrequencyUnit {
    Hz,
    KHz,
    MHz,
    GHz,
}

impl FrequencyUnit {
    pub fn scale(self) -> f64 {
        match self {
            Self::Hz => 1.0,
            Self::KHz => 1e3,
            Self::MHz => 1e6,
            Self::GHz => 1e9,
        }
    }

    fn keyword(self) -> &'static str {
        match self {
            Self::Hz => "HZ",
            Self::KHz => "KHZ",
            Self::MHz => "MHZ",
            Self::GHz => "GHZ",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataFormat {
    /// Real and imaginary parts.
    Ri,
    /// Magnitude and angle in degrees.
    Ma,
    /// `20 log10` magnitude and angle in degrees.
    Db,
}

impl DataFormat {
    fn decode(self, a: f64, b: f64) -> Complex64 {
        match self {
            Self::Ri => Complex64::new(a, b),
            Self::Ma => Complex64::from_polar(a, b.to_radians()),
            Self::Db => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
        }
    }

    fn encode(self, z: Complex64) -> (f64, f64) {
        match self {
            Self::Ri => (z.re, z.im),
            Self::Ma => (z.norm(), z.arg().to_degrees()),
            Self::Db => (20.0 * z.norm().log10(), z.arg().to_degrees()),
        }
    }

    fn keyword(self) -> &'static str {
        match self {
            Self::Ri => "RI",
            Self::Ma => "MA",
            Self::Db => "DB",
        }
    }
}

/// Two-port S-parameters on a frequency list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredTwoPort {
    /// Hz, strictly increasing.
    pub frequencies: Vec<f64>,
    pub s11: Vec<Complex64>,
    pub s21: Vec<Complex64>,
    pub s12: Vec<Complex64>,
    pub s22: Vec<Complex64>,
    /// Ohms.
    pub impedance: f64,
}

impl MeasuredTwoPort {
    pub fn from_scan(scan: &SpectrumScan) -> Self {
        Self {
            frequencies: scan.samples.iter().map(|s| s.frequency()).collect(),
            s11: scan.samples.iter().map(|s| s.s11).collect(),
            s21: scan.samples.iter().map(|s| s.s21).collect(),
            s12: scan.samples.iter().map(|s| s.s12).collect(),
            s22: scan.samples.iter().map(|s| s.s22).collect(),
            impedance: 50.0,
        }
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// `|S21|` per frequency.
    pub fn transmission(&self) -> Vec<f64> {
        self.s21.iter().map(|z| z.norm()).collect()
    }
}

struct Options {
    unit: FrequencyUnit,
    format: DataFormat,
    impedance: f64,
}

fn parse_options(line: usize, text: &str) -> Result<Options, TouchstoneError> {
    let bad = |message: String| TouchstoneError::OptionLine { line, message };
    // defaults from the v1 format definition
    let mut options = Options {
        unit: FrequencyUnit::GHz,
        format: DataFormat::Ma,
        impedance: 50.0,
    };
    let mut tokens = text.split_whitespace();
    while let Some(token) = tokens.next() {
        match token.to_ascii_uppercase().as_str() {
            "HZ" => options.unit = FrequencyUnit::Hz,
            "KHZ" => options.unit = FrequencyUnit::KHz,
            "MHZ" => options.unit = FrequencyUnit::MHz,
            "GHZ" => options.unit = FrequencyUnit::GHz,
            "S" => {}
            "Y" | "Z" | "H" | "G" => return Err(bad(format!("only S parameters are supported, got `{token}`"))),
            "RI" => options.format = DataFormat::Ri,
            "MA" => options.format = DataFormat::Ma,
            "DB" => options.format = DataFormat::Db,
            "R" => {
                let value = tokens.next().ok_or_else(|| bad("`R` needs an impedance".into()))?;
                options.impedance = value
                    .parse()
                    .ok()
                    .filter(|z: &f64| z.is_finite() && *z > 0.0)
                    .ok_or_else(|| bad(format!("bad impedance `{value}`")))?;
            }
            _ => return Err(bad(format!("unknown token `{token}`"))),
        }
    }
    Ok(options)
}

/// Parses a Touchstone v1 `.s2p` file. Rows are `f S11 S21 S12 S22` as value
/// pairs in the declared format and may wrap across lines.
pub fn read_touchstone(bytes: &[u8]) -> Result<MeasuredTwoPort, TouchstoneError> {
    let text = std::str::from_utf8(bytes).map_err(|e| TouchstoneError::Utf8(e.to_string()))?;
    let mut options = None;
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            // only the first option line counts
            if options.is_none() {
                options = Some(parse_options(i + 1, rest)?);
            }
            continue;
        }
        for token in line.split_whitespace() {
            let x: f64 = token.parse().map_err(|_| TouchstoneError::Number {
                line: i + 1,
                token: token.to_string(),
            })?;
            values.push(x);
        }
    }
    let options = options.unwrap_or(Options {
        unit: FrequencyUnit::GHz,
        format: DataFormat::Ma,
        impedance: 50.0,
    });
    if values.is_empty() {
        return Err(TouchstoneError::Empty);
    }
    if values.len() % 9 != 0 {
        return Err(TouchstoneError::Incomplete(values.len()));
    }
    let rows = values.len() / 9;
    let mut out = MeasuredTwoPort {
        frequencies: Vec::with_capacity(rows),
        s11: Vec::with_capacity(rows),
        s21: Vec::with_capacity(rows),
        s12: Vec::with_capacity(rows),
        s22: Vec::with_capacity(rows),
        impedance: options.impedance,
    };
    for (row, chunk) in values.chunks(9).enumerate() {
        let f = chunk[0] * options.unit.scale();
        if let Some(&previous) = out.frequencies.last() {
            if !(f > previous) {
                return Err(TouchstoneError::NonMonotone {
                    row,
                    previous,
                    current: f,
                });
            }
        }
        let s: Vec<Complex64> = chunk[1..]
            .chunks(2)
            .map(|p| options.format.decode(p[0], p[1]))
            .collect();
        if s.iter().any(|z| !z.is_finite()) {
            return Err(TouchstoneError::NonFinite { row });
        }
        out.frequencies.push(f);
        out.s11.push(s[0]);
        out.s21.push(s[1]);
        out.s12.push(s[2]);
        out.s22.push(s[3]);
    }
    Ok(out)
}

/// Writes a Touchstone v1 file. Numbers use the shortest representation
/// that reads back to the same value.
pub fn write_touchstone(data: &MeasuredTwoPort, unit: FrequencyUnit, format: DataFormat) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "! two-port S-parameters");
    let _ = writeln!(out, "# {} S {} R {}", unit.keyword(), format.keyword(), data.impedance);
    for i in 0..data.len() {
        let _ = write!(out, "{:?}", data.frequencies[i] / unit.scale());
        for z in [data.s11[i], data.s21[i], data.s12[i], data.s22[i]] {
            let (a, b) = format.encode(z);
            let _ = write!(out, " {a:?} {b:?}");
        }
        out.push('\n');
    }
    out
}
