//! Loading and validating uniformly sampled GDP series.
//!
//! Input files are two-column CSVs (`date,value`). Dates are turned into
//! decimal years so that every downstream rate is per year: `1947Q3` becomes
//! `1947.5` (quarters are stamped at their start), `1800` becomes `1800.0`.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum number of samples in a [`TimeSeries`].
pub const MIN_SAMPLES: usize = 8;

/// Relative tolerance on sampling-step jitter.
pub const SPACING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("non-uniform spacing at sample {index}: step {step} differs from {expected}")]
    NonUniformSpacing {
        index: usize,
        step: f64,
        expected: f64,
    },
    #[error("times not strictly increasing at sample {index}")]
    NonIncreasingTimes { index: usize },
    #[error("non-positive level {value} at sample {index}")]
    NonPositiveValue { index: usize, value: f64 },
    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },
    #[error("series has {len} samples, at least {MIN_SAMPLES} required")]
    TooShort { len: usize },
    #[error("times and values differ in length ({times} vs {values})")]
    LengthMismatch { times: usize, values: usize },
    #[error("series is already log-transformed")]
    AlreadyLog,
    #[error("window {start}..{end} leaves {len} samples")]
    EmptyWindow { start: f64, end: f64, len: usize },
}

/// Whether values are GDP levels or their natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Level,
    LogLevel,
}

/// How the date column is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DateConvention {
    /// `1947.25`
    YearDecimal,
    /// `1947Q2`
    YearQuarter,
    /// `1947`
    YearOnly,
}

impl DateConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            DateConvention::YearDecimal => "year_decimal",
            DateConvention::YearQuarter => "year_quarter",
            DateConvention::YearOnly => "year_only",
        }
    }

    /// Parses one date field into decimal years.
    pub fn parse_date(self, field: &str) -> Result<f64, String> {
        let field = field.trim();
        match self {
            DateConvention::YearDecimal => field
                .parse::<f64>()
                .ok()
                .filter(|t| t.is_finite())
                .ok_or_else(|| format!("'{field}' is not a decimal year")),
            DateConvention::YearOnly => field
                .parse::<i32>()
                .map(f64::from)
                .map_err(|_| format!("'{field}' is not a year")),
            DateConvention::YearQuarter => {
                let (year, quarter) = field
                    .split_once(['Q', 'q'])
                    .ok_or_else(|| format!("'{field}' is not of the form YYYYQn"))?;
                let year: i32 = year
                    .trim_end_matches('-')
                    .parse()
                    .map_err(|_| format!("bad year in '{field}'"))?;
                let quarter: u8 = quarter
                    .parse()
                    .ok()
                    .filter(|q| (1..=4).contains(q))
                    .ok_or_else(|| format!("bad quarter in '{field}'"))?;
                Ok(f64::from(year) + f64::from(quarter - 1) * 0.25)
            }
        }
    }

    /// Inverse of [`parse_date`](Self::parse_date) for canonical times.
    pub fn format_date(self, time: f64) -> String {
        match self {
            DateConvention::YearDecimal => format!("{time}"),
            DateConvention::YearOnly => format!("{}", time.round() as i64),
            DateConvention::YearQuarter => {
                let quarters = (time * 4.0).round() as i64;
                format!("{}Q{}", quarters.div_euclid(4), quarters.rem_euclid(4) + 1)
            }
        }
    }
}

impl FromStr for DateConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "year_decimal" => Ok(DateConvention::YearDecimal),
            "year_quarter" => Ok(DateConvention::YearQuarter),
            "year_only" => Ok(DateConvention::YearOnly),
            other => Err(format!(
                "unknown date convention '{other}' (expected year_only, year_quarter or year_decimal)"
            )),
        }
    }
}

impl fmt::Display for DateConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A uniformly sampled series on a decimal-year time axis.
///
/// Construction goes through [`TimeSeries::new`], which enforces strictly
/// increasing, uniformly spaced times, at least [`MIN_SAMPLES`] finite values,
/// and positive values for level series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    kind: SeriesKind,
    label: String,
}

impl TimeSeries {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        kind: SeriesKind,
        label: impl Into<String>,
    ) -> Result<Self, IngestError> {
        if times.len() != values.len() {
            return Err(IngestError::LengthMismatch {
                times: times.len(),
                values: values.len(),
            });
        }
        if times.len() < MIN_SAMPLES {
            return Err(IngestError::TooShort { len: times.len() });
        }
        for (index, (t, v)) in times.iter().zip(&values).enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(IngestError::NonFinite { index });
            }
            if kind == SeriesKind::Level && *v <= 0.0 {
                return Err(IngestError::NonPositiveValue { index, value: *v });
            }
        }
        let expected = times[1] - times[0];
        for index in 1..times.len() {
            let step = times[index] - times[index - 1];
            if step <= 0.0 {
                return Err(IngestError::NonIncreasingTimes { index });
            }
            if (step - expected).abs() > SPACING_TOLERANCE * expected {
                return Err(IngestError::NonUniformSpacing {
                    index,
                    step,
                    expected,
                });
            }
        }
        Ok(Self {
            times,
            values,
            kind,
            label: label.into(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Sampling step in years.
    pub fn step(&self) -> f64 {
        (self.times[self.len() - 1] - self.times[0]) / (self.len() - 1) as f64
    }

    /// Time between first and last sample, in years.
    pub fn span(&self) -> f64 {
        self.times[self.len() - 1] - self.times[0]
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.len() - 1]
    }

    /// Restricts the series to samples with `start <= t <= end`.
    pub fn window(&self, start: f64, end: f64) -> Result<TimeSeries, IngestError> {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.times[i] >= start && self.times[i] <= end)
            .collect();
        if keep.len() < MIN_SAMPLES {
            return Err(IngestError::EmptyWindow {
                start,
                end,
                len: keep.len(),
            });
        }
        TimeSeries::new(
            keep.iter().map(|&i| self.times[i]).collect(),
            keep.iter().map(|&i| self.values[i]).collect(),
            self.kind,
            self.label.clone(),
        )
    }
}

/// Reads a `date,value` CSV file into a level series.
pub fn load_series(
    path: impl AsRef<Path>,
    convention: DateConvention,
) -> Result<TimeSeries, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_series(&text, convention, label)
}

/// Parses CSV text; the first row is treated as a header when its date field
/// does not parse under `convention`.
pub fn parse_series(
    text: &str,
    convention: DateConvention,
    label: impl Into<String>,
) -> Result<TimeSeries, IngestError> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut seen_row = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        let first_row = !seen_row;
        seen_row = true;
        if fields.len() != 2 {
            if first_row && convention.parse_date(fields[0]).is_err() {
                continue;
            }
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("expected 2 columns, found {}", fields.len()),
            });
        }
        let time = match convention.parse_date(fields[0]) {
            Ok(t) => t,
            Err(_) if first_row => continue,
            Err(reason) => return Err(IngestError::MalformedRow { line, reason }),
        };
        let value: f64 = fields[1].parse().map_err(|_| IngestError::MalformedRow {
            line,
            reason: format!("'{}' is not a number", fields[1]),
        })?;
        if value.is_finite() && value <= 0.0 {
            return Err(IngestError::NonPositiveValue {
                index: times.len(),
                value,
            });
        }
        times.push(time);
        values.push(value);
    }
    TimeSeries::new(times, values, SeriesKind::Level, label)
}

/// Writes the canonical CSV form that [`parse_series`] reads back unchanged.
pub fn write_series<W: Write>(
    series: &TimeSeries,
    convention: DateConvention,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "date,value")?;
    for (t, v) in series.times().iter().zip(series.values()) {
        writeln!(out, "{},{}", convention.format_date(*t), v)?;
    }
    Ok(())
}

/// Natural log of a level series.
pub fn log_transform(series: &TimeSeries) -> Result<TimeSeries, IngestError> {
    if series.kind() != SeriesKind::Level {
        return Err(IngestError::AlreadyLog);
    }
    Ok(TimeSeries {
        times: series.times.clone(),
        values: series.values.iter().map(|v| v.ln()).collect(),
        kind: SeriesKind::LogLevel,
        label: series.label.clone(),
    })
}
