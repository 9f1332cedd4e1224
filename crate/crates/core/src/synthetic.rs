//! GDP trajectories recompounded from skeleton growth rates.
//!
//! With intercepts `(t_i, g_i)` at one scale, the synthetic level at `t_k` is
//! `gdp0 * prod_{i<=k} (1 + g_i)^(t_i - t_{i-1})`, where the first factor
//! spans `t0..t1`.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::ingest::{SeriesKind, TimeSeries};
use crate::skeleton::Intercept;

#[derive(Debug, Error, PartialEq)]
pub enum SyntheticError {
    #[error("intercept times must be strictly increasing and after t0 (index {0})")]
    NonIncreasingTimes(usize),
    #[error("growth rate {rate} at index {index} is at or below -1")]
    GrowthBelowMinusOne { index: usize, rate: f64 },
    #[error("base level must be positive, got {0}")]
    NonPositiveBase(f64),
    #[error("synthetic time {0} lies outside the actual series")]
    SpanMismatch(f64),
    #[error("comparison series must hold levels")]
    NotLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSeries {
    pub s_star: f64,
    pub gdp0: f64,
    pub t0: f64,
    /// `t0` followed by the intercept times.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl SyntheticSeries {
    /// CSV with header `time_years,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "time_years,value")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }
}

pub fn synthetic_gdp(
    intercepts: &[Intercept],
    gdp0: f64,
    t0: f64,
    s_star: f64,
) -> Result<SyntheticSeries, SyntheticError> {
    if !(gdp0 > 0.0) {
        return Err(SyntheticError::NonPositiveBase(gdp0));
    }
    let mut times = Vec::with_capacity(intercepts.len() + 1);
    let mut values = Vec::with_capacity(intercepts.len() + 1);
    times.push(t0);
    values.push(gdp0);
    let mut log_level = gdp0.ln();
    let mut prev = t0;
    for (index, ic) in intercepts.iter().enumerate() {
        if !(ic.time > prev) {
            return Err(SyntheticError::NonIncreasingTimes(index));
        }
        if !(1.0 + ic.rho > 0.0) {
            return Err(SyntheticError::GrowthBelowMinusOne {
                index,
                rate: ic.rho,
            });
        }
        log_level += (ic.time - prev) * ic.rho.ln_1p();
        times.push(ic.time);
        values.push(log_level.exp());
        prev = ic.time;
    }
    Ok(SyntheticSeries {
        s_star,
        gdp0,
        t0,
        times,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub points: usize,
    pub median_abs_log_ratio: f64,
    pub max_abs_log_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionError {
    pub s_star: f64,
    /// `(time, |ln(synthetic / actual)|)` for every synthetic point.
    pub per_point: Vec<(f64, f64)>,
    pub all: ErrorSummary,
    /// Summary over points outside `exclusion`; `None` if no window was given
    /// or every point fell inside it.
    pub outside_exclusion: Option<ErrorSummary>,
    pub exclusion: Option<(f64, f64)>,
}

/// Compares a synthetic trajectory with the actual level series, interpolating
/// the latter linearly in log-level at the synthetic times.
pub fn reconstruction_error(
    synth: &SyntheticSeries,
    actual: &TimeSeries,
    exclusion: Option<(f64, f64)>,
) -> Result<ReconstructionError, SyntheticError> {
    if actual.kind() != SeriesKind::Level {
        return Err(SyntheticError::NotLevel);
    }
    let per_point = synth
        .times
        .iter()
        .zip(&synth.values)
        .map(|(&t, &v)| {
            let actual_log = log_interp(actual, t).ok_or(SyntheticError::SpanMismatch(t))?;
            Ok((t, (v.ln() - actual_log).abs()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let all = summarize(per_point.iter().map(|p| p.1)).expect("at least the base point");
    let outside_exclusion = exclusion.and_then(|(a, b)| {
        summarize(
            per_point
                .iter()
                .filter(|(t, _)| *t < a || *t > b)
                .map(|p| p.1),
        )
    });
    Ok(ReconstructionError {
        s_star: synth.s_star,
        per_point,
        all,
        outside_exclusion,
        exclusion,
    })
}

fn log_interp(series: &TimeSeries, t: f64) -> Option<f64> {
    let (times, values) = (series.times(), series.values());
    let step = series.step();
    let eps = 1e-9 * step;
    if t < series.start() - eps || t > series.end() + eps {
        return None;
    }
    let pos = ((t - series.start()) / step).clamp(0.0, (times.len() - 1) as f64);
    let lo = (pos.floor() as usize).min(times.len() - 2);
    let frac = pos - lo as f64;
    Some((1.0 - frac) * values[lo].ln() + frac * values[lo + 1].ln())
}

fn summarize(errors: impl Iterator<Item = f64>) -> Option<ErrorSummary> {
    let mut v: Vec<f64> = errors.collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    Some(ErrorSummary {
        points: n,
        median_abs_log_ratio: median,
        max_abs_log_ratio: v[n - 1],
    })
}
