//! Long-term exponential trend of a log-level series.

use serde::Serialize;
use thiserror::Error;

use crate::ingest::{SeriesKind, TimeSeries};

#[derive(Debug, Error, PartialEq)]
pub enum TrendError {
    #[error("need at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("trend fitting expects a log-level series")]
    NotLogLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendFit {
    /// Slope of log-level against time: the long-term annualized rate.
    pub rho_lt: f64,
    /// Fitted log-level at time 0.
    pub intercept: f64,
    pub r_squared: f64,
}

impl TrendFit {
    pub fn predict(&self, t: f64) -> f64 {
        self.intercept + self.rho_lt * t
    }
}

/// Ordinary least squares of value on time.
pub fn ols_loggrowth(series: &TimeSeries) -> Result<TrendFit, TrendError> {
    if series.kind() != SeriesKind::LogLevel {
        return Err(TrendError::NotLogLevel);
    }
    ols(series.times(), series.values())
}

pub(crate) fn ols(times: &[f64], values: &[f64]) -> Result<TrendFit, TrendError> {
    let n = times.len();
    if n < 3 {
        return Err(TrendError::TooFewSamples(n));
    }
    let nf = n as f64;
    let t_mean = times.iter().sum::<f64>() / nf;
    let y_mean = values.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in times.iter().zip(values) {
        let (dt, dy) = (t - t_mean, y - y_mean);
        sxx += dt * dt;
        sxy += dt * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let sse: f64 = times
        .iter()
        .zip(values)
        .map(|(t, y)| (y - y_mean - slope * (t - t_mean)).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(TrendFit {
        rho_lt: slope,
        intercept: y_mean - slope * t_mean,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_series(values: Vec<f64>, times: Vec<f64>) -> TimeSeries {
        TimeSeries::new(times, values, SeriesKind::LogLevel, "").unwrap()
    }

    #[test]
    fn exact_line() {
        let times: Vec<f64> = (0..40).map(|i| 1950.0 + f64::from(i) * 0.25).collect();
        let s = log_series(times.iter().map(|t| 0.02 * t + 5.0).collect(), times);
        let fit = ols_loggrowth(&s).unwrap();
        assert!((fit.rho_lt - 0.02).abs() < 1e-12);
        assert!((fit.intercept - 5.0).abs() < 1e-8);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn level_shift_moves_intercept_only() {
        let times: Vec<f64> = (0..30).map(f64::from).collect();
        let vals: Vec<f64> = times.iter().map(|t| (t * 0.7).sin() + 0.01 * t).collect();
        let a = ols_loggrowth(&log_series(vals.clone(), times.clone())).unwrap();
        let b = ols_loggrowth(&log_series(vals.iter().map(|v| v + 3.0).collect(), times)).unwrap();
        assert!((a.rho_lt - b.rho_lt).abs() < 1e-14);
        assert!((b.intercept - a.intercept - 3.0).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&a.r_squared));
    }

    #[test]
    fn errors() {
        assert_eq!(
            ols(&[1.0, 2.0], &[1.0, 2.0]),
            Err(TrendError::TooFewSamples(2))
        );
        let times: Vec<f64> = (0..10).map(f64::from).collect();
        let level = TimeSeries::new(times, vec![1.0; 10], SeriesKind::Level, "").unwrap();
        assert_eq!(ols_loggrowth(&level), Err(TrendError::NotLogLevel));
    }
}
