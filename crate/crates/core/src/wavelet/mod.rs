//! Slope wavelet transform.
//!
//! The analyzing function is the first derivative of a Gaussian, normalized so
//! that a signal `p * t` has coefficient `p` at every scale and time:
//!
//! ```text
//! psi1(t; s) = t / (sqrt(2 pi) s^3) * exp(-t^2 / (2 s^2))
//! rho(s, t)  = integral psi1(tau - t; s) X(tau) dtau
//! ```
//!
//! Applied to a log-level series, `rho(s, t)` is the local annualized growth
//! rate averaged over roughly `[t - s, t + s]`. The integral is evaluated with
//! the trapezoidal rule at the sampling step, the kernel is truncated at
//! `|tau - t| > 6 s`, and the series is continued past its ends by point
//! reflection (`X(t0 - u) = 2 X(t0) - X(t0 + u)`), which keeps constants
//! constant and lines straight. Coefficients whose full kernel support leaves
//! the data span are kept but flagged outside the cone of influence.

mod fast;
mod reference;

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{SeriesKind, TimeSeries};

pub use fast::{cwt_slope, cwt_slope_with};
pub use reference::direct_cwt_reference;

/// Kernel support in units of the scale.
pub const TRUNCATION: f64 = 6.0;

/// Scales the analysis always evaluates exactly when the data allow it:
/// 3, 6, 9, 15, 18, 30 months and 1, 2, 3, 4, 8 years.
pub const NAMED_SCALES: [f64; 11] = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 8.0];

/// Default number of log-spaced scales per factor of two.
pub const DEFAULT_PER_OCTAVE: usize = 16;

const SCALE_MATCH_RTOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum WaveletError {
    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("scales must be finite, positive and strictly increasing")]
    InvalidGrid,
    #[error("scale {scale} outside the realizable range [{min}, {max}] for this series")]
    GridIncompatible { scale: f64, min: f64, max: f64 },
    #[error("the wavelet transform expects a log-level series")]
    NotLogLevel,
}

/// First-derivative Gaussian wavelet at offset `t` and scale `s` (both in years).
pub fn mother_psi1(t: f64, s: f64) -> Result<f64, WaveletError> {
    if !(s > 0.0) {
        return Err(WaveletError::NonPositiveScale(s));
    }
    Ok(psi1(t, s))
}

#[inline]
pub(crate) fn psi1(t: f64, s: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    let u = t / s;
    INV_SQRT_2PI * u / (s * s) * (-0.5 * u * u).exp()
}

/// Number of samples on each side of the centre inside the truncated kernel.
pub(crate) fn half_width(scale: f64, step: f64) -> usize {
    (TRUNCATION * scale / step + 1e-9).floor() as usize
}

/// Which coefficients feed downstream statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoiPolicy {
    /// Only coefficients inside the cone of influence.
    #[default]
    Exclude,
    /// Every coefficient, edge-affected ones included.
    Include,
}

impl std::str::FromStr for CoiPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "exclude" => Ok(CoiPolicy::Exclude),
            "include" => Ok(CoiPolicy::Include),
            other => Err(format!(
                "unknown coi policy '{other}' (expected exclude or include)"
            )),
        }
    }
}

/// Ascending list of analysis scales, in years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    scales: Vec<f64>,
}

impl ScaleGrid {
    pub fn new(scales: Vec<f64>) -> Result<Self, WaveletError> {
        let ok = !scales.is_empty()
            && scales.iter().all(|s| s.is_finite() && *s > 0.0)
            && scales.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(WaveletError::InvalidGrid);
        }
        Ok(Self { scales })
    }

    /// `min * 2^(k / per_octave)` for every `k` that stays at or below `max`.
    pub fn log_spaced(min: f64, max: f64, per_octave: usize) -> Result<Self, WaveletError> {
        if !(min > 0.0) || !(max >= min) || per_octave == 0 {
            return Err(WaveletError::InvalidGrid);
        }
        let octaves = (max / min).log2();
        let count = (octaves * per_octave as f64 + 1e-9).floor() as usize;
        let scales = (0..=count)
            .map(|k| min * (k as f64 / per_octave as f64).exp2())
            .collect();
        Self::new(scales)
    }

    /// Adds `extra` scales, dropping any that coincide with an existing one
    /// (relative difference below 1e-9, in which case the extra value wins).
    pub fn with_scales(&self, extra: &[f64]) -> Result<Self, WaveletError> {
        let mut all: Vec<(f64, bool)> = self.scales.iter().map(|&s| (s, false)).collect();
        all.extend(extra.iter().map(|&s| (s, true)));
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        let mut merged: Vec<(f64, bool)> = Vec::with_capacity(all.len());
        for (s, named) in all {
            match merged.last_mut() {
                Some(last) if (s - last.0).abs() <= SCALE_MATCH_RTOL * s => {
                    if named && !last.1 {
                        *last = (s, true);
                    }
                }
                _ => merged.push((s, named)),
            }
        }
        Self::new(merged.into_iter().map(|(s, _)| s).collect())
    }

    /// Default grid for a series: log-spaced from `2 * step` to `span / 4`, plus
    /// every named scale the series can resolve.
    pub fn default_for(series: &TimeSeries) -> Result<Self, WaveletError> {
        let (lo, hi) = realizable_range(series);
        let base = Self::log_spaced(2.0 * series.step(), hi, DEFAULT_PER_OCTAVE)?;
        base.with_scales(&named_scales_within(lo, hi))
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    /// Index of `scale` in the grid, matched to a relative tolerance of 1e-9.
    pub fn index_of(&self, scale: f64) -> Option<usize> {
        self.scales
            .iter()
            .position(|s| (s - scale).abs() <= SCALE_MATCH_RTOL * scale.abs().max(*s))
    }

    /// Checks every scale against the series' realizable range.
    pub fn check_against(&self, series: &TimeSeries) -> Result<(), WaveletError> {
        let (min, max) = realizable_range(series);
        for &scale in &self.scales {
            if scale < min * (1.0 - SCALE_MATCH_RTOL) || scale > max * (1.0 + SCALE_MATCH_RTOL) {
                return Err(WaveletError::GridIncompatible { scale, min, max });
            }
        }
        Ok(())
    }
}

/// Smallest and largest scale a series supports: one sampling step up to a
/// quarter of the time span.
pub fn realizable_range(series: &TimeSeries) -> (f64, f64) {
    (series.step(), series.span() / 4.0)
}

/// Named scales inside `[lo, hi]`.
pub fn named_scales_within(lo: f64, hi: f64) -> Vec<f64> {
    NAMED_SCALES
        .iter()
        .copied()
        .filter(|s| *s >= lo * (1.0 - SCALE_MATCH_RTOL) && *s <= hi * (1.0 + SCALE_MATCH_RTOL))
        .collect()
}

/// Growth-rate coefficients on a (scale x time) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletField {
    grid: ScaleGrid,
    times: Vec<f64>,
    /// Row-major, one row per scale.
    coeffs: Vec<f64>,
    coi: Vec<bool>,
    /// Per-row differences at or below this are treated as round-off.
    floors: Vec<f64>,
}

/// Relative precision assumed for a coefficient, against the input magnitude
/// times the kernel's absolute sum.
const ROUNDOFF: f64 = 1e-12;

impl WaveletField {
    /// `values` is the series the rows were computed from.
    pub(crate) fn from_rows(
        grid: ScaleGrid,
        times: Vec<f64>,
        values: &[f64],
        rows: Vec<Vec<f64>>,
    ) -> Self {
        let n = times.len();
        let step = (times[n - 1] - times[0]) / (n - 1) as f64;
        let magnitude = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floors = grid
            .scales()
            .iter()
            .map(|&s| ROUNDOFF * magnitude * kernel_abs_sum(s, step))
            .collect();
        let coi = grid
            .scales()
            .iter()
            .flat_map(|&s| coi_row(&times, s))
            .collect();
        let coeffs: Vec<f64> = rows.into_iter().flatten().collect();
        debug_assert_eq!(coeffs.len(), grid.len() * n);
        Self {
            grid,
            times,
            coeffs,
            coi,
            floors,
        }
    }

    /// Round-off floor of row `scale_index`, in coefficient units.
    pub fn roundoff_floor(&self, scale_index: usize) -> f64 {
        self.floors[scale_index]
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_scales(&self) -> usize {
        self.grid.len()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    /// Sampling step of the time axis.
    pub fn time_step(&self) -> f64 {
        let n = self.times.len();
        (self.times[n - 1] - self.times[0]) / (n - 1) as f64
    }

    pub fn row(&self, scale_index: usize) -> &[f64] {
        let n = self.n_times();
        &self.coeffs[scale_index * n..(scale_index + 1) * n]
    }

    pub fn coi_row(&self, scale_index: usize) -> &[bool] {
        let n = self.n_times();
        &self.coi[scale_index * n..(scale_index + 1) * n]
    }

    pub fn value(&self, scale_index: usize, time_index: usize) -> f64 {
        self.coeffs[scale_index * self.n_times() + time_index]
    }

    pub fn in_coi(&self, scale_index: usize, time_index: usize) -> bool {
        self.coi[scale_index * self.n_times() + time_index]
    }

    /// All coefficients, row-major.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Cone-of-influence mask, row-major.
    pub fn coi(&self) -> &[bool] {
        &self.coi
    }

    /// Coefficients at one scale, filtered by `policy`.
    pub fn samples(&self, scale_index: usize, policy: CoiPolicy) -> Vec<f64> {
        self.row(scale_index)
            .iter()
            .zip(self.coi_row(scale_index))
            .filter(|(_, &valid)| policy == CoiPolicy::Include || valid)
            .map(|(v, _)| *v)
            .collect()
    }

    /// Every coefficient inside the cone of influence.
    pub fn valid_coefficients(&self) -> impl Iterator<Item = f64> + '_ {
        self.coeffs
            .iter()
            .zip(&self.coi)
            .filter(|(_, &valid)| valid)
            .map(|(v, _)| *v)
    }

    /// Long-format CSV: `scale_years,time_years,rho_per_year,coi`.
    pub fn write_scalogram_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "scale_years,time_years,rho_per_year,coi")?;
        for (i, &scale) in self.grid.scales().iter().enumerate() {
            for (j, &t) in self.times.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    scale,
                    t,
                    self.value(i, j),
                    self.in_coi(i, j)
                )?;
            }
        }
        Ok(())
    }
}

/// Sum of the absolute trapezoid weights of the discrete kernel.
fn kernel_abs_sum(scale: f64, step: f64) -> f64 {
    let half = half_width(scale, step) as isize;
    (-half..=half)
        .map(|m| {
            let w = if m.abs() == half { 0.5 } else { 1.0 };
            w * step * psi1(m as f64 * step, scale).abs()
        })
        .sum()
}

/// `true` where `[t - 6s, t + 6s]` lies inside the sampled span.
pub(crate) fn coi_row(times: &[f64], scale: f64) -> Vec<bool> {
    let (first, last) = (times[0], times[times.len() - 1]);
    let step = (last - first) / (times.len() - 1) as f64;
    let eps = 1e-9 * step;
    let reach = TRUNCATION * scale;
    times
        .iter()
        .map(|&t| t - reach >= first - eps && t + reach <= last + eps)
        .collect()
}

pub(crate) fn check_inputs(series: &TimeSeries, grid: &ScaleGrid) -> Result<(), WaveletError> {
    if series.kind() != SeriesKind::LogLevel {
        return Err(WaveletError::NotLogLevel);
    }
    grid.check_against(series)
}
