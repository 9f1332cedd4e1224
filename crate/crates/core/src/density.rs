//! Gaussian kernel densities of growth rates and their modes.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{map_indexed, Execution};

/// Kernel standard deviation used unless overridden, in growth-rate units.
pub const DEFAULT_BANDWIDTH: f64 = 0.002;

/// Modes below this fraction of the density maximum are discarded by
/// [`regime_peaks`].
pub const DEFAULT_PROMINENCE_FLOOR: f64 = 0.05;

/// Grid points per bandwidth.
const GRID_PER_BANDWIDTH: f64 = 20.0;

/// Grid extends this many bandwidths past the extreme samples.
const GRID_MARGIN: f64 = 5.0;

#[derive(Debug, Error, PartialEq)]
pub enum DensityError {
    #[error("no samples")]
    EmptySamples,
    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("non-finite sample")]
    NonFiniteSample,
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("quantile must lie in (0, 1), got {0}")]
    InvalidQuantile(f64),
    #[error("all samples are equal")]
    DegenerateSamples,
}

/// Where density samples were taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensitySource {
    FullField,
    Skeleton,
}

impl DensitySource {
    pub fn as_str(self) -> &'static str {
        match self {
            DensitySource::FullField => "full_field",
            DensitySource::Skeleton => "skeleton",
        }
    }
}

/// A kernel density estimate on a uniform growth-rate grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthDensity {
    pub scale: Option<f64>,
    pub source: Option<DensitySource>,
    pub grid: Vec<f64>,
    pub pdf: Vec<f64>,
    pub bandwidth: f64,
    pub sample_count: usize,
}

impl GrowthDensity {
    pub fn labelled(mut self, scale: f64, source: DensitySource) -> Self {
        self.scale = Some(scale);
        self.source = Some(source);
        self
    }

    pub fn step(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// Trapezoidal integral of the pdf over its grid.
    pub fn integral(&self) -> f64 {
        let h = self.step();
        let inner: f64 = self.pdf.iter().sum();
        h * (inner - 0.5 * (self.pdf[0] + self.pdf[self.pdf.len() - 1]))
    }

    pub fn max_pdf(&self) -> f64 {
        self.pdf.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with header `rho_per_year,pdf`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "rho_per_year,pdf")?;
        for (x, p) in self.grid.iter().zip(&self.pdf) {
            writeln!(out, "{x},{p}")?;
        }
        Ok(())
    }
}

/// Gaussian KDE with kernel standard deviation `bandwidth`.
pub fn kde(samples: &[f64], bandwidth: f64) -> Result<GrowthDensity, DensityError> {
    kde_with(samples, bandwidth, Execution::default())
}

pub fn kde_with(
    samples: &[f64],
    bandwidth: f64,
    exec: Execution,
) -> Result<GrowthDensity, DensityError> {
    if samples.is_empty() {
        return Err(DensityError::EmptySamples);
    }
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(DensityError::NonPositiveBandwidth(bandwidth));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(DensityError::NonFiniteSample);
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - GRID_MARGIN * bandwidth;
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + GRID_MARGIN * bandwidth;
    let step = bandwidth / GRID_PER_BANDWIDTH;
    let points = ((hi - lo) / step).ceil() as usize + 1;
    let grid: Vec<f64> = (0..points).map(|k| lo + k as f64 * step).collect();

    let norm = 1.0 / (samples.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let inv_bw = 1.0 / bandwidth;
    let pdf = map_indexed(points, exec, |k| {
        let x = grid[k];
        let sum: f64 = samples
            .iter()
            .map(|s| {
                let z = (x - s) * inv_bw;
                (-0.5 * z * z).exp()
            })
            .sum();
        sum * norm
    });

    Ok(GrowthDensity {
        scale: None,
        source: None,
        grid,
        pdf,
        bandwidth,
        sample_count: samples.len(),
    })
}

/// A local maximum of a density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub location: f64,
    pub height: f64,
    /// Height above the highest saddle separating this peak from a higher
    /// one (or from the grid ends, for the global maximum).
    pub prominence: f64,
}

/// Strict local maxima of the pdf with their topographic prominence, keeping
/// those at or above `prominence_floor * max(pdf)`. Sorted by location.
pub fn find_modes(density: &GrowthDensity, prominence_floor: f64) -> Vec<Mode> {
    let pdf = &density.pdf;
    let n = pdf.len();
    let threshold = prominence_floor * density.max_pdf();
    let mut modes = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let h = pdf[i];
        if !(h > pdf[i - 1] && h > pdf[i + 1]) {
            continue;
        }
        // Lowest point on each side before the first strictly higher sample.
        let mut left_min = h;
        let mut j = i;
        while j > 0 && pdf[j - 1] <= h {
            j -= 1;
            left_min = left_min.min(pdf[j]);
        }
        let mut right_min = h;
        let mut j = i;
        while j + 1 < n && pdf[j + 1] <= h {
            j += 1;
            right_min = right_min.min(pdf[j]);
        }
        let prominence = h - left_min.max(right_min);
        if prominence >= threshold {
            modes.push(Mode {
                location: density.grid[i],
                height: h,
                prominence,
            });
        }
    }
    modes
}

/// The two regime modes of a growth-rate density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimePeaks {
    pub low: Mode,
    /// Absent when only one mode clears the floor.
    pub high: Option<Mode>,
}

impl RegimePeaks {
    /// The more prominent of the two modes.
    pub fn dominant(&self) -> Mode {
        match self.high {
            Some(high) if high.prominence > self.low.prominence => high,
            _ => self.low,
        }
    }
}

/// Two most prominent modes with the default floor, ordered by location.
pub fn regime_peaks(density: &GrowthDensity) -> RegimePeaks {
    regime_peaks_with_floor(density, DEFAULT_PROMINENCE_FLOOR)
}

pub fn regime_peaks_with_floor(density: &GrowthDensity, prominence_floor: f64) -> RegimePeaks {
    let mut modes = find_modes(density, prominence_floor);
    if modes.is_empty() {
        // Only possible when the maximum is a flat top.
        let (i, &height) = density
            .pdf
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("densities are never empty");
        modes.push(Mode {
            location: density.grid[i],
            height,
            prominence: height,
        });
    }
    modes.sort_by(|a, b| {
        b.prominence
            .total_cmp(&a.prominence)
            .then(a.location.total_cmp(&b.location))
    });
    modes.truncate(2);
    modes.sort_by(|a, b| a.location.total_cmp(&b.location));
    RegimePeaks {
        low: modes[0],
        high: modes.get(1).copied(),
    }
}

/// Per-scale regime peaks plus the long-term rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeSummary {
    pub source: DensitySource,
    pub rho_lt: f64,
    pub entries: Vec<RegimeEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeEntry {
    pub scale: f64,
    pub rho_low: f64,
    pub rho_high: Option<f64>,
    pub prominence_low: f64,
    pub prominence_high: Option<f64>,
}

impl RegimeEntry {
    pub fn new(scale: f64, peaks: &RegimePeaks) -> Self {
        Self {
            scale,
            rho_low: peaks.low.location,
            rho_high: peaks.high.map(|m| m.location),
            prominence_low: peaks.low.prominence,
            prominence_high: peaks.high.map(|m| m.prominence),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalStats {
    pub quantile: f64,
    pub quantile_value: f64,
    pub conditional_mean_above: f64,
}

/// Empirical quantile (linear interpolation between order statistics) and the
/// mean of samples strictly above it.
pub fn conditional_stats(samples: &[f64], quantile: f64) -> Result<ConditionalStats, DensityError> {
    if samples.len() < 2 {
        return Err(DensityError::TooFewSamples(samples.len()));
    }
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(DensityError::InvalidQuantile(quantile));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(DensityError::NonFiniteSample);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(DensityError::DegenerateSamples);
    }
    let quantile_value = empirical_quantile(&sorted, quantile);
    let above: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|v| *v > quantile_value)
        .collect();
    let conditional_mean_above = above.iter().sum::<f64>() / above.len() as f64;
    Ok(ConditionalStats {
        quantile,
        quantile_value,
        conditional_mean_above,
    })
}

fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sample skewness `m3 / m2^(3/2)` (population moments).
pub fn skewness(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = samples.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}
