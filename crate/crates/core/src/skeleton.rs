//! Wavelet skeleton: per-scale extrema of the growth-rate field, linked across
//! scales into crest (local maximum) and valley (local minimum) lines.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{map_indexed, Execution};
use crate::wavelet::{ScaleGrid, WaveletField};

#[derive(Debug, Error, PartialEq)]
pub enum SkeletonError {
    #[error("scale {0} is not on the analysis grid")]
    ScaleNotInGrid(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Crest,
    Valley,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkeletonPoint {
    pub time: f64,
    pub scale: f64,
    pub rho: f64,
    pub kind: ExtremumKind,
}

/// Extrema of one kind at consecutive grid scales, ordered by ascending scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonLine {
    pub kind: ExtremumKind,
    pub points: Vec<SkeletonPoint>,
}

impl SkeletonLine {
    pub fn point_at(&self, scale: f64) -> Option<&SkeletonPoint> {
        self.points
            .iter()
            .find(|p| (p.scale - scale).abs() <= 1e-9 * scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSet {
    pub lines: Vec<SkeletonLine>,
    pub source_grid: ScaleGrid,
}

/// One skeleton arm crossing a fixed scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Intercept {
    pub time: f64,
    pub rho: f64,
    pub kind: ExtremumKind,
}

/// Strict extrema of row `scale` in time, restricted to the cone of influence.
pub fn extract_extrema(
    field: &WaveletField,
    scale: f64,
) -> Result<Vec<SkeletonPoint>, SkeletonError> {
    let i = field
        .grid()
        .index_of(scale)
        .ok_or(SkeletonError::ScaleNotInGrid(scale))?;
    Ok(row_extrema(
        field.times(),
        field.row(i),
        field.coi_row(i),
        field.grid().scales()[i],
        field.roundoff_floor(i),
    ))
}

/// Extrema of every grid row, indexed like the grid.
pub fn extract_all(field: &WaveletField, exec: Execution) -> Vec<Vec<SkeletonPoint>> {
    map_indexed(field.n_scales(), exec, |i| {
        row_extrema(
            field.times(),
            field.row(i),
            field.coi_row(i),
            field.grid().scales()[i],
            field.roundoff_floor(i),
        )
    })
}

/// Strict local extrema of `values` whose neighbourhood lies where `valid` holds.
///
/// Values within `tol` of each other count as equal. A run of equal values
/// counts once, at its middle sample (rounded down), when both neighbours of
/// the run are on the same side of it.
pub fn row_extrema(
    times: &[f64],
    values: &[f64],
    valid: &[bool],
    scale: f64,
    tol: f64,
) -> Vec<SkeletonPoint> {
    let n = values.len();
    let mut out = Vec::new();
    let mut start = 1;
    while start + 1 < n {
        let mut end = start;
        while end + 1 < n && (values[end + 1] - values[start]).abs() <= tol {
            end += 1;
        }
        if end + 1 >= n {
            break;
        }
        let (left, right, v) = (values[start - 1], values[end + 1], values[start]);
        let kind = if v - left > tol && v - right > tol {
            Some(ExtremumKind::Crest)
        } else if left - v > tol && right - v > tol {
            Some(ExtremumKind::Valley)
        } else {
            None
        };
        if let Some(kind) = kind {
            if valid[start - 1..=end + 1].iter().all(|v| *v) {
                let mid = (start + end) / 2;
                out.push(SkeletonPoint {
                    time: times[mid],
                    scale,
                    rho: v,
                    kind,
                });
            }
        }
        start = end + 1;
    }
    out
}

/// Links per-scale extrema into lines, walking up the grid.
///
/// Each line ending at scale `k` may take the nearest same-kind extremum at
/// scale `k + 1` when their times differ by at most `max(time_step, 0.5 s)`,
/// `s` being the larger scale. Candidate pairs are accepted greedily by
/// increasing time distance; extrema left over start new lines.
pub fn link_lines(
    per_scale: &[Vec<SkeletonPoint>],
    grid: &ScaleGrid,
    time_step: f64,
) -> SkeletonSet {
    let mut lines: Vec<SkeletonLine> = Vec::new();
    // Lines whose last point sits on the previous scale level.
    let mut open: Vec<usize> = Vec::new();

    for (level, points) in per_scale.iter().enumerate() {
        let mut next_open = Vec::with_capacity(points.len());
        let mut taken = vec![false; points.len()];
        if level > 0 && !open.is_empty() {
            let tolerance = time_step.max(0.5 * grid.scales()[level]);
            let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
            for (oi, &line) in open.iter().enumerate() {
                let last = lines[line].points.last().expect("lines are never empty");
                for (pi, p) in points.iter().enumerate() {
                    let gap = (p.time - last.time).abs();
                    if p.kind == last.kind && gap <= tolerance + 1e-12 {
                        candidates.push((gap, oi, pi));
                    }
                }
            }
            candidates.sort_by(|a, b| {
                a.0.total_cmp(&b.0)
                    .then(points[a.2].time.total_cmp(&points[b.2].time))
                    .then(a.1.cmp(&b.1))
            });
            let mut extended = vec![false; open.len()];
            for (_, oi, pi) in candidates {
                if extended[oi] || taken[pi] {
                    continue;
                }
                extended[oi] = true;
                taken[pi] = true;
                lines[open[oi]].points.push(points[pi]);
                next_open.push(open[oi]);
            }
        }
        for (pi, p) in points.iter().enumerate() {
            if !taken[pi] {
                lines.push(SkeletonLine {
                    kind: p.kind,
                    points: vec![*p],
                });
                next_open.push(lines.len() - 1);
            }
        }
        open = next_open;
    }

    lines.sort_by(|a, b| {
        let (pa, pb) = (&a.points[0], &b.points[0]);
        pa.scale
            .total_cmp(&pb.scale)
            .then(pa.time.total_cmp(&pb.time))
    });
    SkeletonSet {
        lines,
        source_grid: grid.clone(),
    }
}

/// Extracts and links the full skeleton of `field`.
pub fn skeleton(field: &WaveletField, exec: Execution) -> SkeletonSet {
    let per_scale = extract_all(field, exec);
    link_lines(&per_scale, field.grid(), field.time_step())
}

/// Where the skeleton lines cross `s_star`, ordered by time.
pub fn intercepts_at_scale(
    set: &SkeletonSet,
    s_star: f64,
) -> Result<Vec<Intercept>, SkeletonError> {
    let scale = set
        .source_grid
        .index_of(s_star)
        .map(|i| set.source_grid.scales()[i])
        .ok_or(SkeletonError::ScaleNotInGrid(s_star))?;
    let mut out: Vec<Intercept> = set
        .lines
        .iter()
        .filter_map(|line| line.point_at(scale))
        .map(|p| Intercept {
            time: p.time,
            rho: p.rho,
            kind: p.kind,
        })
        .collect();
    out.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(out)
}

#[derive(Serialize)]
struct JsonPoint {
    t: f64,
    s: f64,
    rho: f64,
}

#[derive(Serialize)]
struct JsonLine {
    kind: ExtremumKind,
    points: Vec<JsonPoint>,
}

impl SkeletonSet {
    pub fn point_count(&self) -> usize {
        self.lines.iter().map(|l| l.points.len()).sum()
    }

    /// JSON array of `{kind, points: [{t, s, rho}]}`.
    pub fn to_json(&self) -> serde_json::Value {
        let lines: Vec<JsonLine> = self
            .lines
            .iter()
            .map(|l| JsonLine {
                kind: l.kind,
                points: l
                    .points
                    .iter()
                    .map(|p| JsonPoint {
                        t: p.time,
                        s: p.scale,
                        rho: p.rho,
                    })
                    .collect(),
            })
            .collect();
        serde_json::to_value(lines).expect("skeleton serializes")
    }

    pub fn write_json<W: Write>(&self, out: W) -> io::Result<()> {
        serde_json::to_writer_pretty(out, &self.to_json()).map_err(io::Error::from)
    }
}
