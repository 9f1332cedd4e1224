use std::path::PathBuf;

use growthscope::ingest::{load_series, log_transform};
use growthscope::skeleton::{extract_extrema, intercepts_at_scale, skeleton, ExtremumKind};
use growthscope::wavelet::cwt_slope;
use growthscope::{DateConvention, Execution, ScaleGrid, SeriesKind, TimeSeries};

const LOW: f64 = 0.01;
const HIGH: f64 = 0.03;
const SEGMENT: f64 = 8.0;

/// Continuous log level whose slope alternates LOW, HIGH every SEGMENT years
/// starting at t = 0.
fn alternating_level(t: f64) -> f64 {
    let k = (t / SEGMENT).floor();
    let full_pairs = (k / 2.0).floor();
    let mut level = full_pairs * SEGMENT * (LOW + HIGH);
    let rem = t - 2.0 * full_pairs * SEGMENT;
    if rem <= SEGMENT {
        level += LOW * rem;
    } else {
        level += LOW * SEGMENT + HIGH * (rem - SEGMENT);
    }
    level
}

fn alternating_series() -> TimeSeries {
    // 104 years: the 1-year cone of influence is [6, 98], which contains all
    // six high-slope segments [8,16], [24,32], ..., [88,96] entirely.
    let times: Vec<f64> = (0..=416).map(|i| i as f64 * 0.25).collect();
    let values = times.iter().map(|&t| alternating_level(t)).collect();
    TimeSeries::new(times, values, SeriesKind::LogLevel, "alternating").unwrap()
}

fn kernel(u: f64, s: f64) -> f64 {
    u / ((2.0 * std::f64::consts::PI).sqrt() * s.powi(3)) * (-u * u / (2.0 * s * s)).exp()
}

/// Composite Simpson evaluation of the continuous transform of the piecewise
/// linear signal over [t - 10s, t + 10s].
fn simpson_oracle(t: f64, s: f64) -> f64 {
    let n = 8000;
    let (a, b) = (t - 10.0 * s, t + 10.0 * s);
    let h = (b - a) / n as f64;
    let f = |tau: f64| kernel(tau - t, s) * alternating_level(tau);
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn level_helper_is_continuous_with_expected_slopes() {
    for t in [8.0, 16.0, 24.0, 40.0] {
        assert!((alternating_level(t - 1e-9) - alternating_level(t + 1e-9)).abs() < 1e-9);
    }
    assert!((alternating_level(12.5) - alternating_level(12.0) - 0.5 * HIGH).abs() < 1e-12);
    assert!((alternating_level(4.5) - alternating_level(4.0) - 0.5 * LOW).abs() < 1e-12);
}

#[test]
fn transform_converges_to_continuous_integral() {
    // Slope kinks sit on sample nodes, so the trapezoid sum differs from the
    // continuous integral by a second-order term in dt / s.
    let series = alternating_series();
    let grid = ScaleGrid::new(vec![0.5, 1.0, 2.0]).unwrap();
    let field = cwt_slope(&series, &grid).unwrap();
    for (i, &s) in grid.scales().iter().enumerate() {
        let mut worst: f64 = 0.0;
        for j in (0..field.n_times()).step_by(3) {
            if field.in_coi(i, j) {
                let oracle = simpson_oracle(field.times()[j], s);
                worst = worst.max((field.value(i, j) - oracle).abs());
            }
        }
        let bound = 5e-4 * (series.step() / s).powi(2);
        assert!(worst < bound, "s={s}: {worst} vs {bound}");
    }
}

#[test]
fn alternating_slopes_produce_crests_and_valleys_at_the_segment_rates() {
    let series = alternating_series();
    let grid = ScaleGrid::default_for(&series).unwrap();
    let field = cwt_slope(&series, &grid).unwrap();
    let extrema = extract_extrema(&field, 1.0).unwrap();
    assert!(!extrema.is_empty());
    for p in &extrema {
        let target = match p.kind {
            ExtremumKind::Crest => HIGH,
            ExtremumKind::Valley => LOW,
        };
        assert!((p.rho - target).abs() <= 0.002, "{p:?}");
    }
    let crest_times: Vec<f64> = extrema
        .iter()
        .filter(|p| p.kind == ExtremumKind::Crest)
        .map(|p| p.time)
        .collect();
    assert_eq!(crest_times, vec![12.0, 28.0, 44.0, 60.0, 76.0, 92.0]);
    for pair in extrema.windows(2) {
        assert_ne!(pair[0].kind, pair[1].kind);
    }
}

#[test]
fn crest_lines_reaching_one_year_match_high_segments() {
    let series = alternating_series();
    let grid = ScaleGrid::default_for(&series).unwrap();
    let field = cwt_slope(&series, &grid).unwrap();
    let set = skeleton(&field, Execution::default());
    let coi_lo = series.start() + 6.0;
    let coi_hi = series.end() - 6.0;
    let high_inside = (0..13)
        .filter(|k| k % 2 == 1)
        .map(|k| (k as f64 * SEGMENT, (k + 1) as f64 * SEGMENT))
        .filter(|(a, b)| *a >= coi_lo && *b <= coi_hi)
        .count();
    let crest_lines = set
        .lines
        .iter()
        .filter(|l| l.kind == ExtremumKind::Crest && l.point_at(1.0).is_some())
        .count();
    assert_eq!(high_inside, 6);
    assert_eq!(crest_lines, high_inside);

    let intercepts = intercepts_at_scale(&set, 1.0).unwrap();
    assert_eq!(
        intercepts.len(),
        extract_extrema(&field, 1.0).unwrap().len()
    );
}

fn annual_field() -> growthscope::WaveletField {
    let path =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/us_gdp_pc_annual.csv");
    let series = log_transform(&load_series(path, DateConvention::YearOnly).unwrap()).unwrap();
    let grid = ScaleGrid::default_for(&series).unwrap();
    cwt_slope(&series, &grid).unwrap()
}

#[test]
fn every_valid_extremum_belongs_to_exactly_one_line() {
    let field = annual_field();
    let set = skeleton(&field, Execution::default());
    let mut linked: Vec<(u64, u64)> = set
        .lines
        .iter()
        .flat_map(|l| {
            l.points
                .iter()
                .map(|p| (p.scale.to_bits(), p.time.to_bits()))
        })
        .collect();
    linked.sort_unstable();
    let before = linked.len();
    linked.dedup();
    assert_eq!(before, linked.len(), "a point sits on two lines");

    // Independent scan: strict neighbour comparison on coi-valid triples.
    let mut expected = Vec::new();
    for i in 0..field.n_scales() {
        let row = field.row(i);
        for j in 1..field.n_times() - 1 {
            let valid = field.in_coi(i, j - 1) && field.in_coi(i, j) && field.in_coi(i, j + 1);
            let peak = row[j] > row[j - 1] && row[j] > row[j + 1];
            let trough = row[j] < row[j - 1] && row[j] < row[j + 1];
            if valid && (peak || trough) {
                expected.push((
                    field.grid().scales()[i].to_bits(),
                    field.times()[j].to_bits(),
                ));
            }
        }
    }
    expected.sort_unstable();
    assert_eq!(linked, expected);
}

#[test]
fn lines_step_through_adjacent_scales_with_one_kind() {
    let field = annual_field();
    let set = skeleton(&field, Execution::default());
    let scales = field.grid().scales();
    for line in &set.lines {
        assert!(line.points.iter().all(|p| p.kind == line.kind));
        for pair in line.points.windows(2) {
            let i = field.grid().index_of(pair[0].scale).unwrap();
            assert_eq!(pair[1].scale, scales[i + 1]);
            let tolerance = field.time_step().max(0.5 * pair[1].scale);
            assert!((pair[1].time - pair[0].time).abs() <= tolerance + 1e-9);
        }
    }
}

#[test]
fn skeleton_is_deterministic_across_execution_modes() {
    let field = annual_field();
    let a = skeleton(&field, Execution::Sequential);
    let b = skeleton(&field, Execution::Parallel);
    let c = skeleton(&field, Execution::Parallel);
    assert_eq!(a, b);
    assert_eq!(b, c);
    let mut ja = Vec::new();
    let mut jc = Vec::new();
    a.write_json(&mut ja).unwrap();
    c.write_json(&mut jc).unwrap();
    assert_eq!(ja, jc);
}

#[test]
fn constant_signal_has_empty_skeleton_that_serializes() {
    let times: Vec<f64> = (0..80).map(|i| 1950.0 + i as f64 * 0.25).collect();
    let series = TimeSeries::new(times, vec![2.0; 80], SeriesKind::LogLevel, "flat").unwrap();
    let grid = ScaleGrid::default_for(&series).unwrap();
    let set = skeleton(&cwt_slope(&series, &grid).unwrap(), Execution::default());
    assert_eq!(set.point_count(), 0);
    assert_eq!(set.to_json(), serde_json::json!([]));
}

#[test]
fn steady_growth_has_empty_skeleton() {
    // Exact exponential levels: every row is flat up to round-off.
    let times: Vec<f64> = (0..160).map(|i| 1900.0 + i as f64 * 0.25).collect();
    let levels: Vec<f64> = times
        .iter()
        .map(|t| 500.0 * (0.021 * (t - 1900.0)).exp())
        .collect();
    let series = TimeSeries::new(times, levels, SeriesKind::Level, "steady").unwrap();
    let series = log_transform(&series).unwrap();
    let grid = ScaleGrid::default_for(&series).unwrap();
    for exec in [Execution::Sequential, Execution::Parallel] {
        let field = cwt_slope(&series, &grid).unwrap();
        let worst = field
            .valid_coefficients()
            .fold(0.0f64, |m, v| m.max((v - 0.021).abs()));
        assert!(worst < 1e-6, "{worst}");
        assert_eq!(skeleton(&field, exec).point_count(), 0);
    }
}
