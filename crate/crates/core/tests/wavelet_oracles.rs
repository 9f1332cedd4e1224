use std::f64::consts::PI;
use std::path::PathBuf;

use growthscope::ingest::{load_series, log_transform};
use growthscope::wavelet::{cwt_slope, cwt_slope_with, direct_cwt_reference, WaveletError};
use growthscope::{DateConvention, Execution, ScaleGrid, SeriesKind, TimeSeries, WaveletField};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn quarterly_log() -> TimeSeries {
    let s = load_series(
        fixture("us_gdp_pc_quarterly.csv"),
        DateConvention::YearQuarter,
    )
    .unwrap();
    log_transform(&s).unwrap()
}

fn annual_log() -> TimeSeries {
    let s = load_series(fixture("us_gdp_pc_annual.csv"), DateConvention::YearOnly).unwrap();
    log_transform(&s).unwrap()
}

fn log_series(times: Vec<f64>, f: impl Fn(f64) -> f64) -> TimeSeries {
    let values = times.iter().map(|&t| f(t)).collect();
    TimeSeries::new(times, values, SeriesKind::LogLevel, "test").unwrap()
}

fn quarterly_axis(n: usize) -> Vec<f64> {
    (0..n).map(|i| 1947.0 + i as f64 * 0.25).collect()
}

fn max_valid_deviation(field: &WaveletField, expected: impl Fn(f64, f64) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, &s) in field.grid().scales().iter().enumerate() {
        for (j, &t) in field.times().iter().enumerate() {
            if field.in_coi(i, j) {
                worst = worst.max((field.value(i, j) - expected(s, t)).abs());
            }
        }
    }
    worst
}

#[test]
fn linear_signal_recovers_slope_everywhere_in_cone() {
    let times = quarterly_axis(251);
    for p in [-0.05, 0.001, 0.02] {
        let series = log_series(times.clone(), |t| p * t);
        let grid = ScaleGrid::default_for(&series).unwrap();
        let field = cwt_slope(&series, &grid).unwrap();
        assert!(field.valid_coefficients().count() > 1000);
        let dev = max_valid_deviation(&field, |_, _| p);
        assert!(dev <= 1e-6, "p={p}: deviation {dev}");
    }
}

#[test]
fn constant_signal_is_null_everywhere() {
    let series = log_series(quarterly_axis(251), |_| 5.0);
    let grid = ScaleGrid::default_for(&series).unwrap();
    let field = cwt_slope(&series, &grid).unwrap();
    let worst = field.coeffs().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst <= 1e-12, "{worst}");
    let direct = direct_cwt_reference(&series, &grid).unwrap();
    assert!(direct.coeffs().iter().all(|v| v.abs() <= 1e-12));
}

#[test]
fn direct_reference_on_simple_signals() {
    let series = log_series(quarterly_axis(64), |t| 0.02 * t);
    let grid = ScaleGrid::default_for(&series).unwrap();
    let direct = direct_cwt_reference(&series, &grid).unwrap();
    assert!(max_valid_deviation(&direct, |_, _| 0.02) <= 1e-6);
}

#[test]
fn fast_matches_direct_on_fixture_slices() {
    for (series, label) in [(quarterly_log(), "quarterly"), (annual_log(), "annual")] {
        for start in [0, series.len() / 2 - 32, series.len() - 64] {
            let slice = series
                .window(series.times()[start], series.times()[start + 63])
                .unwrap();
            assert_eq!(slice.len(), 64);
            let grid = ScaleGrid::default_for(&slice).unwrap();
            let fast = cwt_slope(&slice, &grid).unwrap();
            let direct = direct_cwt_reference(&slice, &grid).unwrap();
            let worst = fast
                .coeffs()
                .iter()
                .zip(direct.coeffs())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(worst <= 1e-9, "{label} slice at {start}: {worst}");
            assert_eq!(fast.coi(), direct.coi());
        }
    }
}

#[test]
fn sinusoid_matches_gaussian_smoothed_derivative() {
    let omega = 2.0 * PI;
    let times: Vec<f64> = (0..=720).map(|i| 1900.0 + i as f64 / 12.0).collect();
    let series = log_series(times, |t| (omega * t).sin());
    let grid = ScaleGrid::default_for(&series).unwrap();
    let field = cwt_slope(&series, &grid).unwrap();
    let dev = max_valid_deviation(&field, |s, t| {
        omega * (omega * t).cos() * (-0.5 * s * s * omega * omega).exp()
    });
    assert!(dev <= 1e-4, "{dev}");
}

#[test]
fn sinusoid_time_shift_equivariance() {
    let omega = 2.0 * PI;
    let times: Vec<f64> = (0..=480).map(|i| 1900.0 + i as f64 / 12.0).collect();
    let shift = 7;
    let delta = shift as f64 / 12.0;
    let a = log_series(times.clone(), |t| (omega * t).sin());
    let b = log_series(times, |t| (omega * (t - delta)).sin());
    let grid = ScaleGrid::new(vec![0.25, 0.5, 1.0]).unwrap();
    let fa = cwt_slope(&a, &grid).unwrap();
    let fb = cwt_slope(&b, &grid).unwrap();
    for i in 0..grid.len() {
        for j in shift..fa.n_times() {
            if fb.in_coi(i, j) && fa.in_coi(i, j - shift) {
                assert!((fb.value(i, j) - fa.value(i, j - shift)).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn shifted_time_axis_gives_identical_coefficients() {
    let x = quarterly_log();
    let moved = TimeSeries::new(
        x.times().iter().map(|t| t + 12.5).collect(),
        x.values().to_vec(),
        SeriesKind::LogLevel,
        "moved",
    )
    .unwrap();
    let grid = ScaleGrid::default_for(&x).unwrap();
    let a = cwt_slope(&x, &grid).unwrap();
    let b = cwt_slope(&moved, &grid).unwrap();
    for (u, v) in a.coeffs().iter().zip(b.coeffs()) {
        assert!((u - v).abs() < 1e-12);
    }
    assert_eq!(a.coi(), b.coi());
}

#[test]
fn level_shift_invariance_on_fixture() {
    let x = quarterly_log();
    let shifted = TimeSeries::new(
        x.times().to_vec(),
        x.values().iter().map(|v| v + 3.7).collect(),
        SeriesKind::LogLevel,
        "shifted",
    )
    .unwrap();
    let grid = ScaleGrid::default_for(&x).unwrap();
    let a = cwt_slope(&x, &grid).unwrap();
    let b = cwt_slope(&shifted, &grid).unwrap();
    let worst = a
        .coeffs()
        .iter()
        .zip(b.coeffs())
        .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn sequential_and_parallel_agree_bitwise() {
    let x = annual_log();
    let grid = ScaleGrid::default_for(&x).unwrap();
    let a = cwt_slope_with(&x, &grid, Execution::Sequential).unwrap();
    let b = cwt_slope_with(&x, &grid, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn grid_incompatibility_and_kind_errors() {
    let x = quarterly_log();
    let too_small = ScaleGrid::new(vec![0.1, 1.0]).unwrap();
    assert!(matches!(
        cwt_slope(&x, &too_small),
        Err(WaveletError::GridIncompatible { scale, .. }) if scale == 0.1
    ));
    let too_large = ScaleGrid::new(vec![1.0, x.span() / 3.0]).unwrap();
    assert!(matches!(
        cwt_slope(&x, &too_large),
        Err(WaveletError::GridIncompatible { .. })
    ));
    assert!(matches!(
        direct_cwt_reference(&x, &too_large),
        Err(WaveletError::GridIncompatible { .. })
    ));
    let level = load_series(fixture("us_gdp_pc_annual.csv"), DateConvention::YearOnly).unwrap();
    let grid = ScaleGrid::new(vec![2.0]).unwrap();
    assert_eq!(cwt_slope(&level, &grid), Err(WaveletError::NotLogLevel));
}

#[test]
fn cone_of_influence_is_nested() {
    let x = annual_log();
    let grid = ScaleGrid::default_for(&x).unwrap();
    let field = cwt_slope(&x, &grid).unwrap();
    for i in 1..field.n_scales() {
        for j in 0..field.n_times() {
            assert!(!field.in_coi(i, j) || field.in_coi(i - 1, j));
        }
    }
    assert!(field.coeffs().iter().all(|v| v.is_finite()));
}

#[test]
fn scalogram_csv_round_trips_exactly() {
    let x = quarterly_log();
    let slice = x.window(1960.0, 1975.75).unwrap();
    let grid = ScaleGrid::new(vec![0.5, 1.0]).unwrap();
    let field = cwt_slope(&slice, &grid).unwrap();
    let mut buf = Vec::new();
    field.write_scalogram_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("scale_years,time_years,rho_per_year,coi")
    );
    for (k, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let (i, j) = (k / field.n_times(), k % field.n_times());
        assert_eq!(cols[0].parse::<f64>().unwrap(), grid.scales()[i]);
        assert_eq!(cols[1].parse::<f64>().unwrap(), field.times()[j]);
        assert_eq!(cols[2].parse::<f64>().unwrap(), field.value(i, j));
        assert_eq!(cols[3].parse::<bool>().unwrap(), field.in_coi(i, j));
    }
}

fn small_grid() -> ScaleGrid {
    ScaleGrid::new(vec![0.25, 0.5, 1.0, 2.0]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prop_level_shift(values in prop::collection::vec(-3.0f64..3.0, 40..90), c in -50.0f64..50.0) {
        let times = quarterly_axis(values.len());
        let a = TimeSeries::new(times.clone(), values.clone(), SeriesKind::LogLevel, "").unwrap();
        let b = TimeSeries::new(times, values.iter().map(|v| v + c).collect(), SeriesKind::LogLevel, "").unwrap();
        let fa = cwt_slope(&a, &small_grid()).unwrap();
        let fb = cwt_slope(&b, &small_grid()).unwrap();
        for (u, v) in fa.coeffs().iter().zip(fb.coeffs()) {
            prop_assert!((u - v).abs() <= 1e-12, "{} vs {}", u, v);
        }
    }

    #[test]
    fn prop_linearity(
        pairs in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 40..90),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let times = quarterly_axis(pairs.len());
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let combo: Vec<f64> = pairs.iter().map(|p| a * p.0 + b * p.1).collect();
        let mk = |v: Vec<f64>| TimeSeries::new(times.clone(), v, SeriesKind::LogLevel, "").unwrap();
        let fx = cwt_slope(&mk(x), &small_grid()).unwrap();
        let fy = cwt_slope(&mk(y), &small_grid()).unwrap();
        let fc = cwt_slope(&mk(combo), &small_grid()).unwrap();
        for k in 0..fc.coeffs().len() {
            let expected = a * fx.coeffs()[k] + b * fy.coeffs()[k];
            prop_assert!((fc.coeffs()[k] - expected).abs() <= 1e-9);
        }
    }

    #[test]
    fn prop_slope_calibration(p in -0.1f64..0.1, offset in -20.0f64..20.0, n in 40usize..120) {
        let times = quarterly_axis(n);
        let series = log_series(times, |t| p * (t - 1947.0) + offset);
        let field = cwt_slope(&series, &small_grid()).unwrap();
        prop_assert!(max_valid_deviation(&field, |_, _| p) <= 1e-6);
    }

    #[test]
    fn prop_fast_matches_direct(values in prop::collection::vec(-1.0f64..1.0, 30..70)) {
        let times = quarterly_axis(values.len());
        let series = TimeSeries::new(times, values, SeriesKind::LogLevel, "").unwrap();
        let grid = ScaleGrid::new(vec![0.25, 0.6, 1.3]).unwrap();
        let fast = cwt_slope(&series, &grid).unwrap();
        let direct = direct_cwt_reference(&series, &grid).unwrap();
        for (u, v) in fast.coeffs().iter().zip(direct.coeffs()) {
            prop_assert!((u - v).abs() <= 1e-9);
        }
    }
}
