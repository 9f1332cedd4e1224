//! End-to-end run: ingest, transform, skeleton, densities, trend and synthetic
//! series. Everything is computed in memory before the first file is written.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use growthscope::density::{
    conditional_stats, kde, regime_peaks_with_floor, skewness, DensitySource, GrowthDensity,
    RegimeEntry, RegimePeaks, RegimeSummary,
};
use growthscope::ingest::{log_transform, parse_series};
use growthscope::skeleton::{intercepts_at_scale, skeleton, ExtremumKind, SkeletonSet};
use growthscope::synthetic::{
    reconstruction_error, synthetic_gdp, ErrorSummary, ReconstructionError, SyntheticSeries,
};
use growthscope::trend::{ols_loggrowth, TrendFit};
use growthscope::wavelet::{cwt_slope, named_scales_within, realizable_range, WaveletError};
use growthscope::{CoiPolicy, Execution, ScaleGrid, TimeSeries, WaveletField};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{GridSpec, PipelineConfig, YearRange, DEFAULT_SYNTHETIC_SCALES};
use crate::error::CliError;
use crate::figures;

pub const REPORT_FILE: &str = "report.json";
pub const SCALOGRAM_FILE: &str = "scalogram.csv";
pub const SKELETON_FILE: &str = "skeleton.json";
pub const REGIMES_FILE: &str = "regimes.json";

/// Fewest in-cone coefficients a default density scale must offer.
const MIN_DENSITY_SAMPLES: usize = 2;
const KDE_INTEGRAL_RANGE: (f64, f64) = (0.999, 1.001);

/// Densities and statistics at one analysis scale.
#[derive(Debug, Clone)]
pub struct ScaleAnalysis {
    pub scale: f64,
    pub samples: Vec<f64>,
    pub full: GrowthDensity,
    pub full_peaks: RegimePeaks,
    /// Absent when no skeleton line crosses the scale.
    pub skeleton: Option<(GrowthDensity, RegimePeaks)>,
    /// Absent when the samples are all equal.
    pub quantile: Option<QuantileRow>,
}

#[derive(Debug, Clone)]
pub struct SyntheticRun {
    pub series: SyntheticSeries,
    pub error: ReconstructionError,
    pub intercepts: usize,
}

/// Every in-memory result of a run.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub level: TimeSeries,
    pub log: TimeSeries,
    pub field: WaveletField,
    pub skeleton: SkeletonSet,
    pub trend: TrendFit,
    pub scales: Vec<ScaleAnalysis>,
    pub synthetic: Vec<SyntheticRun>,
    pub report: Report,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: ToolInfo,
    pub input: InputInfo,
    pub config: ConfigEcho,
    pub grid: GridInfo,
    pub trend: TrendFit,
    pub skeleton: SkeletonInfo,
    pub regimes: Vec<RegimeSummary>,
    pub densities: Vec<DensityInfo>,
    pub quantile_stats: Vec<QuantileRow>,
    pub synthetic: Vec<SyntheticInfo>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputInfo {
    pub spec: String,
    pub sha256: String,
    pub date_convention: &'static str,
    /// Samples after windowing.
    pub samples: usize,
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub scales: Option<GridSpec>,
    pub pdf_scales: Vec<f64>,
    pub bandwidth: f64,
    pub prominence_floor: f64,
    pub coi: CoiPolicy,
    pub synthetic_scales: Vec<f64>,
    pub window: Option<YearRange>,
    pub exclusion: YearRange,
    pub quantile: f64,
    pub figures: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInfo {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkeletonInfo {
    pub lines: usize,
    pub crest_lines: usize,
    pub valley_lines: usize,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityInfo {
    pub scale: f64,
    pub source: DensitySource,
    pub file: String,
    pub sample_count: usize,
    pub bandwidth: f64,
    pub integral: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileRow {
    pub scale: f64,
    pub sample_count: usize,
    pub quantile: f64,
    pub quantile_value: f64,
    pub conditional_mean_above: f64,
    pub skewness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticInfo {
    pub s_star: f64,
    pub file: String,
    pub intercepts: usize,
    pub gdp0: f64,
    pub t0: f64,
    pub all: ErrorSummary,
    pub outside_exclusion: Option<ErrorSummary>,
}

/// Runs the analysis and writes every artifact into `config.out`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Analysis, CliError> {
    let analysis = analyze(config)?;
    let files = render_outputs(&analysis, config)?;
    write_outputs(&config.out, &files)?;
    Ok(analysis)
}

/// All numeric work of a run, without touching the output directory.
pub fn analyze(config: &PipelineConfig) -> Result<Analysis, CliError> {
    let bytes = fs::read(&config.input)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", config.input.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| CliError::Data(format!("{} is not UTF-8", config.input.display())))?;
    let label = config
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let full = parse_series(text, config.dates, label)
        .map_err(|e| CliError::Data(format!("{}: {e}", config.input.display())))?;
    let level = match config.window {
        Some(w) => {
            let (a, b) = w.bounds();
            full.window(a, b)
                .map_err(|e| CliError::Config(format!("window {}:{}: {e}", w.start, w.end)))?
        }
        None => full,
    };
    let log = log_transform(&level).map_err(|e| CliError::Data(e.to_string()))?;

    let (lo, hi) = realizable_range(&log);
    let in_range = |s: f64| s >= lo * (1.0 - 1e-9) && s <= hi * (1.0 + 1e-9);
    for (key, list) in [
        ("pdf-scales", &config.pdf_scales),
        ("synthetic-scales", &config.synthetic_scales),
    ] {
        if let Some(bad) = list.iter().flatten().find(|s| !in_range(**s)) {
            return Err(CliError::Config(format!(
                "{key}: scale {bad} outside the realizable range [{lo}, {hi}] years"
            )));
        }
    }

    let base = match config.scales {
        Some(spec) => ScaleGrid::log_spaced(spec.min, spec.max, spec.per_octave)
            .map_err(|e| CliError::Config(format!("scales: {e}")))?,
        None => ScaleGrid::default_for(&log).map_err(|e| CliError::Config(e.to_string()))?,
    };
    let mut extra = named_scales_within(lo, hi);
    extra.extend(config.pdf_scales.iter().flatten());
    extra.extend(config.synthetic_scales.iter().flatten());
    let grid = base
        .with_scales(&extra)
        .map_err(|e| CliError::Config(format!("scales: {e}")))?;

    let field = cwt_slope(&log, &grid).map_err(|e| match e {
        WaveletError::GridIncompatible { .. } => CliError::Config(format!("scales: {e}")),
        other => CliError::Data(other.to_string()),
    })?;
    if let Some(k) = field.coeffs().iter().position(|v| !v.is_finite()) {
        let (i, j) = (k / field.n_times(), k % field.n_times());
        return Err(CliError::numeric(
            "finite_coefficients",
            format!(
                "coefficient at scale {} time {} is {}",
                grid.scales()[i],
                field.times()[j],
                field.coeffs()[k]
            ),
        ));
    }

    let trend = ols_loggrowth(&log).map_err(|e| CliError::Data(e.to_string()))?;
    if !(trend.rho_lt.is_finite()
        && trend.intercept.is_finite()
        && (0.0..=1.0).contains(&trend.r_squared))
    {
        return Err(CliError::numeric("trend_fit", format!("{trend:?}")));
    }

    let skel = skeleton(&field, Execution::default());

    let index = |s: f64| grid.index_of(s).expect("requested scales were injected");
    let usable = |s: f64| field.samples(index(s), config.coi).len() >= MIN_DENSITY_SAMPLES;
    let pdf_scales: Vec<f64> = match &config.pdf_scales {
        Some(list) => list.clone(),
        None => named_scales_within(lo, hi)
            .into_iter()
            .filter(|s| usable(*s))
            .collect(),
    };
    let synthetic_scales: Vec<f64> = match &config.synthetic_scales {
        Some(list) => list.clone(),
        None => DEFAULT_SYNTHETIC_SCALES
            .into_iter()
            .filter(|s| in_range(*s) && usable(*s))
            .collect(),
    };

    let mut scales = Vec::with_capacity(pdf_scales.len());
    for &s in &pdf_scales {
        scales.push(analyze_scale(&field, &skel, index(s), config)?);
    }

    let exclusion = config.exclusion.bounds();
    let mut synthetic = Vec::with_capacity(synthetic_scales.len());
    for &s in &synthetic_scales {
        let s = grid.scales()[index(s)];
        let intercepts = intercepts_at_scale(&skel, s).expect("scale is on the grid");
        let series = synthetic_gdp(&intercepts, level.values()[0], level.start(), s)
            .map_err(|e| CliError::numeric("synthetic_compounding", format!("scale {s}: {e}")))?;
        if let Some(v) = series.values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(CliError::numeric(
                "synthetic_positive",
                format!("scale {s}: value {v}"),
            ));
        }
        let error = reconstruction_error(&series, &level, Some(exclusion))
            .map_err(|e| CliError::numeric("reconstruction_error", format!("scale {s}: {e}")))?;
        synthetic.push(SyntheticRun {
            series,
            error,
            intercepts: intercepts.len(),
        });
    }

    let report = build_report(
        config,
        &bytes,
        &log,
        &grid,
        &trend,
        &skel,
        &scales,
        &synthetic,
        (&pdf_scales, &synthetic_scales),
    );
    Ok(Analysis {
        level,
        log,
        field,
        skeleton: skel,
        trend,
        scales,
        synthetic,
        report,
    })
}

fn analyze_scale(
    field: &WaveletField,
    skel: &SkeletonSet,
    i: usize,
    config: &PipelineConfig,
) -> Result<ScaleAnalysis, CliError> {
    let scale = field.grid().scales()[i];
    let samples = field.samples(i, config.coi);
    if samples.is_empty() {
        return Err(CliError::Config(format!(
            "pdf-scales: no coefficient at scale {scale} lies inside the cone of influence; \
             use a smaller scale or --coi include"
        )));
    }
    let density =
        |values: &[f64], source: DensitySource| -> Result<(GrowthDensity, RegimePeaks), CliError> {
            let d = kde(values, config.bandwidth)
                .map_err(|e| CliError::numeric("kde_input", format!("scale {scale}: {e}")))?
                .labelled(scale, source);
            let integral = d.integral();
            if !(integral >= KDE_INTEGRAL_RANGE.0 && integral <= KDE_INTEGRAL_RANGE.1) {
                return Err(CliError::numeric(
                    "kde_normalization",
                    format!(
                        "{} density at scale {scale} integrates to {integral}",
                        source.as_str()
                    ),
                ));
            }
            let peaks = regime_peaks_with_floor(&d, config.prominence_floor);
            if let Some(high) = peaks.high {
                if !(peaks.low.location < high.location) {
                    return Err(CliError::numeric(
                        "regime_order",
                        format!("scale {scale}: {peaks:?}"),
                    ));
                }
            }
            Ok((d, peaks))
        };

    let (full, full_peaks) = density(&samples, DensitySource::FullField)?;
    let ridge: Vec<f64> = intercepts_at_scale(skel, scale)
        .expect("scale is on the grid")
        .iter()
        .map(|ic| ic.rho)
        .collect();
    let skeleton = if ridge.is_empty() {
        None
    } else {
        Some(density(&ridge, DensitySource::Skeleton)?)
    };

    let quantile = match conditional_stats(&samples, config.quantile) {
        Ok(stats) => {
            let row = QuantileRow {
                scale,
                sample_count: samples.len(),
                quantile: stats.quantile,
                quantile_value: stats.quantile_value,
                conditional_mean_above: stats.conditional_mean_above,
                skewness: skewness(&samples),
            };
            let finite = [row.quantile_value, row.conditional_mean_above, row.skewness]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return Err(CliError::numeric("finite_statistics", format!("{row:?}")));
            }
            Some(row)
        }
        Err(_) => None,
    };

    Ok(ScaleAnalysis {
        scale,
        samples,
        full,
        full_peaks,
        skeleton,
        quantile,
    })
}

pub fn density_file(scale: f64, source: DensitySource) -> String {
    format!("density_{}_{scale}y.csv", source.as_str())
}

pub fn synthetic_file(scale: f64) -> String {
    format!("synthetic_{scale}y.csv")
}

#[allow(clippy::too_many_arguments)]
fn build_report(
    config: &PipelineConfig,
    input_bytes: &[u8],
    log: &TimeSeries,
    grid: &ScaleGrid,
    trend: &TrendFit,
    skel: &SkeletonSet,
    scales: &[ScaleAnalysis],
    synthetic: &[SyntheticRun],
    (pdf_scales, synthetic_scales): (&[f64], &[f64]),
) -> Report {
    let digest = Sha256::digest(input_bytes);
    let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();

    let mut full_entries = Vec::new();
    let mut skeleton_entries = Vec::new();
    let mut densities = Vec::new();
    for sa in scales {
        full_entries.push(RegimeEntry::new(sa.scale, &sa.full_peaks));
        densities.push(density_info(&sa.full));
        if let Some((d, peaks)) = &sa.skeleton {
            skeleton_entries.push(RegimeEntry::new(sa.scale, peaks));
            densities.push(density_info(d));
        }
    }
    let regimes = vec![
        RegimeSummary {
            source: DensitySource::FullField,
            rho_lt: trend.rho_lt,
            entries: full_entries,
        },
        RegimeSummary {
            source: DensitySource::Skeleton,
            rho_lt: trend.rho_lt,
            entries: skeleton_entries,
        },
    ];

    let synthetic_info: Vec<SyntheticInfo> = synthetic
        .iter()
        .map(|run| SyntheticInfo {
            s_star: run.series.s_star,
            file: synthetic_file(run.series.s_star),
            intercepts: run.intercepts,
            gdp0: run.series.gdp0,
            t0: run.series.t0,
            all: run.error.all,
            outside_exclusion: run.error.outside_exclusion,
        })
        .collect();

    let mut files = vec![
        SCALOGRAM_FILE.to_string(),
        SKELETON_FILE.to_string(),
        REGIMES_FILE.to_string(),
    ];
    files.extend(densities.iter().map(|d| d.file.clone()));
    files.extend(synthetic_info.iter().map(|s| s.file.clone()));
    if config.figures {
        files.extend(figures::FIGURE_FILES.iter().map(|f| f.to_string()));
    }

    Report {
        tool: ToolInfo {
            name: "growthscope",
            version: env!("CARGO_PKG_VERSION"),
        },
        input: InputInfo {
            spec: config.input_spec.clone(),
            sha256,
            date_convention: config.dates.as_str(),
            samples: log.len(),
            start: log.start(),
            end: log.end(),
            step: log.step(),
        },
        config: ConfigEcho {
            scales: config.scales,
            pdf_scales: pdf_scales.to_vec(),
            bandwidth: config.bandwidth,
            prominence_floor: config.prominence_floor,
            coi: config.coi,
            synthetic_scales: synthetic_scales.to_vec(),
            window: config.window,
            exclusion: config.exclusion,
            quantile: config.quantile,
            figures: config.figures,
        },
        grid: GridInfo {
            count: grid.len(),
            min: grid.scales()[0],
            max: grid.scales()[grid.len() - 1],
            scales: grid.scales().to_vec(),
        },
        trend: *trend,
        skeleton: SkeletonInfo {
            lines: skel.lines.len(),
            crest_lines: skel
                .lines
                .iter()
                .filter(|l| l.kind == ExtremumKind::Crest)
                .count(),
            valley_lines: skel
                .lines
                .iter()
                .filter(|l| l.kind == ExtremumKind::Valley)
                .count(),
            points: skel.point_count(),
        },
        regimes,
        densities,
        quantile_stats: scales.iter().filter_map(|s| s.quantile).collect(),
        synthetic: synthetic_info,
        files,
    }
}

fn density_info(d: &GrowthDensity) -> DensityInfo {
    let scale = d.scale.expect("pipeline densities are labelled");
    let source = d.source.expect("pipeline densities are labelled");
    DensityInfo {
        scale,
        source,
        file: density_file(scale, source),
        sample_count: d.sample_count,
        bandwidth: d.bandwidth,
        integral: d.integral(),
    }
}

/// Serializes every artifact, figures included unless disabled.
pub fn render_outputs(
    analysis: &Analysis,
    config: &PipelineConfig,
) -> Result<Vec<(String, Vec<u8>)>, CliError> {
    let render = |name: &str, result: io::Result<()>| {
        result.map_err(|source| CliError::Output {
            path: name.to_string(),
            source,
        })
    };
    let mut files = Vec::new();

    let mut buf = Vec::new();
    render(SCALOGRAM_FILE, analysis.field.write_scalogram_csv(&mut buf))?;
    files.push((SCALOGRAM_FILE.to_string(), buf));

    let mut buf = Vec::new();
    render(SKELETON_FILE, analysis.skeleton.write_json(&mut buf))?;
    buf.push(b'\n');
    files.push((SKELETON_FILE.to_string(), buf));

    files.push((
        REGIMES_FILE.to_string(),
        json_bytes(&analysis.report.regimes),
    ));

    for sa in &analysis.scales {
        let dens = std::iter::once(&sa.full).chain(sa.skeleton.as_ref().map(|(d, _)| d));
        for d in dens {
            let name = density_file(sa.scale, d.source.expect("labelled"));
            let mut buf = Vec::new();
            render(&name, d.write_csv(&mut buf))?;
            files.push((name, buf));
        }
    }
    for run in &analysis.synthetic {
        let name = synthetic_file(run.series.s_star);
        let mut buf = Vec::new();
        render(&name, run.series.write_csv(&mut buf))?;
        files.push((name, buf));
    }
    if config.figures {
        files.extend(figures::render_all(analysis));
    }
    files.push((REPORT_FILE.to_string(), json_bytes(&analysis.report)));
    Ok(files)
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut buf = serde_json::to_vec_pretty(value).expect("report types serialize");
    buf.push(b'\n');
    buf
}

/// Writes `files` into `out` through a staging directory so that a failed
/// write leaves no new artifact behind.
pub fn write_outputs(out: &Path, files: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    let fail = |path: &Path, source: io::Error| CliError::Output {
        path: path.display().to_string(),
        source,
    };
    let existed = out.exists();
    fs::create_dir_all(out).map_err(|e| fail(out, e))?;
    let staging = out.join(".growthscope-staging");
    let cleanup = |staging: &Path| {
        let _ = fs::remove_dir_all(staging);
        if !existed {
            let _ = fs::remove_dir(out);
        }
    };

    let staged = (|| -> Result<Vec<(PathBuf, PathBuf)>, CliError> {
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| fail(&staging, e))?;
        }
        fs::create_dir(&staging).map_err(|e| fail(&staging, e))?;
        let mut moves = Vec::with_capacity(files.len());
        for (name, bytes) in files {
            let tmp = staging.join(name);
            fs::write(&tmp, bytes).map_err(|e| fail(&tmp, e))?;
            moves.push((tmp, out.join(name)));
        }
        Ok(moves)
    })();
    let moves = match staged {
        Ok(m) => m,
        Err(e) => {
            cleanup(&staging);
            return Err(e);
        }
    };
    for (from, to) in moves {
        if let Err(e) = fs::rename(&from, &to) {
            cleanup(&staging);
            return Err(fail(&to, e));
        }
    }
    fs::remove_dir(&staging).map_err(|e| fail(&staging, e))
}
