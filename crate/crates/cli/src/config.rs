//! Analysis settings. Values come from three layers, highest first: command
//! line flags, an INI-style config file, built-in defaults.

use std::collections::BTreeMap;
use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use growthscope::density::{DEFAULT_BANDWIDTH, DEFAULT_PROMINENCE_FLOOR};
use growthscope::{CoiPolicy, DateConvention};
use ini::Ini;
use serde::Serialize;

use crate::error::CliError;

pub const FIXTURES_ENV: &str = "GROWTHSCOPE_FIXTURES";
pub const DEFAULT_EXCLUSION: YearRange = YearRange {
    start: 1940,
    end: 1955,
};
pub const DEFAULT_QUANTILE: f64 = 0.5;
pub const DEFAULT_SYNTHETIC_SCALES: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

/// Keys accepted in a config file; each matches a flag of the same name.
const KEYS: [&str; 13] = [
    "input",
    "dates",
    "scales",
    "pdf-scales",
    "bandwidth",
    "prominence-floor",
    "coi",
    "synthetic-scales",
    "window",
    "exclusion",
    "quantile",
    "no-figures",
    "out",
];

#[derive(Debug, Clone, Default, Args)]
pub struct AnalyzeArgs {
    /// INI-style file of `key = value` settings named like these flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Level series CSV, or @quarterly / @annual / @<file> for a bundled fixture.
    #[arg(long)]
    pub input: Option<String>,
    /// year_only | year_quarter | year_decimal
    #[arg(long)]
    pub dates: Option<String>,
    /// Log-spaced analysis grid as MIN:MAX:PER_OCTAVE, in years.
    #[arg(long, value_name = "MIN:MAX:PER_OCTAVE")]
    pub scales: Option<String>,
    /// Scales (years) at which densities and regime peaks are computed.
    #[arg(long, value_name = "S1,S2,...")]
    pub pdf_scales: Option<String>,
    /// Gaussian KDE bandwidth, in growth-rate units.
    #[arg(long)]
    pub bandwidth: Option<String>,
    /// Fraction of the density maximum a mode's prominence must reach.
    #[arg(long)]
    pub prominence_floor: Option<String>,
    /// exclude | include coefficients outside the cone of influence.
    #[arg(long)]
    pub coi: Option<String>,
    /// Scales (years) whose skeleton drives a synthetic series.
    #[arg(long, value_name = "S1,S2,...")]
    pub synthetic_scales: Option<String>,
    /// Restrict the analysis to whole calendar years YYYY:YYYY.
    #[arg(long, value_name = "YYYY:YYYY")]
    pub window: Option<String>,
    /// Years left out of the reconstruction error summary.
    #[arg(long, value_name = "YYYY:YYYY")]
    pub exclusion: Option<String>,
    /// Quantile for the conditional growth statistics.
    #[arg(long)]
    pub quantile: Option<String>,
    /// Skip the SVG figures.
    #[arg(long)]
    pub no_figures: bool,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub per_octave: usize,
}

/// Whole calendar years `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

impl YearRange {
    /// Decimal-year bounds, inclusive, covering every sample dated in the
    /// range whatever the sampling step.
    pub fn bounds(self) -> (f64, f64) {
        (f64::from(self.start), f64::from(self.end) + 1.0 - 1e-6)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// The input as written by the user, echoed in the report.
    pub input_spec: String,
    pub input: PathBuf,
    pub dates: DateConvention,
    pub scales: Option<GridSpec>,
    pub pdf_scales: Option<Vec<f64>>,
    pub bandwidth: f64,
    pub prominence_floor: f64,
    pub coi: CoiPolicy,
    pub synthetic_scales: Option<Vec<f64>>,
    pub window: Option<YearRange>,
    pub exclusion: YearRange,
    pub quantile: f64,
    pub figures: bool,
    pub out: PathBuf,
}

impl PipelineConfig {
    /// Defaults for everything except the input and output locations.
    pub fn new(input: impl Into<PathBuf>, dates: DateConvention, out: impl Into<PathBuf>) -> Self {
        let input = input.into();
        Self {
            input_spec: input.display().to_string(),
            input,
            dates,
            scales: None,
            pdf_scales: None,
            bandwidth: DEFAULT_BANDWIDTH,
            prominence_floor: DEFAULT_PROMINENCE_FLOOR,
            coi: CoiPolicy::default(),
            synthetic_scales: None,
            window: None,
            exclusion: DEFAULT_EXCLUSION,
            quantile: DEFAULT_QUANTILE,
            figures: true,
            out: out.into(),
        }
    }

    /// Merges flags over the optional config file over defaults.
    pub fn resolve(args: &AnalyzeArgs) -> Result<Self, CliError> {
        let mut layer = match &args.config {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        for (key, value) in flag_values(args) {
            layer.insert(key.to_string(), value);
        }
        Self::from_settings(&layer)
    }

    fn from_settings(raw: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let get = |key: &str| raw.get(key).map(String::as_str);

        let input_spec = get("input")
            .ok_or_else(|| CliError::Config("no input given (--input or `input =`)".into()))?
            .to_string();
        let (input, alias_dates) = resolve_input(&input_spec)?;
        let dates = match get("dates") {
            Some(d) => d
                .parse::<DateConvention>()
                .map_err(|e| CliError::Config(format!("dates: {e}")))?,
            None => alias_dates.ok_or_else(|| {
                CliError::Config("no date convention given (--dates or `dates =`)".into())
            })?,
        };
        let out = get("out").ok_or_else(|| {
            CliError::Config("no output directory given (--out or `out =`)".into())
        })?;

        let mut config = PipelineConfig::new(input, dates, out);
        config.input_spec = input_spec;
        if let Some(v) = get("scales") {
            config.scales = Some(parse_grid_spec(v)?);
        }
        if let Some(v) = get("pdf-scales") {
            config.pdf_scales = Some(parse_scale_list("pdf-scales", v)?);
        }
        if let Some(v) = get("bandwidth") {
            config.bandwidth = parse_positive("bandwidth", v)?;
        }
        if let Some(v) = get("prominence-floor") {
            config.prominence_floor = parse_number("prominence-floor", v)?;
            if !(0.0..1.0).contains(&config.prominence_floor) {
                return Err(CliError::Config(format!(
                    "prominence-floor must lie in [0, 1), got {v}"
                )));
            }
        }
        if let Some(v) = get("coi") {
            config.coi = v
                .parse()
                .map_err(|e| CliError::Config(format!("coi: {e}")))?;
        }
        if let Some(v) = get("synthetic-scales") {
            config.synthetic_scales = Some(parse_scale_list("synthetic-scales", v)?);
        }
        if let Some(v) = get("window") {
            config.window = Some(parse_year_range("window", v)?);
        }
        if let Some(v) = get("exclusion") {
            config.exclusion = parse_year_range("exclusion", v)?;
        }
        if let Some(v) = get("quantile") {
            config.quantile = parse_number("quantile", v)?;
            if !(config.quantile > 0.0 && config.quantile < 1.0) {
                return Err(CliError::Config(format!(
                    "quantile must lie in (0, 1), got {v}"
                )));
            }
        }
        if let Some(v) = get("no-figures") {
            config.figures = !parse_bool("no-figures", v)?;
        }
        Ok(config)
    }
}

fn flag_values(args: &AnalyzeArgs) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    let mut push = |key: &'static str, value: &Option<String>| {
        if let Some(v) = value {
            out.push((key, v.clone()));
        }
    };
    push("input", &args.input);
    push("dates", &args.dates);
    push("scales", &args.scales);
    push("pdf-scales", &args.pdf_scales);
    push("bandwidth", &args.bandwidth);
    push("prominence-floor", &args.prominence_floor);
    push("coi", &args.coi);
    push("synthetic-scales", &args.synthetic_scales);
    push("window", &args.window);
    push("exclusion", &args.exclusion);
    push("quantile", &args.quantile);
    if args.no_figures {
        out.push(("no-figures", "true".to_string()));
    }
    if let Some(p) = &args.out {
        out.push(("out", p.display().to_string()));
    }
    out
}

/// Reads `key = value` lines, either at top level or under `[analyze]`.
/// Underscores in keys are accepted in place of hyphens.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, String> {
    let ini = Ini::load_from_str(text).map_err(|e| e.to_string())?;
    let mut settings = BTreeMap::new();
    for (section, props) in ini.iter() {
        if let Some(name) = section {
            if name != "analyze" {
                return Err(format!("unknown section [{name}]"));
            }
        }
        for (key, value) in props.iter() {
            let key = key.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return Err(format!("unknown key '{key}'"));
            }
            if settings
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(format!("key '{key}' given twice"));
            }
        }
    }
    Ok(settings)
}

/// Directory searched for `@name` inputs.
pub fn fixtures_dir() -> PathBuf {
    match env::var_os(FIXTURES_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"),
    }
}

/// Maps `@quarterly`, `@annual` and `@<file>` onto the fixture directory. The
/// two named fixtures also imply their date convention.
fn resolve_input(spec: &str) -> Result<(PathBuf, Option<DateConvention>), CliError> {
    let Some(name) = spec.strip_prefix('@') else {
        return Ok((PathBuf::from(spec), None));
    };
    let (file, dates) = match name {
        "quarterly" => ("us_gdp_pc_quarterly.csv", Some(DateConvention::YearQuarter)),
        "annual" => ("us_gdp_pc_annual.csv", Some(DateConvention::YearOnly)),
        "" => return Err(CliError::Config("empty fixture name '@'".into())),
        other => (other, None),
    };
    Ok((fixtures_dir().join(file), dates))
}

fn parse_number(key: &str, v: &str) -> Result<f64, CliError> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::Config(format!("{key}: '{v}' is not a number")))
}

fn parse_positive(key: &str, v: &str) -> Result<f64, CliError> {
    let x = parse_number(key, v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(CliError::Config(format!("{key} must be positive, got {v}")))
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::Config(format!("{key}: '{v}' is not a boolean"))),
    }
}

pub fn parse_scale_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    let mut scales = v
        .split(',')
        .map(|s| parse_positive(key, s))
        .collect::<Result<Vec<_>, _>>()?;
    if scales.is_empty() {
        return Err(CliError::Config(format!("{key}: empty list")));
    }
    scales.sort_by(f64::total_cmp);
    scales.dedup();
    Ok(scales)
}

pub fn parse_grid_spec(v: &str) -> Result<GridSpec, CliError> {
    let parts: Vec<&str> = v.split(':').collect();
    let [min, max, per_octave] = parts[..] else {
        return Err(CliError::Config(format!(
            "scales: expected MIN:MAX:PER_OCTAVE, got '{v}'"
        )));
    };
    let min = parse_positive("scales", min)?;
    let max = parse_positive("scales", max)?;
    let per_octave = per_octave
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("scales: bad scales per octave in '{v}'")))?;
    if min >= max {
        return Err(CliError::Config(format!(
            "scales: MIN must be below MAX in '{v}'"
        )));
    }
    Ok(GridSpec {
        min,
        max,
        per_octave,
    })
}

pub fn parse_year_range(key: &str, v: &str) -> Result<YearRange, CliError> {
    let bad = || CliError::Config(format!("{key}: expected YYYY:YYYY, got '{v}'"));
    let (a, b) = v.split_once(':').ok_or_else(bad)?;
    let start: i32 = a.trim().parse().map_err(|_| bad())?;
    let end: i32 = b.trim().parse().map_err(|_| bad())?;
    if start > end {
        return Err(CliError::Config(format!(
            "{key}: start year after end year in '{v}'"
        )));
    }
    Ok(YearRange { start, end })
}
