//! Static SVG figures. Coordinates are printed with fixed precision so that
//! identical inputs give identical bytes.

use std::fmt::Write as _;

use growthscope::density::GrowthDensity;
use growthscope::skeleton::ExtremumKind;

use crate::pipeline::Analysis;

pub const FIGURE_FILES: [&str; 4] = [
    "scalogram.svg",
    "skeleton.svg",
    "densities.svg",
    "synthetic.svg",
];

/// Scales whose skeleton intercepts get a rate label.
const ANNOTATED_SCALES: [f64; 4] = [0.25, 0.5, 1.5, 3.0];
const PALETTE_LEVELS: usize = 64;
const SERIES_COLORS: [&str; 6] = [
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub fn render_all(analysis: &Analysis) -> Vec<(String, Vec<u8>)> {
    vec![
        (
            FIGURE_FILES[0].to_string(),
            scalogram(analysis).into_bytes(),
        ),
        (FIGURE_FILES[1].to_string(), skeleton(analysis).into_bytes()),
        (
            FIGURE_FILES[2].to_string(),
            densities(analysis).into_bytes(),
        ),
        (
            FIGURE_FILES[3].to_string(),
            synthetic(analysis).into_bytes(),
        ),
    ]
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Self {
            body: String::new(),
            width,
            height,
        }
    }

    fn raw(&mut self, s: &str) {
        self.body.push_str(s);
        self.body.push('\n');
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, style: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" {style}/>"#
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, style: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" {style}/>"#
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, size: f64, content: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="{size}">{}</text>"#,
            escape(content)
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], style: &str) {
        if points.len() < 2 {
            return;
        }
        let mut coords = String::new();
        for (i, (x, y)) in points.iter().enumerate() {
            if i > 0 {
                coords.push(' ');
            }
            let _ = write!(coords, "{x:.2},{y:.2}");
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{coords}" fill="none" {style}/>"#
        );
    }

    fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
             viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n\
             <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// A plotting rectangle mapping data coordinates to pixels. The y axis may
/// be logarithmic (base 2).
#[derive(Clone, Copy)]
struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: (f64, f64),
    y: (f64, f64),
    log_y: bool,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        let (lo, hi, v) = if self.log_y {
            (self.y.0.log2(), self.y.1.log2(), y.log2())
        } else {
            (self.y.0, self.y.1, y)
        };
        self.top + self.height - (v - lo) / (hi - lo) * self.height
    }

    fn bottom(&self) -> f64 {
        self.top + self.height
    }

    fn clip_id(&self, svg: &mut Svg, id: &str) {
        svg.raw(&format!(
            r#"<defs><clipPath id="{id}"><rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/></clipPath></defs>"#,
            self.left, self.top, self.width, self.height
        ));
    }

    /// Box, ticks and labels.
    fn axes(&self, svg: &mut Svg, x_label: &str, y_label: &str, y_fmt: &dyn Fn(f64) -> String) {
        svg.rect(
            self.left,
            self.top,
            self.width,
            self.height,
            r#"fill="none" stroke="black""#,
        );
        for t in nice_ticks(self.x.0, self.x.1, 8) {
            let x = self.px(t);
            svg.line(
                x,
                self.bottom(),
                x,
                self.bottom() + 4.0,
                r#"stroke="black""#,
            );
            svg.text(x, self.bottom() + 16.0, "middle", 11.0, &trim_number(t));
        }
        let y_ticks = if self.log_y {
            log2_ticks(self.y.0, self.y.1)
        } else {
            nice_ticks(self.y.0, self.y.1, 6)
        };
        for t in y_ticks {
            let y = self.py(t);
            svg.line(self.left - 4.0, y, self.left, y, r#"stroke="black""#);
            svg.text(self.left - 6.0, y + 4.0, "end", 11.0, &y_fmt(t));
        }
        svg.text(
            self.left + self.width / 2.0,
            self.bottom() + 32.0,
            "middle",
            12.0,
            x_label,
        );
        let (cx, cy) = (self.left - 48.0, self.top + self.height / 2.0);
        let _ = writeln!(
            svg.body,
            r#"<text x="{cx:.2}" y="{cy:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {cx:.2} {cy:.2})">{}</text>"#,
            escape(y_label)
        );
    }
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn log2_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let first = lo.log2().ceil() as i32;
    let last = hi.log2().floor() as i32;
    (first..=last).map(|k| 2f64.powi(k)).collect()
}

fn trim_number(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn percent(v: f64) -> String {
    trim_number((v * 1000.0).round() / 10.0) + "%"
}

/// Jet-like ramp: blue, cyan, green (centre), yellow, red.
fn jet(u: f64) -> (u8, u8, u8) {
    let u = u.clamp(0.0, 1.0);
    let channel = |c: f64| ((1.5 - (4.0 * u - c).abs()).clamp(0.0, 1.0) * 255.0).round() as u8;
    (channel(3.0), channel(2.0), channel(1.0))
}

fn hex((r, g, b): (u8, u8, u8)) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Geometric cell edges around each scale of a log grid.
fn scale_edges(scales: &[f64]) -> Vec<f64> {
    let n = scales.len();
    let mut edges = Vec::with_capacity(n + 1);
    if n == 1 {
        return vec![scales[0] / 2f64.sqrt(), scales[0] * 2f64.sqrt()];
    }
    edges.push(scales[0] * (scales[0] / scales[1]).sqrt());
    for w in scales.windows(2) {
        edges.push((w[0] * w[1]).sqrt());
    }
    edges.push(scales[n - 1] * (scales[n - 1] / scales[n - 2]).sqrt());
    edges
}

fn time_range(a: &Analysis) -> (f64, f64) {
    let half = 0.5 * a.log.step();
    (a.log.start() - half, a.log.end() + half)
}

/// Heatmap of the growth-rate field with the log level and trend above it.
fn scalogram(a: &Analysis) -> String {
    let mut svg = Svg::new(960.0, 700.0);
    let field = &a.field;
    let scales = field.grid().scales();
    let edges = scale_edges(scales);
    let x = time_range(a);

    let top = Frame {
        left: 80.0,
        top: 40.0,
        width: 760.0,
        height: 150.0,
        x,
        y: padded(a.log.values()),
        log_y: false,
    };
    svg.text(
        480.0,
        24.0,
        "middle",
        14.0,
        &format!("{}: growth-rate scalogram", a.level.label()),
    );
    let series: Vec<(f64, f64)> = a
        .log
        .times()
        .iter()
        .zip(a.log.values())
        .map(|(t, v)| (top.px(*t), top.py(*v)))
        .collect();
    svg.polyline(&series, r#"stroke="black" stroke-width="1.2""#);
    let trend = [
        (
            top.px(a.log.start()),
            top.py(a.trend.predict(a.log.start())),
        ),
        (top.px(a.log.end()), top.py(a.trend.predict(a.log.end()))),
    ];
    svg.polyline(
        &trend,
        r##"stroke="#2ca02c" stroke-width="1.5" stroke-dasharray="6 4""##,
    );
    top.axes(&mut svg, "", "log level", &|v| trim_number(v));
    svg.text(
        top.left + 8.0,
        top.top + 16.0,
        "start",
        11.0,
        &format!("trend {} per year", percent(a.trend.rho_lt)),
    );

    let heat = Frame {
        left: 80.0,
        top: 250.0,
        width: 760.0,
        height: 400.0,
        x,
        y: (edges[0], edges[edges.len() - 1]),
        log_y: true,
    };
    let valid: Vec<f64> = field.valid_coefficients().collect();
    let spread = if valid.len() > 1 {
        let mean = valid.iter().sum::<f64>() / valid.len() as f64;
        (valid.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / valid.len() as f64).sqrt()
    } else {
        0.0
    };
    let half_range = (3.0 * spread).max(1e-4);
    let centre = a.trend.rho_lt;
    let level_of = |v: f64| -> usize {
        let u = ((v - centre) / half_range + 1.0) / 2.0;
        ((u.clamp(0.0, 1.0) * (PALETTE_LEVELS - 1) as f64).round()) as usize
    };
    let color = |level: usize| hex(jet(level as f64 / (PALETTE_LEVELS - 1) as f64));

    let times = field.times();
    let dt = field.time_step();
    heat.clip_id(&mut svg, "heat");
    svg.raw(r#"<g clip-path="url(#heat)" shape-rendering="crispEdges">"#);
    for i in 0..field.n_scales() {
        let (y_hi, y_lo) = (heat.py(edges[i + 1]), heat.py(edges[i]));
        let row = field.row(i);
        let coi = field.coi_row(i);
        // Merge runs of equal colour and cone status into one rectangle.
        let mut j = 0;
        while j < times.len() {
            let (lvl, inside) = (level_of(row[j]), coi[j]);
            let mut k = j + 1;
            while k < times.len() && level_of(row[k]) == lvl && coi[k] == inside {
                k += 1;
            }
            let x0 = heat.px(times[j] - dt / 2.0);
            let x1 = heat.px(times[k - 1] + dt / 2.0);
            let opacity = if inside {
                ""
            } else {
                r#" fill-opacity="0.35""#
            };
            // A small overlap hides hairline seams from coordinate rounding.
            svg.rect(
                x0,
                y_hi,
                x1 - x0 + 0.3,
                y_lo - y_hi + 0.3,
                &format!(r#"fill="{}"{opacity}"#, color(lvl)),
            );
            j = k;
        }
    }
    svg.raw("</g>");
    heat.axes(&mut svg, "time (years)", "scale (years)", &|v| {
        trim_number(v)
    });

    // Colour bar.
    let (bx, by, bh) = (860.0, heat.top, heat.height);
    for lvl in 0..PALETTE_LEVELS {
        let y = by + bh - (lvl + 1) as f64 * bh / PALETTE_LEVELS as f64;
        svg.rect(
            bx,
            y,
            18.0,
            bh / PALETTE_LEVELS as f64 + 0.5,
            &format!(r#"fill="{}" stroke="none""#, color(lvl)),
        );
    }
    svg.rect(bx, by, 18.0, bh, r#"fill="none" stroke="black""#);
    for (frac, v) in [
        (0.0, centre - half_range),
        (0.5, centre),
        (1.0, centre + half_range),
    ] {
        let y = by + bh - frac * bh;
        svg.text(bx + 22.0, y + 4.0, "start", 10.0, &percent(v));
    }
    svg.finish()
}

fn padded(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
    (lo - pad, hi + pad)
}

/// Crest and valley lines in the time-scale plane.
fn skeleton(a: &Analysis) -> String {
    let mut svg = Svg::new(960.0, 560.0);
    let scales = a.field.grid().scales();
    let edges = scale_edges(scales);
    let frame = Frame {
        left: 80.0,
        top: 40.0,
        width: 760.0,
        height: 460.0,
        x: time_range(a),
        y: (edges[0], edges[edges.len() - 1]),
        log_y: true,
    };
    svg.text(
        480.0,
        24.0,
        "middle",
        14.0,
        &format!("{}: skeleton", a.level.label()),
    );
    frame.clip_id(&mut svg, "skel");
    svg.raw(r#"<g clip-path="url(#skel)">"#);
    for line in &a.skeleton.lines {
        let style = match line.kind {
            ExtremumKind::Crest => r##"stroke="#d62728" stroke-width="1""##,
            ExtremumKind::Valley => r##"stroke="#1f77b4" stroke-width="1""##,
        };
        let pts: Vec<(f64, f64)> = line
            .points
            .iter()
            .map(|p| (frame.px(p.time), frame.py(p.scale)))
            .collect();
        if pts.len() == 1 {
            let _ = writeln!(
                svg.body,
                r#"<circle cx="{:.2}" cy="{:.2}" r="1.2" {style}/>"#,
                pts[0].0, pts[0].1
            );
        } else {
            svg.polyline(&pts, style);
        }
    }
    for &s in &ANNOTATED_SCALES {
        let Some(i) = a.field.grid().index_of(s) else {
            continue;
        };
        let s = scales[i];
        let y = frame.py(s);
        svg.line(
            frame.left,
            y,
            frame.left + frame.width,
            y,
            r##"stroke="#999999" stroke-dasharray="2 3""##,
        );
        let intercepts =
            growthscope::skeleton::intercepts_at_scale(&a.skeleton, s).unwrap_or_default();
        for (k, ic) in intercepts.iter().enumerate() {
            // Alternate above and below the guide so neighbours stay legible.
            let dy = if k % 2 == 0 { -3.0 } else { 10.0 };
            svg.text(frame.px(ic.time), y + dy, "middle", 8.0, &percent(ic.rho));
        }
    }
    svg.raw("</g>");
    frame.axes(&mut svg, "time (years)", "scale (years)", &|v| {
        trim_number(v)
    });
    svg.text(850.0, 60.0, "start", 11.0, "crest");
    svg.line(850.0, 66.0, 890.0, 66.0, r##"stroke="#d62728""##);
    svg.text(850.0, 84.0, "start", 11.0, "valley");
    svg.line(850.0, 90.0, 890.0, 90.0, r##"stroke="#1f77b4""##);
    svg.finish()
}

/// One panel per density scale: full-field and skeleton densities with the
/// regime peaks and the long-term rate marked.
fn densities(a: &Analysis) -> String {
    let cols = 3usize;
    let rows = a.scales.len().div_ceil(cols).max(1);
    let (pw, ph) = (280.0, 200.0);
    let mut svg = Svg::new(
        80.0 + cols as f64 * (pw + 40.0),
        60.0 + rows as f64 * (ph + 70.0),
    );
    svg.text(
        svg.width / 2.0,
        24.0,
        "middle",
        14.0,
        &format!("{}: growth-rate densities", a.level.label()),
    );
    if a.scales.is_empty() {
        svg.text(svg.width / 2.0, 120.0, "middle", 12.0, "no density scales");
    }
    for (k, sa) in a.scales.iter().enumerate() {
        let (r, c) = (k / cols, k % cols);
        let mut x = (sa.full.grid[0], sa.full.grid[sa.full.grid.len() - 1]);
        let mut y_max = sa.full.max_pdf();
        if let Some((d, _)) = &sa.skeleton {
            x = (x.0.min(d.grid[0]), x.1.max(d.grid[d.grid.len() - 1]));
            y_max = y_max.max(d.max_pdf());
        }
        let frame = Frame {
            left: 70.0 + c as f64 * (pw + 40.0),
            top: 50.0 + r as f64 * (ph + 70.0),
            width: pw,
            height: ph,
            x,
            y: (0.0, 1.08 * y_max.max(f64::MIN_POSITIVE)),
            log_y: false,
        };
        let curve = |d: &GrowthDensity| -> Vec<(f64, f64)> {
            d.grid
                .iter()
                .zip(&d.pdf)
                .map(|(g, p)| (frame.px(*g), frame.py(*p)))
                .collect()
        };
        let mark = |svg: &mut Svg, v: f64, style: &str| {
            if v >= frame.x.0 && v <= frame.x.1 {
                svg.line(frame.px(v), frame.top, frame.px(v), frame.bottom(), style);
            }
        };
        mark(
            &mut svg,
            a.trend.rho_lt,
            r##"stroke="#2ca02c" stroke-dasharray="4 3""##,
        );
        for m in std::iter::once(sa.full_peaks.low).chain(sa.full_peaks.high) {
            mark(
                &mut svg,
                m.location,
                r##"stroke="#d62728" stroke-width="0.8""##,
            );
        }
        svg.polyline(&curve(&sa.full), r#"stroke="black" stroke-width="1.2""#);
        if let Some((d, _)) = &sa.skeleton {
            svg.polyline(
                &curve(d),
                r##"stroke="#1f77b4" stroke-width="1" stroke-dasharray="5 3""##,
            );
        }
        frame.axes(&mut svg, "growth rate (per year)", "pdf", &|v| {
            trim_number(v)
        });
        let mut label = format!(
            "scale {} y: low {}",
            trim_number(sa.scale),
            percent(sa.full_peaks.low.location)
        );
        if let Some(h) = sa.full_peaks.high {
            let _ = write!(label, ", high {}", percent(h.location));
        }
        svg.text(frame.left + 4.0, frame.top - 6.0, "start", 11.0, &label);
    }
    svg.finish()
}

/// Actual log level against the skeleton-driven synthetic series.
fn synthetic(a: &Analysis) -> String {
    let mut svg = Svg::new(960.0, 520.0);
    let mut values: Vec<f64> = a.log.values().to_vec();
    for run in &a.synthetic {
        values.extend(run.series.values.iter().map(|v| v.ln()));
    }
    let frame = Frame {
        left: 80.0,
        top: 40.0,
        width: 720.0,
        height: 420.0,
        x: time_range(a),
        y: padded(&values),
        log_y: false,
    };
    svg.text(
        480.0,
        24.0,
        "middle",
        14.0,
        &format!("{}: synthetic series", a.level.label()),
    );
    if let Some(run) = a.synthetic.first() {
        if let Some((lo, hi)) = run.error.exclusion {
            let (x0, x1) = (frame.px(lo.max(frame.x.0)), frame.px(hi.min(frame.x.1)));
            if x1 > x0 {
                svg.rect(
                    x0,
                    frame.top,
                    x1 - x0,
                    frame.height,
                    r##"fill="#eeeeee" stroke="none""##,
                );
            }
        }
    }
    let actual: Vec<(f64, f64)> = a
        .log
        .times()
        .iter()
        .zip(a.log.values())
        .map(|(t, v)| (frame.px(*t), frame.py(*v)))
        .collect();
    svg.polyline(&actual, r#"stroke="black" stroke-width="1.5""#);
    for (k, run) in a.synthetic.iter().enumerate() {
        let color = SERIES_COLORS[k % SERIES_COLORS.len()];
        let pts: Vec<(f64, f64)> = run
            .series
            .times
            .iter()
            .zip(&run.series.values)
            .map(|(t, v)| (frame.px(*t), frame.py(v.ln())))
            .collect();
        svg.polyline(&pts, &format!(r#"stroke="{color}" stroke-width="1""#));
        let y = frame.top + 20.0 + 18.0 * k as f64;
        svg.line(
            812.0,
            y - 4.0,
            840.0,
            y - 4.0,
            &format!(r#"stroke="{color}" stroke-width="2""#),
        );
        svg.text(
            846.0,
            y,
            "start",
            11.0,
            &format!("s* = {} y", trim_number(run.series.s_star)),
        );
    }
    let y = frame.top + 20.0 + 18.0 * a.synthetic.len() as f64;
    svg.line(
        812.0,
        y - 4.0,
        840.0,
        y - 4.0,
        r#"stroke="black" stroke-width="2""#,
    );
    svg.text(846.0, y, "start", 11.0, "actual");
    frame.axes(&mut svg, "time (years)", "log level", &|v| trim_number(v));
    svg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_runs_dark_blue_to_green_to_dark_red() {
        assert_eq!(jet(0.0), (0, 0, 128));
        assert_eq!(jet(0.5), (128, 255, 128));
        assert_eq!(jet(1.0), (128, 0, 0));
        assert_eq!(jet(-3.0), jet(0.0));
    }

    #[test]
    fn ticks_are_round_numbers_inside_range() {
        let t = nice_ticks(1947.0, 2009.75, 8);
        assert_eq!(t.first(), Some(&1950.0));
        assert!(t
            .iter()
            .all(|v| *v >= 1947.0 && *v <= 2009.75 && v % 10.0 == 0.0));
        assert_eq!(log2_ticks(0.4, 17.0), vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0]);
    }

    #[test]
    fn edges_bracket_scales() {
        let e = scale_edges(&[1.0, 2.0, 4.0]);
        assert_eq!(e.len(), 4);
        assert!((e[1] - 2f64.sqrt()).abs() < 1e-12);
        assert!(e[0] < 1.0 && e[3] > 4.0);
    }

    #[test]
    fn labels_are_escaped_and_numbers_trimmed() {
        assert_eq!(escape("a<b & c>"), "a&lt;b &amp; c&gt;");
        assert_eq!(trim_number(2.5000), "2.5");
        assert_eq!(trim_number(-0.00001), "0");
        assert_eq!(percent(0.0213), "2.1%");
    }
}
