//! Minimal self-contained SVG line plots: log or linear axes, per-series
//! markers, and a legend. No external references, deterministic output.

use std::fmt::Write as _;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 190.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 56.0;

/// Marker palette follows the figure convention of squares for exact
/// curves and triangles for the two asymptotic branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    Square,
    TriangleUp,
    TriangleDown,
    Circle,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub marker: Marker,
    pub points: Vec<(f64, f64)>,
}

pub const PURPLE: &str = "#7e2f8e";
pub const ORANGE: &str = "#d95319";
pub const GREEN: &str = "#2e8b40";
pub const BLUE: &str = "#1f77b4";
pub const GRAY: &str = "#666666";

pub const PALETTE: [(&str, Marker); 5] = [
    (PURPLE, Marker::Square),
    (ORANGE, Marker::TriangleDown),
    (GREEN, Marker::TriangleUp),
    (BLUE, Marker::Circle),
    (GRAY, Marker::Square),
];

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

struct Axis {
    min: f64,
    max: f64,
    log: bool,
}

impl Axis {
    fn project(&self, v: f64, lo: f64, hi: f64) -> Option<f64> {
        let (v, min, max) = if self.log {
            if v <= 0.0 {
                return None;
            }
            (v.log10(), self.min.log10(), self.max.log10())
        } else {
            (v, self.min, self.max)
        };
        let span = if max > min { max - min } else { 1.0 };
        Some(lo + (v - min) / span * (hi - lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let lo = self.min.log10().ceil() as i32;
            let hi = self.max.log10().floor() as i32;
            (lo..=hi)
                .map(|k| (10f64.powi(k), format!("1e{k}")))
                .collect()
        } else {
            let span = self.max - self.min;
            let raw = span / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|s| span / s <= 5.5)
                .unwrap_or(mag);
            let mut ticks = Vec::new();
            let mut v = (self.min / step).ceil() * step;
            while v <= self.max + step * 1e-9 {
                ticks.push((v, format_tick(v)));
                v += step;
            }
            ticks
        }
    }
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

impl Plot {
    fn axis(&self, x: bool) -> Axis {
        let log = if x { self.log_x } else { self.log_y };
        let values = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .map(|&(px, py)| if x { px } else { py })
            .filter(|v| v.is_finite() && (!log || *v > 0.0));
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() || !max.is_finite() {
            return Axis {
                min: if log { 0.1 } else { 0.0 },
                max: 1.0,
                log,
            };
        }
        if log {
            Axis {
                min: min / 1.3,
                max: max * 1.3,
                log,
            }
        } else {
            let pad = 0.06 * (max - min).max(min.abs().max(max.abs()).max(1.0) * 0.1);
            Axis {
                min: min - pad,
                max: max + pad,
                log,
            }
        }
    }

    pub fn render(&self) -> String {
        let x_axis = self.axis(true);
        let y_axis = self.axis(false);
        let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
        let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
        let px = |v: f64| x_axis.project(v, x0, x1);
        let py = |v: f64| y_axis.project(v, y0, y1);

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(
            out,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
            fmt((x0 + x1) / 2.0),
            escape(&self.title)
        );

        // Frame and ticks.
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            fmt(x0),
            fmt(y1),
            fmt(x1 - x0),
            fmt(y0 - y1)
        );
        for (v, label) in x_axis.ticks() {
            if let Some(x) = px(v) {
                let _ = writeln!(
                    out,
                    r##"<line x1="{x}" y1="{b}" x2="{x}" y2="{t}" stroke="#dddddd"/><text x="{x}" y="{ly}" font-family="sans-serif" font-size="11" text-anchor="middle">{label}</text>"##,
                    x = fmt(x),
                    b = fmt(y0),
                    t = fmt(y1),
                    ly = fmt(y0 + 16.0),
                );
            }
        }
        for (v, label) in y_axis.ticks() {
            if let Some(y) = py(v) {
                let _ = writeln!(
                    out,
                    r##"<line x1="{l}" y1="{y}" x2="{r}" y2="{y}" stroke="#dddddd"/><text x="{lx}" y="{ty}" font-family="sans-serif" font-size="11" text-anchor="end">{label}</text>"##,
                    l = fmt(x0),
                    r = fmt(x1),
                    y = fmt(y),
                    lx = fmt(x0 - 6.0),
                    ty = fmt(y + 4.0),
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
            fmt((x0 + x1) / 2.0),
            fmt(HEIGHT - 14.0),
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            fmt((y0 + y1) / 2.0),
            fmt((y0 + y1) / 2.0),
            escape(&self.y_label)
        );

        // Series: polyline plus markers.
        for series in &self.series {
            let projected: Vec<(f64, f64)> = series
                .points
                .iter()
                .filter_map(|&(vx, vy)| Some((px(vx)?, py(vy)?)))
                .collect();
            if projected.len() > 1 {
                let path: Vec<String> = projected
                    .iter()
                    .map(|&(x, y)| format!("{},{}", fmt(x), fmt(y)))
                    .collect();
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                    path.join(" "),
                    series.color
                );
            }
            for &(x, y) in &projected {
                let _ = writeln!(out, "{}", marker_svg(series.marker, x, y, series.color));
            }
        }

        // Legend.
        let legend_x = x1 + 14.0;
        for (i, series) in self.series.iter().enumerate() {
            let y = y1 + 14.0 + 20.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{lx}" y1="{y}" x2="{lx2}" y2="{y}" stroke="{color}" stroke-width="1.5"/>{marker}<text x="{tx}" y="{ty}" font-family="sans-serif" font-size="12">{label}</text>"#,
                lx = fmt(legend_x),
                lx2 = fmt(legend_x + 26.0),
                y = fmt(y),
                color = series.color,
                marker = marker_svg(series.marker, legend_x + 13.0, y, series.color),
                tx = fmt(legend_x + 32.0),
                ty = fmt(y + 4.0),
                label = escape(&series.label),
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn marker_svg(marker: Marker, x: f64, y: f64, color: &str) -> String {
    let r = 3.4;
    match marker {
        Marker::Square => format!(
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{color}"/>"#,
            fmt(x - r),
            fmt(y - r),
            fmt(2.0 * r),
            fmt(2.0 * r)
        ),
        Marker::Circle => format!(
            r#"<circle cx="{}" cy="{}" r="{}" fill="{color}"/>"#,
            fmt(x),
            fmt(y),
            fmt(r)
        ),
        Marker::TriangleUp => format!(
            r#"<polygon points="{},{} {},{} {},{}" fill="{color}"/>"#,
            fmt(x),
            fmt(y - r - 1.0),
            fmt(x - r),
            fmt(y + r),
            fmt(x + r),
            fmt(y + r)
        ),
        Marker::TriangleDown => format!(
            r#"<polygon points="{},{} {},{} {},{}" fill="{color}"/>"#,
            fmt(x),
            fmt(y + r + 1.0),
            fmt(x - r),
            fmt(y - r),
            fmt(x + r),
            fmt(y - r)
        ),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_plot() -> Plot {
        Plot {
            title: "throughput".into(),
            x_label: "n".into(),
            y_label: "mu".into(),
            log_x: true,
            log_y: true,
            series: vec![Series {
                label: "exact".into(),
                color: PURPLE,
                marker: Marker::Square,
                points: vec![(10.0, 2.0), (100.0, 11.0), (1000.0, 80.0)],
            }],
        }
    }

    #[test]
    fn renders_self_contained_svg() {
        let svg = sample_plot().render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("href"));
        assert!(!svg.contains("url("));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("1e2"));
    }

    #[test]
    fn render_is_deterministic() {
        assert_eq!(sample_plot().render(), sample_plot().render());
    }

    #[test]
    fn log_axis_drops_nonpositive_points() {
        let mut plot = sample_plot();
        plot.series[0].points.push((0.0, -5.0));
        let svg = plot.render();
        assert!(svg.contains("polyline"));
    }

    #[test]
    fn empty_series_renders_frame() {
        let plot = Plot {
            title: "empty".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_x: false,
            log_y: false,
            series: vec![],
        };
        let svg = plot.render();
        assert!(svg.contains("<rect"));
    }
}
