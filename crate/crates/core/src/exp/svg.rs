//! Hand-rolled SVG line charts for learning curves.
//!
//! Output is plain SVG 1.1: one polyline per series, an optional translucent
//! polygon for a ±1σ band, linear axes with a handful of ticks, and a text
//! legend. No external renderer is involved, so the files double as small,
//! diffable artifacts.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 48.0;
const TICKS: usize = 5;

pub const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

/// One plotted curve: a line through `points`, optionally wrapped in a
/// shaded (low, high) band sharing the same x values.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
    pub band: Option<(Vec<f64>, Vec<f64>)>,
}

impl Series {
    fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidInput(format!(
                "series {:?} has no points",
                self.label
            )));
        }
        for &(x, y) in &self.points {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "series {:?} has a non-finite point",
                    self.label
                )));
            }
        }
        if let Some((lo, hi)) = &self.band {
            if lo.len() != self.points.len() || hi.len() != self.points.len() {
                return Err(Error::InvalidInput(format!(
                    "series {:?} band length does not match its points",
                    self.label
                )));
            }
            if lo.iter().chain(hi).any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "series {:?} band has a non-finite value",
                    self.label
                )));
            }
        }
        Ok(())
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Round-numbered value formatting for tick labels.
fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let rounded = format!("{v:.3}");
    let trimmed = rounded.trim_end_matches('0').trim_end_matches('.');
    if trimmed.is_empty() {
        "0".into()
    } else {
        trimmed.to_string()
    }
}

struct Scale {
    min: f64,
    max: f64,
    lo_px: f64,
    hi_px: f64,
}

impl Scale {
    fn map(&self, v: f64) -> f64 {
        let t = if self.max > self.min {
            (v - self.min) / (self.max - self.min)
        } else {
            0.5
        };
        self.lo_px + t * (self.hi_px - self.lo_px)
    }
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}

/// Builds the chart as an SVG document string.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<String> {
    if series.is_empty() {
        return Err(Error::InvalidInput("chart needs at least one series".into()));
    }
    for s in series {
        s.validate()?;
    }

    let (x_min, x_max) = extent(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (mut y_min, mut y_max) = extent(
        series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .chain(series.iter().flat_map(|s| {
                s.band
                    .iter()
                    .flat_map(|(lo, hi)| lo.iter().chain(hi).copied())
                    .collect::<Vec<_>>()
            })),
    );
    if y_min == y_max {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let pad = 0.04 * (y_max - y_min);
    let x = Scale {
        min: x_min,
        max: x_max,
        lo_px: MARGIN_LEFT,
        hi_px: WIDTH - MARGIN_RIGHT,
    };
    let y = Scale {
        min: y_min - pad,
        max: y_max + pad,
        lo_px: HEIGHT - MARGIN_BOTTOM,
        hi_px: MARGIN_TOP,
    };

    let mut out = String::new();
    out.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    ));
    out.push('\n');
    out.push_str(&format!(
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    ));
    out.push('\n');
    out.push_str(&format!(
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    ));
    out.push('\n');

    // Axes with tick marks and labels.
    let axis_color = "#333333";
    out.push_str(&format!(
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="{axis_color}"/>"#,
        x0 = MARGIN_LEFT,
        y0 = HEIGHT - MARGIN_BOTTOM,
        x1 = WIDTH - MARGIN_RIGHT,
    ));
    out.push('\n');
    out.push_str(&format!(
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="{axis_color}"/>"#,
        x0 = MARGIN_LEFT,
        y0 = HEIGHT - MARGIN_BOTTOM,
        y1 = MARGIN_TOP,
    ));
    out.push('\n');
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let xv = x.min + t * (x.max - x.min);
        let xp = x.map(xv);
        out.push_str(&format!(
            r#"<line x1="{xp}" y1="{}" x2="{xp}" y2="{}" stroke="{axis_color}"/>"#,
            HEIGHT - MARGIN_BOTTOM,
            HEIGHT - MARGIN_BOTTOM + 5.0,
        ));
        out.push_str(&format!(
            r#"<text x="{xp}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_BOTTOM + 18.0,
            tick_label(xv)
        ));
        out.push('\n');
        let yv = y.min + t * (y.max - y.min);
        let yp = y.map(yv);
        out.push_str(&format!(
            r#"<line x1="{}" y1="{yp}" x2="{}" y2="{yp}" stroke="{axis_color}"/>"#,
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT,
        ));
        out.push_str(&format!(
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 8.0,
            yp + 4.0,
            tick_label(yv)
        ));
        out.push('\n');
    }
    out.push_str(&format!(
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    ));
    out.push('\n');
    out.push_str(&format!(
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        escape(y_label)
    ));
    out.push('\n');

    for s in series {
        if let Some((lo, hi)) = &s.band {
            let mut path = String::new();
            for (i, &(px, _)) in s.points.iter().enumerate() {
                path.push_str(&format!("{:.2},{:.2} ", x.map(px), y.map(hi[i])));
            }
            for (i, &(px, _)) in s.points.iter().enumerate().rev() {
                path.push_str(&format!("{:.2},{:.2} ", x.map(px), y.map(lo[i])));
            }
            out.push_str(&format!(
                r#"<polygon points="{}" fill="{}" fill-opacity="0.15" stroke="none"/>"#,
                path.trim_end(),
                s.color
            ));
            out.push('\n');
        }
    }
    for s in series {
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(px, py)| format!("{:.2},{:.2}", x.map(px), y.map(py)))
            .collect();
        out.push_str(&format!(
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            pts.join(" "),
            s.color
        ));
        out.push('\n');
    }

    for (i, s) in series.iter().enumerate() {
        let lx = MARGIN_LEFT + 12.0;
        let ly = MARGIN_TOP + 8.0 + 18.0 * i as f64;
        out.push_str(&format!(
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/>"#,
            lx + 22.0,
            s.color
        ));
        out.push_str(&format!(
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 28.0,
            ly + 4.0,
            escape(&s.label)
        ));
        out.push('\n');
    }

    out.push_str("</svg>\n");
    Ok(out)
}

pub fn write_line_chart(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> Result<()> {
    let svg = line_chart(title, x_label, y_label, series)?;
    fs::write(path, svg)?;
    Ok(())
}
