//! Hand-emitted SVG: trajectory polylines over critical-point markers.
//! Valid for d = 2 games only.

use anyhow::{bail, Result};
use std::fmt::Write as _;

pub struct PlotSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub width: f64,
    pub height: f64,
}

pub struct Polyline {
    pub label: String,
    pub color: String,
    pub points: Vec<[f64; 2]>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum MarkerGlyph {
    /// Differential Nash equilibrium: 'x'.
    Nash,
    /// Non-Nash attractor: '*'.
    NonNash,
    /// Other critical point: small hollow circle.
    Other,
}

pub struct Marker {
    pub pos: [f64; 2],
    pub glyph: MarkerGlyph,
}

/// Stroke palette keyed by rule name, stable across runs.
pub fn rule_color(rule: &str) -> &'static str {
    match rule {
        "simgd" | "simgd-ode" => "#1f77b4",
        "2ts-simgd" => "#17becf",
        "co" => "#2ca02c",
        "sga" => "#9467bd",
        "lss" => "#d62728",
        "lss-ode" => "#ff7f0e",
        "tvlss" => "#8c564b",
        _ => "#333333",
    }
}

/// Axis ranges covering all data with a 10% margin.
pub fn fit_ranges(lines: &[Polyline], markers: &[Marker]) -> ((f64, f64), (f64, f64)) {
    let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
    let mut absorb = |p: &[f64; 2]| {
        xs = (xs.0.min(p[0]), xs.1.max(p[0]));
        ys = (ys.0.min(p[1]), ys.1.max(p[1]));
    };
    for l in lines {
        for p in &l.points {
            absorb(p);
        }
    }
    for m in markers {
        absorb(&m.pos);
    }
    if !xs.0.is_finite() {
        return ((-1.0, 1.0), (-1.0, 1.0));
    }
    let pad = |(lo, hi): (f64, f64)| {
        let span = (hi - lo).max(1e-9);
        (lo - 0.1 * span, hi + 0.1 * span)
    };
    (pad(xs), pad(ys))
}

pub fn render(spec: &PlotSpec, lines: &[Polyline], markers: &[Marker]) -> Result<String> {
    if !(spec.x_range.0 < spec.x_range.1) || !(spec.y_range.0 < spec.y_range.1) {
        bail!("svg axis ranges must be non-degenerate");
    }
    let (w, h) = (spec.width, spec.height);
    let sx = |x: f64| (x - spec.x_range.0) / (spec.x_range.1 - spec.x_range.0) * (w - 80.0) + 50.0;
    let sy = |y: f64| h - 40.0 - (y - spec.y_range.0) / (spec.y_range.1 - spec.y_range.0) * (h - 80.0);

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )?;
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#)?;
    writeln!(
        out,
        r##"<rect x="50" y="40" width="{}" height="{}" fill="none" stroke="#999"/>"##,
        w - 80.0,
        h - 80.0
    )?;
    // axis labels at the corners of the data box
    writeln!(
        out,
        r##"<text x="50" y="{}" font-size="10" fill="#666">({:.3},{:.3})</text>"##,
        h - 24.0,
        spec.x_range.0,
        spec.y_range.0
    )?;
    writeln!(
        out,
        r##"<text x="{}" y="34" font-size="10" fill="#666" text-anchor="end">({:.3},{:.3})</text>"##,
        w - 30.0,
        spec.x_range.1,
        spec.y_range.1
    )?;

    for line in lines {
        if line.points.is_empty() {
            continue;
        }
        let mut pts = String::new();
        for p in &line.points {
            write!(pts, "{:.3},{:.3} ", sx(p[0]), sy(p[1]))?;
        }
        writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.2"><title>{}</title></polyline>"#,
            pts.trim_end(),
            line.color,
            line.label
        )?;
        // start dot
        let s = line.points[0];
        writeln!(
            out,
            r#"<circle cx="{:.3}" cy="{:.3}" r="3" fill="{}"/>"#,
            sx(s[0]),
            sy(s[1]),
            line.color
        )?;
    }

    for m in markers {
        let (cx, cy) = (sx(m.pos[0]), sy(m.pos[1]));
        match m.glyph {
            MarkerGlyph::Nash => writeln!(
                out,
                r#"<text x="{cx:.3}" y="{cy:.3}" font-size="14" text-anchor="middle" dominant-baseline="middle" fill="black">x</text>"#
            )?,
            MarkerGlyph::NonNash => writeln!(
                out,
                r#"<text x="{cx:.3}" y="{cy:.3}" font-size="16" text-anchor="middle" dominant-baseline="middle" fill="black">*</text>"#
            )?,
            MarkerGlyph::Other => writeln!(
                out,
                r##"<circle cx="{cx:.3}" cy="{cy:.3}" r="2.5" fill="none" stroke="#777"/>"##
            )?,
        }
    }

    // legend
    let mut ly = 52.0;
    for line in lines {
        writeln!(
            out,
            r#"<text x="{}" y="{ly:.1}" font-size="10" fill="{}">{}</text>"#,
            w - 140.0,
            line.color,
            line.label
        )?;
        ly += 12.0;
    }
    writeln!(out, "</svg>")?;
    Ok(out)
}
