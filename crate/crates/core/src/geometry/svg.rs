use std::collections::hash_map::DefaultHasher;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::{HalfSpace, Region, RegionSet};
use crate::error::{CpwlError, Result};
use crate::network::AffineMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvgStyle {
    pub size_px: f64,
    pub stroke_width: f64,
    pub annotate: bool,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            size_px: 600.0,
            stroke_width: 0.6,
            annotate: true,
        }
    }
}

/// Sutherland–Hodgman clipping of a convex or simple polygon against the
/// half-plane `h`.
pub fn clip_polygon(poly: &[[f64; 2]], h: &HalfSpace) -> Vec<[f64; 2]> {
    let f = |p: &[f64; 2]| h.normal[0] * p[0] + h.normal[1] * p[1] + h.offset;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let cur = poly[i];
        let next = poly[(i + 1) % poly.len()];
        let (fc, fn_) = (f(&cur), f(&next));
        if fc >= 0.0 {
            out.push(cur);
        }
        if (fc >= 0.0) != (fn_ >= 0.0) {
            let t = fc / (fc - fn_);
            out.push([cur[0] + t * (next[0] - cur[0]), cur[1] + t * (next[1] - cur[1])]);
        }
    }
    out
}

fn area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        .abs()
}

/// The part of a 2D cell inside the box `[lo, hi]`, counter-clockwise; empty
/// when the intersection has no area.
pub fn cell_polygon(region: &Region, lo: [f64; 2], hi: [f64; 2]) -> Vec<[f64; 2]> {
    let mut poly = vec![[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
    for h in &region.constraints {
        poly = clip_polygon(&poly, h);
        if poly.is_empty() {
            return poly;
        }
    }
    let scale = (hi[0] - lo[0]) * (hi[1] - lo[1]);
    if poly.len() < 3 || area(&poly) <= 1e-12 * scale {
        return Vec::new();
    }
    poly
}

fn fingerprint(piece: &AffineMap) -> u64 {
    let values: Vec<f64> = piece.matrix.iter().flatten().chain(&piece.offset).copied().collect();
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut hasher = DefaultHasher::new();
    for v in values {
        ((v / scale * 1e6).round() as i64).hash(&mut hasher);
    }
    hasher.finish()
}

fn color(fp: u64) -> String {
    let hue = fp % 360;
    let sat = 45 + (fp >> 16) % 35;
    let light = 55 + (fp >> 32) % 25;
    format!("hsl({hue},{sat}%,{light}%)")
}

/// Renders the cells of a 2D region set clipped to `[lo, hi]`.
pub fn render_svg(rs: &RegionSet, lo: [f64; 2], hi: [f64; 2], style: &SvgStyle) -> Result<String> {
    if rs.input_dim != 2 {
        return Err(CpwlError::Unsupported(format!(
            "rendering needs a 2D input, got dimension {}",
            rs.input_dim
        )));
    }
    if !(lo[0] < hi[0] && lo[1] < hi[1]) {
        return Err(CpwlError::InvalidParameter("render box has empty interior".into()));
    }
    let size = style.size_px;
    let sx = size / (hi[0] - lo[0]);
    let sy = size / (hi[1] - lo[1]);
    let to_px = |p: [f64; 2]| ((p[0] - lo[0]) * sx, (hi[1] - p[1]) * sy);
    let polys: Vec<(Vec<[f64; 2]>, u64)> = rs
        .regions
        .iter()
        .map(|r| (cell_polygon(r, lo, hi), fingerprint(&r.piece)))
        .filter(|(p, _)| !p.is_empty())
        .collect();
    let footer = if style.annotate { 28.0 } else { 0.0 };
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{}" viewBox="0 0 {size} {}">"#,
        size + footer,
        size + footer
    );
    let _ = writeln!(out, r#"<g id="cells" stroke="black" stroke-width="{}">"#, style.stroke_width);
    for (poly, fp) in &polys {
        let pts: Vec<String> = poly
            .iter()
            .map(|&p| {
                let (x, y) = to_px(p);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(out, r#"<polygon points="{}" fill="{}"/>"#, pts.join(" "), color(*fp));
    }
    let _ = writeln!(out, "</g>");
    if style.annotate {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="16" text-anchor="middle">({})</text>"#,
            size / 2.0,
            size + 20.0,
            rs.cell_count()
        );
    }
    let _ = writeln!(out, "</svg>");
    Ok(out)
}
