//! SVG scatter of fronts in the cost/success plane.

use std::fmt::Write;

use parley_core::indicators::RequirementSetting;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    Cross,
    Circle,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub marker: Marker,
    /// `(success, cost)` pairs.
    pub points: Vec<(f64, f64)>,
}

/// Linear map from data coordinates to the drawing area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub cost: (f64, f64),
    pub success: (f64, f64),
}

impl Frame {
    pub fn fit(series: &[Series], req: Option<&RequirementSetting>) -> Self {
        let mut cost = (f64::INFINITY, f64::NEG_INFINITY);
        let mut success = (f64::INFINITY, f64::NEG_INFINITY);
        let mut grow = |s: f64, c: f64| {
            if s.is_finite() {
                success = (success.0.min(s), success.1.max(s));
            }
            if c.is_finite() {
                cost = (cost.0.min(c), cost.1.max(c));
            }
        };
        for &(s, c) in series.iter().flat_map(|s| &s.points) {
            grow(s, c);
        }
        if let Some(r) = req {
            grow(r.min_success, r.max_cost);
        }
        Self {
            cost: padded(cost),
            success: padded(success),
        }
    }

    pub fn x(&self, cost: f64) -> f64 {
        LEFT + (cost - self.cost.0) / (self.cost.1 - self.cost.0) * (WIDTH - LEFT - RIGHT)
    }

    pub fn y(&self, success: f64) -> f64 {
        HEIGHT - BOTTOM - (success - self.success.0) / (self.success.1 - self.success.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn padded((lo, hi): (f64, f64)) -> (f64, f64) {
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span <= 0.0 {
        let d = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - d, hi + d);
    }
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn axes(svg: &mut String, f: &Frame) {
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        svg,
        r#"<g class="axes" stroke="black" fill="none"><line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/></g>"#
    );
    let _ = writeln!(svg, r#"<g class="ticks" font-family="sans-serif" font-size="11">"#);
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let c = f.cost.0 + t * (f.cost.1 - f.cost.0);
        let s = f.success.0 + t * (f.success.1 - f.success.0);
        let (x, y) = (f.x(c), f.y(s));
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{c:.1}</text>"#,
            y0 + 4.0,
            y0 + 18.0
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{s:.3}</text>"#,
            x0 - 4.0,
            x0 - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13">expected cost</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(16,{:.2}) rotate(-90)" text-anchor="middle" font-family="sans-serif" font-size="13">success probability</text>"#,
        (y0 + y1) / 2.0
    );
}

fn requirement(svg: &mut String, f: &Frame, r: &RequirementSetting) {
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let ys = f.y(r.min_success).clamp(y1, y0);
    let xc = f.x(r.max_cost).clamp(x0, x1);
    let _ = writeln!(svg, r##"<g class="rejected" fill="#999999" fill-opacity="0.25" stroke="none">"##);
    let _ = writeln!(svg, r#"<rect x="{x0}" y="{ys:.2}" width="{:.2}" height="{:.2}"/>"#, x1 - x0, y0 - ys);
    let _ = writeln!(svg, r#"<rect x="{xc:.2}" y="{y1}" width="{:.2}" height="{:.2}"/>"#, x1 - xc, ys - y1);
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r#"<line class="requirement" data-success="{}" x1="{x0}" y1="{ys:.2}" x2="{x1}" y2="{ys:.2}" stroke="black" stroke-dasharray="2,3"/>"#,
        r.min_success
    );
    let _ = writeln!(
        svg,
        r#"<line class="requirement" data-cost="{}" x1="{xc:.2}" y1="{y0}" x2="{xc:.2}" y2="{y1}" stroke="black" stroke-dasharray="2,3"/>"#,
        r.max_cost
    );
}

fn markers(svg: &mut String, f: &Frame, s: &Series) {
    let _ = writeln!(svg, r#"<g class="series" data-name="{}">"#, escape(&s.name));
    for &(success, cost) in &s.points {
        let (x, y) = (f.x(cost), f.y(success));
        match s.marker {
            Marker::Circle => {
                let _ = writeln!(
                    svg,
                    r##"<circle class="point" cx="{x:.2}" cy="{y:.2}" r="3.5" fill="none" stroke="#1f4e9c" data-success="{success}" data-cost="{cost}"/>"##
                );
            }
            Marker::Cross => {
                let d = 4.0;
                let _ = writeln!(
                    svg,
                    r##"<path class="point" d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="#b22222" data-success="{success}" data-cost="{cost}"/>"##,
                    x - d,
                    y - d,
                    x + d,
                    y + d,
                    x - d,
                    y + d,
                    x + d,
                    y - d
                );
            }
        }
    }
    let _ = writeln!(svg, "</g>");
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('"', "&quot;")
}

pub fn render(series: &[Series], req: Option<&RequirementSetting>) -> String {
    let frame = Frame::fit(series, req);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if let Some(r) = req {
        requirement(&mut svg, &frame, r);
    }
    axes(&mut svg, &frame);
    for s in series {
        markers(&mut svg, &frame, s);
    }
    svg.push_str("</svg>\n");
    svg
}
