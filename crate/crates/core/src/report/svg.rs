//! Hand-rolled SVG writer. Coordinates are printed with two decimals and
//! every element is emitted in a fixed order, so output is byte-stable.

use std::fmt::Write;

use crate::metrics::Polyline;
use crate::sensitivity::Dendrogram;

use super::fmt4;

const PALETTE: &[&str] = &[
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

pub(crate) fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

pub(crate) struct Svg {
    buf: String,
}

impl Svg {
    pub fn new(width: f64, height: f64, title: &str) -> Self {
        let mut buf = String::new();
        let _ = writeln!(
            buf,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(buf, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let mut svg = Svg { buf };
        svg.text(width / 2.0, 22.0, title, "middle", 15.0);
        svg
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, extra: &str) {
        let _ = writeln!(
            self.buf,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}"{extra}/>"#
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, extra: &str) {
        let mut pts = String::new();
        for (i, (x, y)) in points.iter().enumerate() {
            if i > 0 {
                pts.push(' ');
            }
            let _ = write!(pts, "{x:.2},{y:.2}");
        }
        let _ = writeln!(
            self.buf,
            r#"<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="2"{extra}/>"#
        );
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.buf,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#
        );
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        let _ = writeln!(self.buf, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{fill}"/>"#);
    }

    pub fn text(&mut self, x: f64, y: f64, s: &str, anchor: &str, size: f64) {
        let _ = writeln!(
            self.buf,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="{size:.0}">{}</text>"#,
            escape(s)
        );
    }

    pub fn vtext(&mut self, x: f64, y: f64, s: &str) {
        let _ = writeln!(
            self.buf,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="middle" transform="rotate(-90 {x:.2} {y:.2})">{}</text>"#,
            escape(s)
        );
    }

    pub fn finish(mut self) -> String {
        self.buf.push_str("</svg>\n");
        self.buf
    }
}

/// Plot frame mapping data ranges onto a pixel rectangle.
pub(crate) struct Frame {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl Frame {
    pub fn x(&self, v: f64) -> f64 {
        let (lo, hi) = self.x_range;
        self.left + (v - lo) / (hi - lo) * self.width
    }

    pub fn y(&self, v: f64) -> f64 {
        let (lo, hi) = self.y_range;
        self.top + (1.0 - (v - lo) / (hi - lo)) * self.height
    }

    fn bottom(&self) -> f64 {
        self.top + self.height
    }

    /// Axes, tick labels and axis titles.
    pub fn axes(&self, svg: &mut Svg, x_ticks: &[(f64, String)], y_ticks: &[(f64, String)], x_title: &str, y_title: &str) {
        svg.line(self.left, self.bottom(), self.left + self.width, self.bottom(), "black", "");
        svg.line(self.left, self.top, self.left, self.bottom(), "black", "");
        for (v, label) in x_ticks {
            let x = self.x(*v);
            svg.line(x, self.bottom(), x, self.bottom() + 4.0, "black", "");
            svg.text(x, self.bottom() + 16.0, label, "middle", 11.0);
        }
        for (v, label) in y_ticks {
            let y = self.y(*v);
            svg.line(self.left - 4.0, y, self.left, y, "black", "");
            svg.text(self.left - 7.0, y + 4.0, label, "end", 11.0);
        }
        svg.text(self.left + self.width / 2.0, self.bottom() + 34.0, x_title, "middle", 12.0);
        svg.vtext(self.left - 42.0, self.top + self.height / 2.0, y_title);
    }
}

fn unit_ticks() -> Vec<(f64, String)> {
    (0..=5).map(|i| (i as f64 / 5.0, format!("{:.1}", i as f64 / 5.0))).collect()
}

fn legend(svg: &mut Svg, x: f64, y: f64, entries: &[(String, &str)]) {
    for (i, (name, c)) in entries.iter().enumerate() {
        let yy = y + i as f64 * 18.0;
        svg.rect(x, yy - 9.0, 12.0, 12.0, c);
        svg.text(x + 18.0, yy + 1.0, name, "start", 12.0);
    }
}

/// Curves on the unit square with the diagonal for reference. Curves and
/// legend entries are sorted by name.
pub(crate) fn lorenz(curves: &[(String, Polyline)], title: &str, x_title: &str, y_title: &str) -> String {
    let mut sorted: Vec<&(String, Polyline)> = curves.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let frame = Frame {
        left: 70.0,
        top: 40.0,
        width: 420.0,
        height: 420.0,
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
    };
    let mut svg = Svg::new(820.0, 520.0, title);
    frame.axes(&mut svg, &unit_ticks(), &unit_ticks(), x_title, y_title);
    svg.line(frame.x(0.0), frame.y(0.0), frame.x(1.0), frame.y(1.0), "#999999", r#" stroke-dasharray="6 4""#);
    let mut entries = Vec::new();
    for (i, (name, curve)) in sorted.iter().enumerate() {
        let pts: Vec<(f64, f64)> = curve.points().iter().map(|p| (frame.x(p[0]), frame.y(p[1]))).collect();
        svg.polyline(&pts, color(i), "");
        entries.push((name.clone(), color(i)));
    }
    entries.push(("equality".into(), "#999999"));
    legend(&mut svg, 520.0, 60.0, &entries);
    svg.finish()
}

/// Shaded count matrix; shading follows the row frequency.
pub(crate) fn heatmap(rows: &[String], cols: &[String], counts: &[Vec<u64>]) -> String {
    let cell_w = 64.0;
    let cell_h = 26.0;
    let left = 220.0;
    let top = 150.0;
    let width = left + cell_w * cols.len() as f64 + 20.0;
    let height = top + cell_h * rows.len() as f64 + 20.0;
    let mut svg = Svg::new(width, height, "Annotations per category and stakeholder group");
    for (j, c) in cols.iter().enumerate() {
        let x = left + (j as f64 + 0.5) * cell_w;
        let _ = writeln!(
            svg.buf,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="start" transform="rotate(-45 {x:.2} {:.2})">{}</text>"#,
            top - 8.0,
            top - 8.0,
            escape(c)
        );
    }
    for (i, (name, row)) in rows.iter().zip(counts).enumerate() {
        let y = top + i as f64 * cell_h;
        svg.text(left - 8.0, y + cell_h / 2.0 + 4.0, name, "end", 12.0);
        let total: u64 = row.iter().sum();
        for (j, &n) in row.iter().enumerate() {
            let share = if total > 0 { n as f64 / total as f64 } else { 0.0 };
            let shade = 255.0 - (share * 200.0).round();
            let fill = format!("rgb(255,{shade:.0},{shade:.0})");
            svg.rect(left + j as f64 * cell_w, y, cell_w - 1.0, cell_h - 1.0, &fill);
            svg.text(left + (j as f64 + 0.5) * cell_w, y + cell_h / 2.0 + 4.0, &n.to_string(), "middle", 11.0);
        }
    }
    svg.finish()
}

/// One labelled point per category.
pub(crate) fn scatter(points: &[(String, f64, f64)], x_title: &str, y_title: &str, title: &str) -> String {
    let frame = Frame {
        left: 70.0,
        top: 40.0,
        width: 420.0,
        height: 420.0,
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
    };
    let mut svg = Svg::new(720.0, 520.0, title);
    frame.axes(&mut svg, &unit_ticks(), &unit_ticks(), x_title, y_title);
    for (i, (name, x, y)) in points.iter().enumerate() {
        svg.circle(frame.x(*x), frame.y(*y), 4.0, color(i));
        svg.text(frame.x(*x) + 7.0, frame.y(*y) + 4.0, name, "start", 11.0);
    }
    svg.finish()
}

/// Horizontal dendrogram: leaves on the left, merge height to the right.
pub(crate) fn dendrogram(d: &Dendrogram) -> String {
    let n = d.labels.len();
    let order = d.leaf_order();
    let row_h = 24.0;
    let left = 220.0;
    let top = 50.0;
    let plot_w = 420.0;
    let max = d.merges.iter().map(|m| m.distance).fold(0.0, f64::max);
    let scale = if max > 0.0 { plot_w / max } else { 0.0 };
    let height = top + row_h * n as f64 + 50.0;
    let mut svg = Svg::new(left + plot_w + 60.0, height, "Ward clustering of categories");

    let mut pos = vec![(0.0, 0.0); n + d.merges.len()];
    for (slot, &leaf) in order.iter().enumerate() {
        let y = top + (slot as f64 + 0.5) * row_h;
        pos[leaf] = (left, y);
        svg.text(left - 8.0, y + 4.0, &d.labels[leaf], "end", 12.0);
    }
    for (step, m) in d.merges.iter().enumerate() {
        let x = left + m.distance * scale;
        let (xl, yl) = pos[m.left];
        let (xr, yr) = pos[m.right];
        svg.polyline(&[(xl, yl), (x, yl), (x, yr), (xr, yr)], "#333333", r#" stroke-width="1.5""#);
        pos[n + step] = (x, (yl + yr) / 2.0);
    }
    let axis_y = top + row_h * n as f64 + 10.0;
    svg.line(left, axis_y, left + plot_w, axis_y, "black", "");
    for i in 0..=4 {
        let v = max * i as f64 / 4.0;
        let x = left + v * scale;
        svg.line(x, axis_y, x, axis_y + 4.0, "black", "");
        svg.text(x, axis_y + 16.0, &fmt4(v), "middle", 10.0);
    }
    svg.text(left + plot_w / 2.0, axis_y + 34.0, "Ward linkage distance", "middle", 12.0);
    svg.finish()
}

/// One series per category across scenario levels, with interval bars.
pub(crate) struct TrendSeries {
    pub name: String,
    /// `(level index, mean, lo, hi)`
    pub points: Vec<(usize, f64, f64, f64)>,
}

pub(crate) fn trend(levels: &[String], series: &[TrendSeries], x_title: &str, title: &str) -> String {
    let span = levels.len().max(2) - 1;
    let frame = Frame {
        left: 70.0,
        top: 40.0,
        width: 480.0,
        height: 380.0,
        x_range: (-0.3, span as f64 + 0.3),
        y_range: (0.0, 1.0),
    };
    let mut svg = Svg::new(880.0, 480.0, title);
    let ticks: Vec<(f64, String)> = levels.iter().enumerate().map(|(i, l)| (i as f64, l.clone())).collect();
    frame.axes(&mut svg, &ticks, &unit_ticks(), x_title, "mean AIH");
    let mut entries = Vec::new();
    let n = series.len().max(1) as f64;
    for (s_idx, s) in series.iter().enumerate() {
        let c = color(s_idx);
        // spread series horizontally so bars do not overlap
        let dx = (s_idx as f64 - (n - 1.0) / 2.0) * 0.03;
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .map(|&(i, mean, _, _)| (frame.x(i as f64 + dx), frame.y(mean)))
            .collect();
        svg.polyline(&pts, c, r#" stroke-opacity="0.6""#);
        for &(i, mean, lo, hi) in &s.points {
            let x = frame.x(i as f64 + dx);
            svg.line(x, frame.y(lo), x, frame.y(hi), c, "");
            svg.circle(x, frame.y(mean), 3.0, c);
        }
        entries.push((s.name.clone(), c));
    }
    legend(&mut svg, 580.0, 60.0, &entries);
    svg.finish()
}
