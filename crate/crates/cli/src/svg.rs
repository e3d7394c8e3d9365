//! Minimal static SVG output. Every figure is 800×600 and starts with a
//! comment carrying the digest of the config that produced it.

use extremal_core::geom2d::{Mesh, Vec2};
use std::fmt::Write;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 60.0;

pub struct Figure {
    body: String,
    digest: String,
    title: String,
}

/// Affine map from data to pixel coordinates (y up in data).
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
}

impl Frame {
    /// Same scale on both axes, centred in the drawing area.
    pub fn equal(lo: Vec2, hi: Vec2) -> Self {
        let (w, h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
        let s = (w / (hi.0 - lo.0).max(1e-12)).min(h / (hi.1 - lo.1).max(1e-12));
        let cx = 0.5 * (lo.0 + hi.0);
        let cy = 0.5 * (lo.1 + hi.1);
        Frame { x0: cx - 0.5 * WIDTH / s, y0: cy + 0.5 * HEIGHT / s, sx: s, sy: s }
    }

    /// Independent axis scales filling the drawing area.
    pub fn fill(lo: Vec2, hi: Vec2) -> Self {
        let sx = (WIDTH - 2.0 * MARGIN) / (hi.0 - lo.0).max(1e-12);
        let sy = (HEIGHT - 2.0 * MARGIN) / (hi.1 - lo.1).max(1e-12);
        Frame { x0: lo.0 - MARGIN / sx, y0: hi.1 + MARGIN / sy, sx, sy }
    }

    pub fn px(&self, p: Vec2) -> (f64, f64) {
        ((p.0 - self.x0) * self.sx, (self.y0 - p.1) * self.sy)
    }
}

impl Figure {
    pub fn new(title: &str, digest: &str) -> Self {
        Figure { body: String::new(), digest: digest.to_string(), title: title.to_string() }
    }

    pub fn polyline(&mut self, f: &Frame, pts: &[Vec2], closed: bool, stroke: &str, width: f64) {
        if pts.is_empty() {
            return;
        }
        let tag = if closed { "polygon" } else { "polyline" };
        let mut coords = String::new();
        for p in pts {
            let (x, y) = f.px(*p);
            write!(coords, "{x:.2},{y:.2} ").unwrap();
        }
        writeln!(
            self.body,
            r#"<{tag} points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#,
            coords.trim_end()
        )
        .unwrap();
    }

    pub fn segment(&mut self, f: &Frame, a: Vec2, b: Vec2, stroke: &str, width: f64) {
        let ((x1, y1), (x2, y2)) = (f.px(a), f.px(b));
        writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width}"/>"#
        )
        .unwrap();
    }

    pub fn triangle(&mut self, f: &Frame, t: [Vec2; 3], fill: &str) {
        let p = t.map(|q| f.px(q));
        writeln!(
            self.body,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{fill}" stroke="{fill}" stroke-width="0.3"/>"#,
            p[0].0, p[0].1, p[1].0, p[1].1, p[2].0, p[2].1
        )
        .unwrap();
    }

    pub fn marker(&mut self, f: &Frame, p: Vec2, fill: &str) {
        let (x, y) = f.px(p);
        writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{fill}"/>"#).unwrap();
    }

    pub fn text(&mut self, x: f64, y: f64, s: &str, size: f64) {
        writeln!(
            self.body,
            r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="{size}">{}</text>"#,
            escape(s)
        )
        .unwrap();
    }

    /// Axes box with min/max labels.
    pub fn axes(&mut self, lo: Vec2, hi: Vec2, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        writeln!(
            self.body,
            r##"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="#444" stroke-width="1"/>"##,
            r - l,
            b - t
        )
        .unwrap();
        self.text(l, b + 18.0, &fmt_num(lo.0), 11.0);
        self.text(r - 40.0, b + 18.0, &fmt_num(hi.0), 11.0);
        self.text(4.0, b, &fmt_num(lo.1), 11.0);
        self.text(4.0, t + 10.0, &fmt_num(hi.1), 11.0);
        self.text(0.5 * (l + r) - 20.0, b + 36.0, xlabel, 13.0);
        self.text(4.0, 0.5 * (t + b), ylabel, 13.0);
    }

    pub fn finish(self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        )
        .unwrap();
        writeln!(s, "<!-- config-digest: sha256:{} -->", self.digest).unwrap();
        writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
        writeln!(
            s,
            r#"<text x="{MARGIN}" y="30" font-family="sans-serif" font-size="16">{}</text>"#,
            escape(&self.title)
        )
        .unwrap();
        s.push_str(&self.body);
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_num(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-2 || x.abs() >= 1e4) {
        format!("{x:.2e}")
    } else {
        format!("{x:.3}")
    }
}

/// Blue to red.
pub fn color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.5 };
    let r = (255.0 * t).round() as u8;
    let b = (255.0 * (1.0 - t)).round() as u8;
    let g = (255.0 * (1.0 - (2.0 * t - 1.0).abs()) * 0.8).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

pub fn bounds(pts: impl IntoIterator<Item = Vec2>) -> (Vec2, Vec2) {
    let mut lo = Vec2(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        lo = Vec2(lo.0.min(p.0), lo.1.min(p.1));
        hi = Vec2(hi.0.max(p.0), hi.1.max(p.1));
    }
    if !(lo.0 <= hi.0) {
        return (Vec2(0.0, 0.0), Vec2(1.0, 1.0));
    }
    if lo.1 == hi.1 {
        return (Vec2(lo.0, lo.1 - 0.5), Vec2(hi.0, hi.1 + 0.5));
    }
    (lo, hi)
}

/// Domain outline with `levels` equally spaced level lines of `values`.
pub fn level_sets(mesh: &Mesh, values: &[f64], levels: usize, title: &str, digest: &str) -> String {
    let (lo, hi) = bounds(mesh.vertices.iter().copied());
    let f = Frame::equal(lo, hi);
    let mut fig = Figure::new(title, digest);
    let vmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for k in 1..=levels {
        let c = vmin + (vmax - vmin) * k as f64 / (levels + 1) as f64;
        let col = color(k as f64 / (levels + 1) as f64);
        for tri in &mesh.triangles {
            let mut cut = Vec::new();
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                let (va, vb) = (values[a] - c, values[b] - c);
                if (va < 0.0) != (vb < 0.0) {
                    let t = va / (va - vb);
                    cut.push(mesh.vertices[a] + (mesh.vertices[b] - mesh.vertices[a]) * t);
                }
            }
            if cut.len() == 2 {
                fig.segment(&f, cut[0], cut[1], &col, 1.0);
            }
        }
    }
    for (pts, closed) in mesh.loop_polylines() {
        fig.polyline(&f, &pts, closed, "black", 2.0);
    }
    fig.finish()
}

/// Triangles filled by the mean of `values` over their vertices.
pub fn field(mesh: &Mesh, values: &[f64], title: &str, digest: &str) -> String {
    let (lo, hi) = bounds(mesh.vertices.iter().copied());
    let f = Frame::equal(lo, hi);
    let mut fig = Figure::new(title, digest);
    let vmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (vmax - vmin).max(1e-300);
    for tri in &mesh.triangles {
        let v = (values[tri[0]] + values[tri[1]] + values[tri[2]]) / 3.0;
        fig.triangle(&f, tri.map(|i| mesh.vertices[i]), &color((v - vmin) / span));
    }
    for (pts, closed) in mesh.loop_polylines() {
        fig.polyline(&f, &pts, closed, "black", 1.5);
    }
    fig.text(WIDTH - 260.0, HEIGHT - 20.0, &format!("min {} max {}", fmt_num(vmin), fmt_num(vmax)), 12.0);
    fig.finish()
}

/// Named data series against a shared pair of axes.
pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<Vec2>,
    pub stroke: &'a str,
}

pub fn line_plot(series: &[Series<'_>], xlabel: &str, ylabel: &str, title: &str, digest: &str) -> String {
    let (lo, hi) = bounds(series.iter().flat_map(|s| s.points.iter().copied()));
    let f = Frame::fill(lo, hi);
    let mut fig = Figure::new(title, digest);
    fig.axes(lo, hi, xlabel, ylabel);
    for (k, s) in series.iter().enumerate() {
        fig.polyline(&f, &s.points, false, s.stroke, 1.5);
        for p in &s.points {
            fig.marker(&f, *p, s.stroke);
        }
        fig.text(WIDTH - 200.0, MARGIN + 18.0 * (k as f64 + 1.0), s.label, 12.0);
    }
    fig.finish()
}

/// Closed outlines, drawn on equal axes.
pub fn outlines(shapes: &[Series<'_>], title: &str, digest: &str) -> String {
    let (lo, hi) = bounds(shapes.iter().flat_map(|s| s.points.iter().copied()));
    let f = Frame::equal(lo, hi);
    let mut fig = Figure::new(title, digest);
    for (k, s) in shapes.iter().enumerate() {
        fig.polyline(&f, &s.points, true, s.stroke, 1.5);
        fig.text(WIDTH - 200.0, MARGIN + 18.0 * (k as f64 + 1.0), s.label, 12.0);
    }
    fig.finish()
}

/// Stacked pass (green) and fail (red) counts per label.
pub fn pass_fail_bars(rows: &[(String, usize, usize)], title: &str, digest: &str) -> String {
    let mut fig = Figure::new(title, digest);
    let top = rows.iter().map(|r| r.1 + r.2).max().unwrap_or(0).max(1) as f64;
    let (lo, hi) = (Vec2(0.0, 0.0), Vec2(rows.len().max(1) as f64, top));
    let f = Frame::fill(lo, hi);
    fig.axes(lo, hi, "check", "count");
    for (i, (label, pass, fail)) in rows.iter().enumerate() {
        let x0 = i as f64 + 0.2;
        let x1 = i as f64 + 0.8;
        let bar = |fig: &mut Figure, y0: f64, y1: f64, fill: &str| {
            let (a, b) = (f.px(Vec2(x0, y1)), f.px(Vec2(x1, y0)));
            writeln!(
                fig.body,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                a.0,
                a.1,
                b.0 - a.0,
                b.1 - a.1
            )
            .unwrap();
        };
        bar(&mut fig, 0.0, *pass as f64, "#27ae60");
        bar(&mut fig, *pass as f64, (*pass + *fail) as f64, "#c0392b");
        let (x, _) = f.px(Vec2(x0, 0.0));
        fig.text(x, HEIGHT - MARGIN + 30.0, label, 12.0);
    }
    fig.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use extremal_core::geom2d::{build_domain, DomainSpec};

    #[test]
    fn header_carries_size_and_digest() {
        let mesh = build_domain(&DomainSpec::Disk { radius: 1.0 }, 0.3).unwrap();
        let vals: Vec<f64> = mesh.vertices.iter().map(|p| 1.0 - p.norm2()).collect();
        let s = level_sets(&mesh, &vals, 5, "u", "abc123");
        let mut lines = s.lines();
        assert!(lines.next().unwrap().contains(r#"width="800" height="600""#));
        assert_eq!(lines.next().unwrap(), "<!-- config-digest: sha256:abc123 -->");
        assert!(s.contains("<line") && s.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn frames_map_corners_inside_the_canvas() {
        let (lo, hi) = (Vec2(-2.0, -1.0), Vec2(2.0, 1.0));
        for f in [Frame::equal(lo, hi), Frame::fill(lo, hi)] {
            for p in [lo, hi] {
                let (x, y) = f.px(p);
                assert!((0.0..=WIDTH).contains(&x) && (0.0..=HEIGHT).contains(&y));
            }
            assert!(f.px(hi).1 < f.px(lo).1);
        }
    }

    #[test]
    fn colors_are_hex() {
        assert_eq!(color(0.0), "#0000ff");
        assert_eq!(color(1.0), "#ff0000");
        assert_eq!(color(f64::NAN).len(), 7);
    }
}
