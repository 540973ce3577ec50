//! Minimal native SVG line plots: polylines on linear or log-log axes.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const MAX_POINTS: usize = 2000;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Scale {
    Linear,
    Log,
}

impl Scale {
    fn fwd(self, v: f64) -> f64 {
        match self {
            Scale::Linear => v,
            Scale::Log => v.log10(),
        }
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    xs: Scale,
    ys: Scale,
}

impl Frame {
    fn fit(series: &[Series], xs: Scale, ys: Scale, equal: bool) -> Option<Self> {
        let pts = series.iter().flat_map(|s| s.points.iter()).map(|&(x, y)| (xs.fwd(x), ys.fwd(y)));
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in pts.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            return None;
        }
        let pad = |lo: f64, hi: f64| {
            let w = (hi - lo).max(1e-12);
            (lo - 0.05 * w, hi + 0.05 * w)
        };
        let (mut x, mut y) = (pad(x0, x1), pad(y0, y1));
        if equal {
            let half = 0.5 * (x.1 - x.0).max(y.1 - y.0);
            let (cx, cy) = (0.5 * (x.0 + x.1), 0.5 * (y.0 + y.1));
            x = (cx - half, cx + half);
            y = (cy - half, cy + half);
        }
        Some(Self { x, y, xs, ys })
    }

    fn px(&self, v: f64) -> f64 {
        let w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (self.xs.fwd(v) - self.x.0) / (self.x.1 - self.x.0) * w
    }

    fn py(&self, v: f64) -> f64 {
        let h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        HEIGHT - MARGIN_BOTTOM - (self.ys.fwd(v) - self.y.0) / (self.y.1 - self.y.0) * h
    }
}

fn ticks(range: (f64, f64), scale: Scale) -> Vec<(f64, String)> {
    match scale {
        Scale::Log => {
            let (lo, hi) = (range.0.ceil() as i32, range.1.floor() as i32);
            let step = ((hi - lo) / 8).max(1);
            (lo..=hi)
                .step_by(step as usize)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect()
        }
        Scale::Linear => {
            let span = range.1 - range.0;
            let raw = span / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(raw);
            let first = (range.0 / step).ceil() as i64;
            let last = (range.1 / step).floor() as i64;
            (first..=last)
                .map(|i| {
                    let v = i as f64 * step;
                    (v, format!("{}", (v * 1e6).round() / 1e6))
                })
                .collect()
        }
    }
}

/// Evenly thins a polyline to at most `MAX_POINTS`, keeping both ends.
fn thin(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if points.len() <= MAX_POINTS {
        return points.to_vec();
    }
    let stride = points.len() as f64 / (MAX_POINTS - 1) as f64;
    let mut out: Vec<_> = (0..MAX_POINTS - 1).map(|i| points[(i as f64 * stride) as usize]).collect();
    out.push(*points.last().expect("nonempty"));
    out
}

fn render(title: &str, xlabel: &str, ylabel: &str, series: &[Series], frame: &Frame, markers: &[(f64, f64)]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (l, r, t, b) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT, MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    let _ = writeln!(
        s,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for (v, label) in ticks(frame.x, frame.xs) {
        let x = frame.px(v);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{t}" stroke="#ddd"/><text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"##,
            b + 16.0
        );
    }
    for (v, label) in ticks(frame.y, frame.ys) {
        let y = frame.py(v);
        let _ = writeln!(
            s,
            r##"<line x1="{l}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{label}</text>"##,
            l - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
        (l + r) / 2.0,
        t - 14.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(ylabel)
    );
    for (i, series) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = thin(&series.points)
            .into_iter()
            .map(|(x, y)| (frame.px(x), frame.py(y)))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{x:.2},{y:.2}"))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = t + 16.0 * i as f64 + 8.0;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            r + 10.0,
            r + 30.0,
            r + 35.0,
            ly + 4.0,
            escape(&series.label)
        );
    }
    for &(x, y) in markers {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#,
            frame.px(x),
            frame.py(y)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn empty(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\"><text x=\"20\" y=\"30\">{} (no data)</text></svg>\n",
        escape(title)
    )
}

/// Log-log plot; points with non-positive coordinates are dropped.
pub fn loglog(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let positive: Vec<Series> = series
        .iter()
        .map(|s| Series::new(s.label.clone(), s.points.iter().copied().filter(|&(x, y)| x > 0.0 && y > 0.0).collect()))
        .collect();
    match Frame::fit(&positive, Scale::Log, Scale::Log, false) {
        Some(frame) => render(title, xlabel, ylabel, &positive, &frame, &[]),
        None => empty(title),
    }
}

/// Planar trajectories with equal axis scaling and optional point markers.
pub fn trajectory(title: &str, series: &[Series], markers: &[(f64, f64)]) -> String {
    let mut all = series.to_vec();
    all.push(Series::new("", markers.to_vec()));
    match Frame::fit(&all, Scale::Linear, Scale::Linear, true) {
        Some(frame) => render(title, "x", "y", series, &frame, markers),
        None => empty(title),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loglog_has_one_polyline_per_series() {
        let a = Series::new("a", (1..100).map(|k| (k as f64, 1.0 / k as f64)).collect());
        let b = Series::new("b", vec![(1.0, 1.0), (10.0, 0.0), (100.0, 1e-4)]);
        let svg = loglog("t", "k", "m", &[a, b]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("1e-2"));
    }

    #[test]
    fn trajectory_marks_points() {
        let s = Series::new("run", vec![(0.0, 0.0), (1.0, 1.0)]);
        let svg = trajectory("traj", &[s], &[(0.5, 0.5)]);
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn thinning_keeps_endpoints() {
        let pts: Vec<_> = (0..10_000).map(|i| (i as f64, i as f64)).collect();
        let t = thin(&pts);
        assert_eq!(t.len(), MAX_POINTS);
        assert_eq!(t[0], (0.0, 0.0));
        assert_eq!(*t.last().unwrap(), (9999.0, 9999.0));
    }

    #[test]
    fn empty_input() {
        assert!(loglog("x", "a", "b", &[]).contains("no data"));
    }
}
