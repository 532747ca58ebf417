//! Minimal SVG line charts.

use std::fmt::Write;

pub const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#7f7f7f"];

pub struct Series {
    pub label: String,
    /// NaN in either coordinate breaks the line.
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
}

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub series: Vec<Series>,
    /// Fixed tick labels, e.g. mode names; numeric ticks otherwise.
    pub y_ticks: Option<Vec<(f64, String)>>,
    /// Keeps x and y on the same scale (path plots).
    pub equal_aspect: bool,
}

const W: f64 = 720.0;
const H: f64 = 320.0;
const ML: f64 = 64.0;
const MR: f64 = 120.0;
const MT: f64 = 30.0;
const MB: f64 = 44.0;

fn bounds(series: &[Series]) -> Option<(f64, f64, f64, f64)> {
    let pts = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let mut b: Option<(f64, f64, f64, f64)> = None;
    for &(x, y) in pts {
        b = Some(match b {
            None => (x, x, y, y),
            Some((x0, x1, y0, y1)) => (x0.min(x), x1.max(x), y0.min(y), y1.max(y)),
        });
    }
    b
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(chart: &Chart) -> String {
    let (x0, mut x1, mut y0, mut y1) = bounds(&chart.series).unwrap_or((0.0, 1.0, 0.0, 1.0));
    if let Some(ticks) = &chart.y_ticks {
        for (v, _) in ticks {
            y0 = y0.min(*v);
            y1 = y1.max(*v);
        }
    }
    if x1 - x0 < 1e-9 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    let (pw, ph) = (W - ML - MR, H - MT - MB);
    let (mut sx, mut sy) = (pw / (x1 - x0), ph / (y1 - y0));
    if chart.equal_aspect {
        let k = sx.min(sy);
        sx = k;
        sy = k;
    }
    let px = |x: f64| ML + (x - x0) * sx;
    let py = |y: f64| MT + ph - (y - y0) * sy;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="18" font-size="13" text-anchor="middle">{}</text>"#,
        ML + pw / 2.0,
        escape(chart.title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
    );
    let yt: Vec<(f64, String)> = match &chart.y_ticks {
        Some(t) => t.clone(),
        None => (0..=4)
            .map(|i| {
                let v = y0 + pad + (y1 - y0 - 2.0 * pad) * i as f64 / 4.0;
                (v, format!("{v:.1}"))
            })
            .collect(),
    };
    for (v, label) in yt {
        let y = py(v);
        let _ = writeln!(
            out,
            r##"<line x1="{ML}" x2="{}" y1="{y:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">{}</text>"##,
            ML + pw,
            ML - 4.0,
            y + 4.0,
            escape(&label)
        );
    }
    for i in 0..=4 {
        let v = x0 + (x1 - x0) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{v:.0}</text>"#,
            px(v),
            MT + ph + 14.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        ML + pw / 2.0,
        H - 8.0,
        escape(chart.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        MT + ph / 2.0,
        MT + ph / 2.0,
        escape(chart.y_label)
    );
    for (k, s) in chart.series.iter().enumerate() {
        for run in s.points.split(|(x, y)| !(x.is_finite() && y.is_finite())) {
            if run.is_empty() {
                continue;
            }
            let pts: Vec<String> = run.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                s.color,
                pts.join(" ")
            );
        }
        let ly = MT + 14.0 + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{}" x2="{}" y1="{ly}" y2="{ly}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            W - MR + 8.0,
            W - MR + 26.0,
            s.color,
            W - MR + 30.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_broken_lines() {
        let svg = render(&Chart {
            title: "a<b",
            x_label: "s",
            y_label: "n",
            series: vec![Series {
                label: "ego".into(),
                points: vec![(0.0, 1.0), (1.0, 2.0), (f64::NAN, 0.0), (2.0, 1.0), (3.0, 0.0)],
                color: PALETTE[0],
            }],
            y_ticks: None,
            equal_aspect: false,
        });
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
