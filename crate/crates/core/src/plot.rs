//! Minimal static SVG line charts on log-log axes.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

/// Renders `points` (positive coordinates only; others are dropped) as a
/// polyline with markers on decade-labelled log-log axes. `comments` are
/// embedded as XML comments at the top of the document.
pub fn loglog_svg(points: &[(f64, f64)], x_label: &str, y_label: &str, comments: &[String]) -> String {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    for c in comments {
        let _ = writeln!(s, "<!-- {} -->", c.replace("--", "- -"));
    }
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN / 2.0, HEIGHT - MARGIN, MARGIN / 2.0);
    let _ = writeln!(
        s,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" stroke="black" fill="none"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
    if pts.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">no positive data</text>"#,
            (x0 + x1) / 2.0,
            (y0 + y1) / 2.0
        );
        s.push_str("</svg>\n");
        return s;
    }
    let span = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min).floor();
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max).ceil();
        if hi > lo {
            (lo, hi)
        } else {
            (lo, lo + 1.0)
        }
    };
    let (xa, xb) = span(|p| p.0);
    let (ya, yb) = span(|p| p.1);
    let px = |x: f64| x0 + (x - xa) / (xb - xa) * (x1 - x0);
    let py = |y: f64| y0 - (y - ya) / (yb - ya) * (y0 - y1);
    for k in xa as i32..=xb as i32 {
        let x = px(k as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{y0}" x2="{x}" y2="{}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle">1e{k}</text>"#,
            y0 + 20.0
        );
    }
    for k in ya as i32..=yb as i32 {
        let y = py(k as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y}" x2="{x0}" y2="{y}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">1e{k}</text>"#,
            x0 - 8.0,
            y + 4.0
        );
    }
    let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" stroke="steelblue" stroke-width="2" fill="none"/>"#,
        path.join(" ")
    );
    for &(x, y) in &pts {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
            px(x),
            py(y)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_nonpositive_points() {
        let svg = loglog_svg(&[(0.1, 1.0), (1.0, -2.0), (10.0, 100.0)], "λ", "|F|", &["v".into()]);
        assert!(svg.contains("<!-- v -->"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn empty_chart_is_valid() {
        let svg = loglog_svg(&[], "x", "y", &[]);
        assert!(svg.contains("no positive data"));
    }
}
