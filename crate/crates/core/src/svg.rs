//! Minimal SVG line charts for curve output.

use std::fmt::Write as _;

use crate::curves::CurveSeries;

const W: f64 = 480.0;
const H: f64 = 360.0;
const MARGIN: f64 = 48.0;

/// Renders one or more series on the unit square. Output is deterministic.
pub fn line_chart(title: &str, series: &[&CurveSeries]) -> String {
    let (xl, yl) = series.first().map_or(("x", "y"), |s| s.axis_labels());
    let px = |x: f64| MARGIN + x.clamp(0.0, 1.0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - y.clamp(0.0, 1.0) * (H - 2.0 * MARGIN);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    for t in [0.0, 0.5, 1.0] {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{t}</text>"#, px(t), H - MARGIN + 16.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{t}</text>"#, MARGIN - 6.0, py(t) + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="20" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, W / 2.0, H - 10.0, escape(xl));
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(yl)
    );
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    for (k, s) in series.iter().enumerate() {
        // Consecutive points that round to the same pixel are dropped.
        let mut pts: Vec<String> = Vec::new();
        for &(x, y) in s.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
            let p = format!("{:.1},{:.1}", px(x), py(y));
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            MARGIN + 8.0,
            MARGIN + 16.0 + 14.0 * k as f64,
            escape(&s.meta.family)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
