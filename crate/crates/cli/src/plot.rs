//! Minimal static SVG line plots.

use std::fmt::Write as _;

use crate::reproduce::Curve;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn bounds(curves: &[Curve]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for c in curves {
        for (&t, &v) in c.times.iter().zip(&c.values) {
            b = (b.0.min(t), b.1.max(t), b.2.min(v), b.3.max(v));
        }
    }
    if !(b.0 < b.1) {
        b.1 = b.0 + 1.0;
    }
    if !(b.2 < b.3) {
        b.3 = b.2 + 1.0;
    }
    b
}

pub fn render_svg(title: &str, curves: &[Curve]) -> String {
    let (x0, x1, y0, y1) = bounds(curves);
    let px = |t: f64| MARGIN + (t - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, WIDTH / 2.0);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} V{b} H{r}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (t, v) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{t:.4}</text>"#,
            px(t),
            HEIGHT - MARGIN + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
            MARGIN - 6.0,
            py(v) + 4.0
        );
    }
    for (k, c) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut d = String::new();
        for (i, (&t, &v)) in c.times.iter().zip(&c.values).enumerate() {
            let _ = write!(d, "{}{:.2} {:.2} ", if i == 0 { 'M' } else { 'L' }, px(t), py(v));
        }
        let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1"/>"#, d.trim_end());
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 150.0,
            MARGIN + 16.0 * k as f64,
            c.label
        );
    }
    s.push_str("</svg>\n");
    s
}
