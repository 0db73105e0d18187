//! Minimal SVG line/scatter plot: ratio against λ.

use std::fmt::Write;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: &'a [(f64, f64)],
    /// Draw markers instead of a polyline.
    pub scatter: bool,
}

const W: f64 = 720.0;
const H: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 55.0;

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

pub fn render(title: &str, series: &[Series]) -> String {
    let all = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, 0.0f64, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    y1 = (y1 * 1.05).max(y0 + 1e-6);
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let sy = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{l},{t} V{b} H{r}" fill="none" stroke="black"/>"#,
        l = LEFT,
        t = TOP,
        b = H - BOTTOM,
        r = W - RIGHT
    );
    for t in nice_ticks(x0, x1, 8) {
        let x = sx(t);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, H - BOTTOM, H - BOTTOM + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, H - BOTTOM + 18.0, fmt_tick(t));
    }
    for t in nice_ticks(y0, y1, 6) {
        let y = sy(t);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, fmt_tick(t));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">λ = log K / log X</text>"#, (LEFT + W - RIGHT) / 2.0, H - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">variance / (mean · log X)</text>"#,
        (TOP + H - BOTTOM) / 2.0
    );
    for (i, ser) in series.iter().enumerate() {
        if ser.scatter {
            for &(x, y) in ser.points.iter().filter(|p| p.1.is_finite()) {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{}"/>"#, sx(x), sy(y), ser.color);
            }
        } else {
            // break the line where a value is missing
            let mut d = String::new();
            let mut pen_down = false;
            for &(x, y) in ser.points {
                if !y.is_finite() {
                    pen_down = false;
                    continue;
                }
                let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, sx(x), sy(y));
                pen_down = true;
            }
            let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.8"/>"#, d.trim_end(), ser.color);
        }
        let ly = TOP + 10.0 + 16.0 * i as f64;
        let lx = LEFT + 15.0;
        let _ = writeln!(s, r#"<rect x="{lx}" y="{}" width="12" height="4" fill="{}"/>"#, ly - 4.0, ser.color);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 18.0, ly + 1.0, escape(ser.label));
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(t: f64) -> String {
    let s = format!("{t:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_range() {
        let t = nice_ticks(0.2, 1.4, 8);
        assert!(t.first().unwrap() >= &0.2 && t.last().unwrap() <= &1.4);
        assert!(t.len() >= 4);
    }

    #[test]
    fn well_formed() {
        let pts = [(0.2, 0.3), (0.5, f64::NAN), (0.8, 0.9)];
        let svg = render(
            "a < b",
            &[Series {
                label: "x",
                color: "red",
                points: &pts,
                scatter: false,
            }],
        );
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a &lt; b"));
        // the missing value splits the curve into two subpaths
        assert!(svg.contains("d=\"M") && svg.matches(" M").count() == 1);
    }
}
