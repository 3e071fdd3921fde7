//! Minimal static SVG scatter plots: total pixels against mean time, with
//! out-of-memory images drawn as an `X` on the top edge.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub label: String,
    pub pixels: u64,
    /// `None` marks an out-of-memory image.
    pub time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<Point>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn scatter(title: &str, series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| &s.points);
    let max_px = all().map(|p| p.pixels).max().unwrap_or(1).max(1) as f64;
    let max_t = all()
        .filter_map(|p| p.time)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let x = |px: u64| MARGIN + px as f64 / max_px * plot_w;
    let y = |t: f64| HEIGHT - MARGIN - t / max_t * plot_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">total pixels (max {})</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        max_px
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">mean time (s, max {:.3})</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        max_t
    );

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(
            out,
            r#"<g class="series" data-name="{}" fill="{color}">"#,
            escape(&s.name)
        );
        for p in &s.points {
            match p.time {
                Some(t) => {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3"><title>{}</title></circle>"#,
                        x(p.pixels),
                        y(t),
                        escape(&p.label)
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        r#"<text class="oom" x="{:.2}" y="{:.2}" fill="red" text-anchor="middle">X</text>"#,
                        x(p.pixels),
                        MARGIN - 4.0
                    );
                }
            }
        }
        out.push_str("</g>\n");
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 120.0,
            MARGIN + 14.0 * i as f64,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Number of out-of-memory markers in an SVG produced by [`scatter`].
pub fn count_oom_markers(svg: &str) -> usize {
    svg.matches(r#"class="oom""#).count()
}
