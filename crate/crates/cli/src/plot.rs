//! Self-contained SVG rendering of pooled SER versus Eb/N0 on a log axis.

use std::fmt::Write as _;

use rc_eq::ofdm::{Method, SerResult};

use crate::csv::{aggregate, AggregatePoint};
use crate::CliError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

fn color(method: Method) -> &'static str {
    match method {
        Method::EsnOptimum => "#d62728",
        Method::EsnRandom => "#1f77b4",
        Method::ZfPerfect => "#2ca02c",
        Method::LsMmse => "#9467bd",
        Method::MmseMmse => "#ff7f0e",
    }
}

/// Renders the pooled SER of every method found in `rows`.
///
/// Points at infinite Eb/N0 are left out; zero SER is drawn as a hollow marker
/// on the bottom edge. The output depends only on `rows` and `title`.
pub fn render_svg(rows: &[SerResult], title: &str) -> Result<String, CliError> {
    let schema = |message: &str| CliError::Schema { source_name: "plot input".into(), message: message.into() };
    let points: Vec<AggregatePoint> = aggregate(rows).into_iter().filter(|p| p.ebn0_db.is_finite()).collect();
    if points.is_empty() {
        return Err(schema("no finite data points"));
    }

    let (mut x_min, mut x_max) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.ebn0_db), hi.max(p.ebn0_db))
    });
    if x_min == x_max {
        x_min -= 1.0;
        x_max += 1.0;
    }
    let positive: Vec<f64> = points.iter().map(|p| p.ser).filter(|&s| s > 0.0).collect();
    let (mut d_lo, d_hi) = match positive.iter().fold(None, |acc: Option<(f64, f64)>, &s| {
        Some(acc.map_or((s, s), |(lo, hi)| (lo.min(s), hi.max(s))))
    }) {
        Some((lo, hi)) => (lo.log10().floor() as i32, (hi.log10().ceil() as i32).min(0)),
        None => (-4, 0),
    };
    if points.iter().any(|p| p.ser == 0.0) {
        d_lo -= 1;
    }
    let d_hi = d_hi.max(d_lo + 1);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |s: f64| {
        let l = if s > 0.0 { s.log10().max(d_lo as f64) } else { d_lo as f64 };
        TOP + (d_hi as f64 - l) / (d_hi - d_lo) as f64 * plot_h
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="14">{}</text>"#, LEFT + plot_w / 2.0, escape(title));

    for d in d_lo..=d_hi {
        let y = py(10f64.powi(d));
        let _ = writeln!(svg, r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, LEFT + plot_w);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let x_step = nice_step(x_max - x_min);
    let mut tick = (x_min / x_step).ceil() * x_step;
    while tick <= x_max + 1e-9 {
        let x = px(tick);
        let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/>"##, TOP + plot_h);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + plot_h + 18.0, crate::csv::format_number(tick));
        tick += x_step;
    }
    let _ = writeln!(svg, r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Eb/N0 (dB)</text>"#, LEFT + plot_w / 2.0, HEIGHT - 16.0);
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">SER</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let mut methods: Vec<Method> = points.iter().map(|p| p.method).collect();
    methods.dedup();
    for (i, &method) in methods.iter().enumerate() {
        let c = color(method);
        let series: Vec<&AggregatePoint> = points.iter().filter(|p| p.method == method).collect();
        if series.len() > 1 {
            let path: Vec<String> = series.iter().map(|p| format!("{:.2},{:.2}", px(p.ebn0_db), py(p.ser))).collect();
            let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, path.join(" "));
        }
        for p in &series {
            let fill = if p.ser > 0.0 { c } else { "white" };
            let _ = writeln!(
                svg,
                r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3.5" fill="{fill}" stroke="{c}"/>"#,
                px(p.ebn0_db),
                py(p.ser)
            );
        }
        let ly = TOP + 14.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 16.0;
        let _ = writeln!(svg, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{c}" stroke-width="2"/>"#, lx + 24.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 30.0, ly + 4.0, method.label());
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 8.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|&s| s >= raw).unwrap_or(10.0 * mag)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
