//! Static SVG histograms of metric values in [0, 1].

use std::fmt::Write;

const WIDTH: f64 = 420.0;
const HEIGHT: f64 = 260.0;
const MARGIN: f64 = 36.0;

/// Counts per bin over [0, 1]; 1.0 falls in the last bin.
pub fn bin_counts(values: &[f64], bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    for &v in values {
        if !v.is_finite() {
            continue;
        }
        let i = ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
}

pub fn histogram_svg(title: &str, values: &[f64], bins: usize) -> String {
    let counts = bin_counts(values, bins);
    let peak = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let bar_w = plot_w / bins as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{} (n={})</text>"#,
        WIDTH / 2.0,
        escape(title),
        values.len()
    );
    for (i, &c) in counts.iter().enumerate() {
        let h = plot_h * c as f64 / peak;
        let x = MARGIN + i as f64 * bar_w;
        let y = MARGIN + plot_h - h;
        let _ = writeln!(
            svg,
            r##"<rect x="{x:.1}" y="{y:.1}" width="{:.1}" height="{h:.1}" fill="#4c78a8"><title>{c}</title></rect>"##,
            bar_w - 1.0
        );
    }
    let base = MARGIN + plot_h;
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#,
        MARGIN + plot_w
    );
    for tick in 0..=bins {
        if tick % 2 == 1 && bins > 5 {
            continue;
        }
        let x = MARGIN + tick as f64 * bar_w;
        let _ = writeln!(
            svg,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{:.1}</text>"#,
            base + 14.0,
            tick as f64 / bins as f64
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
        MARGIN - 4.0,
        MARGIN + 4.0,
        peak as usize
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
