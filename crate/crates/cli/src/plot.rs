//! SVG rendering of mean best fitness against k, with max/min error bars.

use std::fmt::Write as _;

use hdea_core::harness::ComparisonSummary;
use hdea_core::Algorithm;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const CAP: f64 = 4.0;

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub mean: Vec<f64>,
    pub max: Vec<f64>,
    pub min: Vec<f64>,
}

/// Everything needed to draw one comparison figure.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub k_values: Vec<usize>,
    pub series: Vec<Series>,
}

impl PlotSpec {
    /// One series per algorithm present in the summary. Returns `None` when
    /// the summary has no cells or an algorithm misses some k.
    pub fn from_summary(summary: &ComparisonSummary, title: &str) -> Option<PlotSpec> {
        let k_values = summary.k_values();
        if k_values.is_empty() {
            return None;
        }
        let mut series = Vec::new();
        for algorithm in Algorithm::ALL {
            if summary.cells.iter().all(|c| c.algorithm != algorithm) {
                continue;
            }
            let cells = k_values
                .iter()
                .map(|&k| summary.cell(k, algorithm))
                .collect::<Option<Vec<_>>>()?;
            series.push(Series {
                label: algorithm.label().to_string(),
                mean: cells.iter().map(|c| c.mean).collect(),
                max: cells.iter().map(|c| c.max).collect(),
                min: cells.iter().map(|c| c.min).collect(),
            });
        }
        Some(PlotSpec {
            title: title.to_string(),
            x_label: "K".to_string(),
            y_label: "best fitness".to_string(),
            k_values,
            series,
        })
    }

    fn y_range(&self) -> (f64, f64) {
        let lo = self
            .series
            .iter()
            .flat_map(|s| &s.min)
            .copied()
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .series
            .iter()
            .flat_map(|s| &s.max)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if hi - lo <= 1e-9 || !hi.is_finite() || !lo.is_finite() {
            return (lo - 0.05, hi + 0.05);
        }
        let pad = (hi - lo) * 0.08;
        (lo - pad, hi + pad)
    }

    pub fn render(&self) -> String {
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let (k_lo, k_hi) = (
            self.k_values[0] as f64,
            *self.k_values.last().unwrap() as f64,
        );
        let x_of = |k: usize| {
            if k_hi > k_lo {
                LEFT + 20.0 + (k as f64 - k_lo) / (k_hi - k_lo) * (plot_w - 40.0)
            } else {
                LEFT + plot_w / 2.0
            }
        };
        let (y_lo, y_hi) = self.y_range();
        let y_of = |v: f64| TOP + (y_hi - v) / (y_hi - y_lo) * plot_h;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            svg,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape(&self.title)
        );

        // Axes and ticks.
        let _ = writeln!(
            svg,
            r#"<path class="axis" d="M {LEFT:.2} {TOP:.2} V {:.2} H {:.2}" fill="none" stroke="black"/>"#,
            TOP + plot_h,
            LEFT + plot_w
        );
        for &k in &self.k_values {
            let x = x_of(k);
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{k}</text>"#,
                TOP + plot_h,
                TOP + plot_h + 5.0,
                TOP + plot_h + 19.0
            );
        }
        for i in 0..=5 {
            let v = y_lo + (y_hi - y_lo) * i as f64 / 5.0;
            let y = y_of(v);
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0,
            escape(&self.y_label)
        );

        // Series, nudged sideways so overlapping bars stay readable.
        let count = self.series.len() as f64;
        for (si, s) in self.series.iter().enumerate() {
            let color = COLORS[si % COLORS.len()];
            let dx = (si as f64 - (count - 1.0) / 2.0) * 6.0;
            let points: Vec<String> = self
                .k_values
                .iter()
                .zip(&s.mean)
                .map(|(&k, &m)| format!("{:.2},{:.2}", x_of(k) + dx, y_of(m)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline class="series" data-label="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                escape(&s.label),
                points.join(" ")
            );
            for (i, &k) in self.k_values.iter().enumerate() {
                let x = x_of(k) + dx;
                let (y_max, y_min, y_mean) = (y_of(s.max[i]), y_of(s.min[i]), y_of(s.mean[i]));
                let _ = writeln!(
                    svg,
                    r#"<path class="error-bar" d="M {x:.2} {y_max:.2} V {y_min:.2} M {:.2} {y_max:.2} H {:.2} M {:.2} {y_min:.2} H {:.2}" stroke="{color}" fill="none"/>"#,
                    x - CAP,
                    x + CAP,
                    x - CAP,
                    x + CAP
                );
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{x:.2}" cy="{y_mean:.2}" r="3" fill="{color}"/>"#
                );
            }
            let ly = TOP + 10.0 + 20.0 * si as f64;
            let lx = WIDTH - RIGHT + 15.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 24.0,
                lx + 30.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
