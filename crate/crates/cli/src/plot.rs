//! Static SVG line charts of traces.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::warn;

use crate::error::HarnessError;
use crate::output::{read_trace, TraceRecord};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    BestCost,
    MeanError,
}

impl Metric {
    pub fn column(self) -> &'static str {
        match self {
            Metric::BestCost => "best_cost",
            Metric::MeanError => "mean_error",
        }
    }

    pub fn pick(self, row: &TraceRecord) -> f64 {
        match self {
            Metric::BestCost => row.best_cost,
            Metric::MeanError => row.mean_error,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Tick label text; also what tests compare against.
pub fn tick_label(v: f64) -> String {
    format!("{v:.6e}")
}

/// Renders the series as an SVG document. Points that are not finite, or not
/// positive on a log axis, are dropped. Returns `None` when nothing is left.
pub fn render_svg(series: &[Series], log_y: bool, title: &str, y_name: &str) -> Option<String> {
    let kept: Vec<(&str, Vec<(f64, f64)>)> = series
        .iter()
        .filter_map(|s| {
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .copied()
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_y || *y > 0.0))
                .collect();
            if pts.is_empty() {
                warn!("series {:?} has no plottable points", s.label);
                None
            } else {
                Some((s.label.as_str(), pts))
            }
        })
        .collect();
    if kept.is_empty() {
        warn!("nothing to plot");
        return None;
    }

    let all = kept.iter().flat_map(|(_, p)| p.iter());
    let (mut x_min, mut x_max, mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| {
        if x_max > x_min {
            LEFT + (x - x_min) / (x_max - x_min) * plot_w
        } else {
            LEFT + plot_w / 2.0
        }
    };
    let (ly_min, ly_max) = (ty(y_min), ty(y_max));
    let sy = |y: f64| {
        if ly_max > ly_min {
            TOP + (1.0 - (ty(y) - ly_min) / (ly_max - ly_min)) * plot_h
        } else {
            TOP + plot_h / 2.0
        }
    };

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        TOP - 15.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    // Ticks at the data extremes.
    let x_axis = TOP + plot_h;
    for (x, anchor) in [(x_min, "start"), (x_max, "end")] {
        let px = sx(x);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.3}" y1="{x_axis}" x2="{px:.3}" y2="{}" stroke="black"/>"#,
            x_axis + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text class="tick-x" x="{px:.3}" y="{}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{}</text>"#,
            x_axis + 18.0,
            tick_label(x)
        );
    }
    for y in [y_min, y_max] {
        let py = sy(y);
        let _ = writeln!(svg, r#"<line x1="{}" y1="{py:.3}" x2="{LEFT}" y2="{py:.3}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(
            svg,
            r#"<text class="tick-y" x="{}" y="{:.3}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            LEFT - 8.0,
            py + 4.0,
            tick_label(y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">iteration</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 15 {})">{}{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(y_name),
        if log_y { " (log)" } else { "" }
    );

    for (k, (label, pts)) in kept.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut d = String::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.3},{:.3}", if i == 0 { "M" } else { " L" }, sx(x), sy(y));
        }
        let _ = writeln!(
            svg,
            r#"<path class="series" data-label="{}" d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            escape(label)
        );
        let ly = TOP + 10.0 + 16.0 * k as f64;
        let lx = WIDTH - RIGHT + 10.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            lx + 25.0,
            ly + 4.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    Some(svg)
}

/// Plots `metric` from each trace file into `out`. Returns `false`, writing
/// nothing, when there is nothing to plot.
pub fn render_plot(traces: &[PathBuf], out: &Path, log_y: bool, metric: Metric) -> Result<bool, HarnessError> {
    let mut series = Vec::new();
    for path in traces {
        let rows = read_trace(path)?;
        series.push(Series {
            label: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            points: rows.iter().map(|r| (r.iteration as f64, metric.pick(r))).collect(),
        });
    }
    match render_svg(&series, log_y, "", metric.column()) {
        Some(svg) => {
            std::fs::write(out, svg).map_err(|source| HarnessError::Io {
                path: out.to_path_buf(),
                source,
            })?;
            Ok(true)
        }
        None => Ok(false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_coords(svg: &str) -> Vec<Vec<(f64, f64)>> {
        svg.lines()
            .filter(|l| l.starts_with("<path"))
            .map(|l| {
                let d = l.split(" d=\"").nth(1).unwrap().split('"').next().unwrap();
                d.split(['M', 'L'])
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|p| {
                        let (x, y) = p.split_once(',').unwrap();
                        (x.parse().unwrap(), y.parse().unwrap())
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn monotone_trace_gives_monotone_polyline() {
        let s = Series {
            label: "a".into(),
            points: (0..20).map(|i| (i as f64, 100.0 / (1.0 + i as f64))).collect(),
        };
        let svg = render_svg(&[s], true, "t", "best cost").unwrap();
        let paths = path_coords(&svg);
        assert_eq!(paths.len(), 1);
        for w in paths[0].windows(2) {
            assert!(w[1].0 > w[0].0);
            // Falling cost means rising screen y.
            assert!(w[1].1 > w[0].1);
        }
    }

    #[test]
    fn two_series_two_paths() {
        let a = Series {
            label: "a".into(),
            points: vec![(0.0, 1.0), (1.0, 2.0)],
        };
        let b = Series {
            label: "b & c".into(),
            points: vec![(0.0, 3.0), (2.0, 0.5)],
        };
        let svg = render_svg(&[a, b], false, "", "y").unwrap();
        assert_eq!(path_coords(&svg).len(), 2);
        assert!(svg.contains("b &amp; c"));
        assert!(svg.contains(&format!(">{}<", tick_label(0.5))));
        assert!(svg.contains(&format!(">{}<", tick_label(3.0))));
        assert!(svg.contains(&format!(">{}<", tick_label(2.0))));
    }

    #[test]
    fn empty_input_is_none() {
        assert!(render_svg(&[], false, "", "y").is_none());
        let zero = Series {
            label: "z".into(),
            points: vec![(0.0, 0.0)],
        };
        assert!(render_svg(&[zero], true, "", "y").is_none());
    }

    #[test]
    fn flat_series_stays_inside_frame() {
        let s = Series {
            label: "flat".into(),
            points: vec![(3.0, 1.0)],
        };
        let svg = render_svg(&[s], false, "", "y").unwrap();
        let (x, y) = path_coords(&svg)[0][0];
        assert!(x > LEFT && x < WIDTH - RIGHT);
        assert!(y > TOP && y < HEIGHT - BOTTOM);
    }
}
