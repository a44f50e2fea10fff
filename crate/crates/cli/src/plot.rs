//! Self-contained SVG line plots of CSV tables.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};
use stopsum_core::numeric::{log_log_slope, ols_slope};
use stopsum_core::report::Table;

#[derive(Debug, Clone)]
pub struct PlotStyle {
    pub title: String,
    pub log_x: bool,
    pub log_y: bool,
    /// Print the least squares slope of the plotted points.
    pub annotate_slope: bool,
}

impl PlotStyle {
    pub fn log_log(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            log_x: true,
            log_y: true,
            annotate_slope: true,
        }
    }

    pub fn log_x(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            log_x: true,
            log_y: false,
            annotate_slope: false,
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

/// Slope printed by [`render`] for these points and axes.
pub fn fitted_slope(points: &[(f64, f64)], style: &PlotStyle) -> Option<f64> {
    if style.log_x && style.log_y {
        return log_log_slope(points);
    }
    let keep = |v: f64, log: bool| if log { (v > 0.0).then(|| v.ln()) } else { Some(v) };
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter_map(|&(x, y)| Some((keep(x, style.log_x)?, keep(y, style.log_y)?)))
        .unzip();
    ols_slope(&x, &y)
}

/// Axis range in plot coordinates, widened when degenerate.
fn range(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > 1e-12 * lo.abs().max(1.0) {
        (lo, hi)
    } else {
        let pad = 0.5 * lo.abs().max(1.0);
        (lo - pad, hi + pad)
    }
}

fn tick_label(v: f64, log: bool) -> String {
    let x = if log { v.exp() } else { v };
    if x != 0.0 && (x.abs() >= 1e4 || x.abs() < 1e-2) {
        format!("{x:.2e}")
    } else {
        format!("{x:.3}")
    }
}

/// SVG for `y_col` against `x_col`. Points that cannot be shown on a
/// log axis are dropped.
pub fn render(table: &Table, x_col: &str, y_col: &str, style: &PlotStyle) -> Result<String> {
    if table.is_empty() {
        bail!("cannot plot an empty table");
    }
    let (Some(xs), Some(ys)) = (table.column(x_col), table.column(y_col)) else {
        bail!("table has no numeric columns {x_col} and {y_col}");
    };
    let points: Vec<(f64, f64)> = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| (x, y))
        .filter(|&(x, y)| {
            x.is_finite() && y.is_finite() && (!style.log_x || x > 0.0) && (!style.log_y || y > 0.0)
        })
        .collect();
    if points.is_empty() {
        bail!("no plottable points in {y_col} against {x_col}");
    }
    let tx = |v: f64| if style.log_x { v.ln() } else { v };
    let ty = |v: f64| if style.log_y { v.ln() } else { v };
    let px: Vec<f64> = points.iter().map(|p| tx(p.0)).collect();
    let py: Vec<f64> = points.iter().map(|p| ty(p.1)).collect();
    let (x0, x1) = range(&px);
    let (y0, y1) = range(&py);
    let sx = |v: f64| LEFT + (v - x0) / (x1 - x0) * (WIDTH - LEFT - RIGHT);
    let sy = |v: f64| HEIGHT - BOTTOM - (v - y0) / (y1 - y0) * (HEIGHT - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(&style.title)
    );
    let (bx, by) = (HEIGHT - BOTTOM, WIDTH - RIGHT);
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT},{TOP} V{bx} H{by}" fill="none" stroke="black"/>"#
    );
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let vx = x0 + f * (x1 - x0);
        let vy = y0 + f * (y1 - y0);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(vx),
            bx + 16.0,
            tick_label(vx, style.log_x)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            sy(vy) + 4.0,
            tick_label(vy, style.log_y)
        );
    }
    let axis = |name: &str, log: bool| if log { format!("{name} (log)") } else { name.to_string() };
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0,
        escape(&axis(x_col, style.log_x))
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&axis(y_col, style.log_y))
    );
    if px.len() > 1 {
        let path: Vec<String> = px
            .iter()
            .zip(&py)
            .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
            path.join(" ")
        );
    }
    for (&x, &y) in px.iter().zip(&py) {
        let _ = writeln!(
            s,
            r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
            sx(x),
            sy(y)
        );
    }
    if style.annotate_slope {
        if let Some(slope) = fitted_slope(&points, style) {
            let _ = writeln!(
                s,
                r#"<text class="slope" x="{}" y="{}" text-anchor="end" data-slope="{slope:e}">slope {slope:.4}</text>"#,
                WIDTH - RIGHT - 4.0,
                TOP + 14.0
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(table: &Table, x_col: &str, y_col: &str, style: &PlotStyle, path: &Path) -> Result<()> {
    std::fs::write(path, render(table, x_col, y_col, style)?)?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use stopsum_core::clustering::{dyadic, ClusterParams, ClusterPipeline};
    use stopsum_core::report::Cell;

    fn attr(svg: &str, class: &str, name: &str) -> Vec<f64> {
        svg.lines()
            .filter(|l| l.contains(&format!("class=\"{class}\"")))
            .map(|l| {
                let key = format!("{name}=\"");
                let start = l.find(&key).unwrap() + key.len();
                let end = start + l[start..].find('"').unwrap();
                l[start..end].parse().unwrap()
            })
            .collect()
    }

    #[test]
    fn single_point_has_one_finite_marker() {
        let mut t = Table::new(["t", "ratio"]);
        t.push(vec![Cell::Int(100), Cell::Real(1.02)]);
        let svg = render(&t, "t", "ratio", &PlotStyle::log_x("one")).unwrap();
        let cx = attr(&svg, "marker", "cx");
        let cy = attr(&svg, "marker", "cy");
        assert_eq!((cx.len(), cy.len()), (1, 1));
        assert!(cx[0].is_finite() && cy[0].is_finite());
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn ratio_curve_keeps_axis_order() {
        let mut t = Table::new(["t", "ratio"]);
        for (x, r) in [(100, 1.03), (1000, 1.002), (10000, 1.0002)] {
            t.push(vec![Cell::Int(x), Cell::Real(r)]);
        }
        let svg = render(&t, "t", "ratio", &PlotStyle::log_x("ratio")).unwrap();
        let cx = attr(&svg, "marker", "cx");
        assert_eq!(cx.len(), 3);
        assert!(cx.windows(2).all(|w| w[0] < w[1]));
        // Larger ratios sit higher, which in SVG is a smaller y.
        let cy = attr(&svg, "marker", "cy");
        assert!(cy.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn empty_table_is_rejected() {
        let t = Table::new(["t", "ratio"]);
        assert!(render(&t, "t", "ratio", &PlotStyle::log_x("none")).is_err());
    }

    #[test]
    fn clustering_annotation_matches_refit_from_csv() {
        let pipe = ClusterPipeline::up_to(ClusterParams::unit(8.0, 6.5, 1.0).unwrap(), 1024).unwrap();
        let table = pipe.curve(&dyadic(64, 1024)).unwrap();
        let csv = table.to_csv();
        let svg = render(&table, "k", "c_star", &PlotStyle::log_log("C*(k)")).unwrap();
        let annotated = attr(&svg, "slope", "data-slope");
        assert_eq!(annotated.len(), 1);

        // Independent refit from the emitted CSV text.
        let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for line in csv.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            let x = f[0].parse::<f64>().unwrap().ln();
            let y = f[3].parse::<f64>().unwrap().ln();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            n += 1.0;
        }
        let refit = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!((annotated[0] - refit).abs() < 1e-9, "{} vs {refit}", annotated[0]);
    }
}
