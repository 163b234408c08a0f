//! Minimal native SVG plotting: polyline charts and class-colored scatter
//! plots. Plots are conveniences; the CSVs are the contract.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use acclim_core::error::Result;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 70.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Range {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Range { lo: 0.0, hi: 1.0 };
        }
        if (hi - lo).abs() < 1e-12 {
            return Range {
                lo: lo - 0.5,
                hi: hi + 0.5,
            };
        }
        let pad = 0.05 * (hi - lo);
        Range {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn to_x(&self, v: f64) -> f64 {
        MARGIN + (v - self.lo) / (self.hi - self.lo) * (WIDTH - 2.0 * MARGIN)
    }

    fn to_y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.lo) / (self.hi - self.lo) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn svg_header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"18\">{title}</text>\n",
        WIDTH / 2.0
    )
}

fn axes(xr: &Range, yr: &Range, x_label: &str, y_label: &str) -> String {
    let x0 = MARGIN;
    let x1 = WIDTH - MARGIN;
    let y0 = HEIGHT - MARGIN;
    let y1 = MARGIN;
    format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{x_label}</text>\n\
         <text x=\"20\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" transform=\"rotate(-90 20 {})\">{y_label}</text>\n\
         <text x=\"{x0}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n\
         <text x=\"{x1}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 20.0,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        y0 + 20.0,
        trim_num(xr.lo),
        y0 + 20.0,
        trim_num(xr.hi),
        x0 - 5.0,
        y0,
        trim_num(yr.lo),
        x0 - 5.0,
        y1 + 4.0,
        trim_num(yr.hi),
    )
}

fn trim_num(v: f64) -> String {
    format!("{v:.3}")
}

/// Polyline chart with one colored line per series and a legend.
pub fn line_chart(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> Result<()> {
    let xr = Range::of(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let yr = Range::of(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let mut svg = svg_header(title);
    svg.push_str(&axes(&xr, &yr, x_label, y_label));
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", xr.to_x(x), yr.to_y(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        let ly = MARGIN + 18.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            WIDTH - MARGIN - 120.0,
            WIDTH - MARGIN - 95.0,
            WIDTH - MARGIN - 90.0,
            ly + 4.0,
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(svg.as_bytes())?;
    Ok(())
}

/// Scatter plot with one color per class label.
pub fn scatter_classes(path: &Path, title: &str, points: &[(f64, f64, usize)]) -> Result<()> {
    let xr = Range::of(points.iter().map(|p| p.0));
    let yr = Range::of(points.iter().map(|p| p.1));
    let mut svg = svg_header(title);
    svg.push_str(&axes(&xr, &yr, "mds 1", "mds 2"));
    for &(x, y, class) in points {
        let color = PALETTE[class % PALETTE.len()];
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"{color}\" fill-opacity=\"0.6\"/>\n",
            xr.to_x(x),
            yr.to_y(y)
        ));
    }
    let mut classes: Vec<usize> = points.iter().map(|p| p.2).collect();
    classes.sort_unstable();
    classes.dedup();
    for (i, class) in classes.iter().enumerate() {
        let color = PALETTE[class % PALETTE.len()];
        let ly = MARGIN + 16.0 * i as f64;
        svg.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{ly}\" r=\"4\" fill=\"{color}\"/>\n\
             <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">class {class}</text>\n",
            WIDTH - MARGIN - 60.0,
            WIDTH - MARGIN - 50.0,
            ly + 4.0
        ));
    }
    svg.push_str("</svg>\n");
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(svg.as_bytes())?;
    Ok(())
}
