//! Plot-data emission: gnuplot-compatible columnar text plus a deterministic
//! standalone SVG rendering.

use anyhow::{bail, Context, Result};
use std::path::Path;

/// A named series of (x, y) points.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// Loss-curve CSV (`epoch,train_loss,val_loss`) as two series over epochs.
pub fn loss_plot(path: &Path) -> Result<PlotData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut train = Vec::new();
    let mut val = Vec::new();
    for record in reader.records() {
        let record = record?;
        let epoch: f64 = record[0].trim().parse()?;
        train.push((epoch, record[1].trim().parse()?));
        val.push((epoch, record[2].trim().parse()?));
    }
    if train.is_empty() {
        bail!("{}: no rows to plot", path.display());
    }
    Ok(PlotData {
        title: "training curves".into(),
        x_label: "epoch".into(),
        y_label: "loss".into(),
        series: vec![
            Series { name: "train".into(), points: train },
            Series { name: "val".into(), points: val },
        ],
    })
}

/// Stability CSV (`p,snr_db,mean_rmse,std_rmse`) as one curve per SNR over p.
pub fn stability_plot(path: &Path) -> Result<PlotData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut series: Vec<Series> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let p: f64 = record[0].trim().parse()?;
        let snr: f64 = record[1].trim().parse()?;
        let rmse: f64 = record[2].trim().parse()?;
        let name = format!("snr={snr}dB");
        match series.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push((p, rmse)),
            None => series.push(Series { name, points: vec![(p, rmse)] }),
        }
    }
    if series.is_empty() {
        bail!("{}: no rows to plot", path.display());
    }
    Ok(PlotData {
        title: "perturbation stability".into(),
        x_label: "p".into(),
        y_label: "rMSE".into(),
        series,
    })
}

/// Whitespace-separated columns with `#`-comment headers, one block per
/// series, consumable by `gnuplot ... index N`.
pub fn to_gnuplot(data: &PlotData) -> String {
    let mut out = format!("# {}\n# x: {}  y: {}\n", data.title, data.x_label, data.y_label);
    for s in &data.series {
        out.push_str(&format!("\n# series: {}\n", s.name));
        for (x, y) in &s.points {
            out.push_str(&format!("{x} {y}\n"));
        }
    }
    out
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Deterministic standalone SVG line plot.
pub fn to_svg(data: &PlotData) -> Result<String> {
    let pts: Vec<(f64, f64)> = data.series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if pts.is_empty() {
        bail!("nothing to plot");
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (SVG_W - 2.0 * MARGIN);
    let sy = |y: f64| SVG_H - MARGIN - (y - y0) / (y1 - y0) * (SVG_H - 2.0 * MARGIN);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
         viewBox=\"0 0 {SVG_W} {SVG_H}\">\n\
         <rect width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>\n"
    );
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        r = SVG_W - MARGIN,
        t = MARGIN,
        b = SVG_H - MARGIN,
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        SVG_W / 2.0,
        SVG_H - MARGIN / 3.0,
        data.x_label
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"14\" \
         transform=\"rotate(-90 {:.1} {:.1})\">{}</text>\n",
        MARGIN / 3.0,
        SVG_H / 2.0,
        MARGIN / 3.0,
        SVG_H / 2.0,
        data.y_label
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        SVG_W / 2.0,
        MARGIN / 2.0,
        data.title
    ));
    // Range labels.
    svg.push_str(&format!(
        "<text x=\"{m:.1}\" y=\"{b2:.1}\" font-size=\"11\">{x0}</text>\n\
         <text x=\"{r:.1}\" y=\"{b2:.1}\" text-anchor=\"end\" font-size=\"11\">{x1}</text>\n\
         <text x=\"{m2:.1}\" y=\"{b:.1}\" text-anchor=\"end\" font-size=\"11\">{y0}</text>\n\
         <text x=\"{m2:.1}\" y=\"{t:.1}\" text-anchor=\"end\" font-size=\"11\">{y1}</text>\n",
        m = MARGIN,
        m2 = MARGIN - 5.0,
        r = SVG_W - MARGIN,
        t = MARGIN + 4.0,
        b = SVG_H - MARGIN,
        b2 = SVG_H - MARGIN + 15.0,
    ));
    for (i, s) in data.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> =
            s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        for &(x, y) in &s.points {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                sx(x),
                sy(y)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            SVG_W - MARGIN + 5.0,
            MARGIN + 16.0 * i as f64,
            s.name
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
