//! File formats: graph/series/distance CSVs, loss curves, and JSON documents.
//! All writes are atomic (write to a temp sibling, then rename).

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use cgpronet_core::series::TimeSeries;
use cgpronet_core::DirectedGraph;
use nalgebra::DMatrix;

/// Writes bytes atomically: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let file_name = path
        .file_name()
        .with_context(|| format!("invalid output path {}", path.display()))?
        .to_string_lossy()
        .into_owned();
    let tmp = dir.join(format!(".{file_name}.tmp"));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Graph edge list as CSV with header `src,dst,weight`.
pub fn write_graph_csv(path: &Path, g: &DirectedGraph) -> Result<()> {
    let mut out = String::from("src,dst,weight\n");
    for (s, d, w) in g.edges() {
        out.push_str(&format!("{s},{d},{w}\n"));
    }
    atomic_write(path, out.as_bytes())
}

pub fn read_graph_csv(path: &Path, n_nodes: Option<usize>) -> Result<DirectedGraph> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    {
        let headers = reader.headers()?;
        if headers.iter().collect::<Vec<_>>() != ["src", "dst", "weight"] {
            bail!("{}: expected header src,dst,weight", path.display());
        }
    }
    let mut edges = Vec::new();
    let mut max_node = 0usize;
    for (row, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", path.display(), row + 2))?;
        if record.len() != 3 {
            bail!("{}: row {} has {} fields, expected 3", path.display(), row + 2, record.len());
        }
        let parse_idx = |col: usize, name: &str| -> Result<usize> {
            record[col].trim().parse().with_context(|| {
                format!("{}: row {} column {name}: not an index", path.display(), row + 2)
            })
        };
        let s = parse_idx(0, "src")?;
        let d = parse_idx(1, "dst")?;
        let w: f64 = record[2].trim().parse().with_context(|| {
            format!("{}: row {} column weight: not a number", path.display(), row + 2)
        })?;
        max_node = max_node.max(s).max(d);
        edges.push((s, d, w));
    }
    let n = n_nodes.unwrap_or(max_node + 1);
    Ok(DirectedGraph::from_edges(n, edges)?)
}

/// Series CSV: first column is the node id, remaining columns are time steps.
pub fn write_series_csv(path: &Path, series: &TimeSeries) -> Result<()> {
    let mut out = String::from("node");
    for k in 0..series.len() {
        out.push_str(&format!(",t{k}"));
    }
    out.push('\n');
    let data = series.data();
    for i in 0..series.n_nodes() {
        out.push_str(&format!("{i}"));
        for k in 0..series.len() {
            out.push_str(&format!(",{}", data[(i, k)]));
        }
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

pub fn read_series_csv(path: &Path) -> Result<TimeSeries> {
    read_series_csv_opts(path, false)
}

/// Like [`read_series_csv`], but with `forward_fill` a non-numeric or empty
/// cell takes the node's previous time-step value instead of failing. The
/// first time step must still be numeric for every node.
pub fn read_series_csv_opts(path: &Path, forward_fill: bool) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let width = reader.headers()?.len();
    if width < 2 {
        bail!("{}: need a node column plus at least one time column", path.display());
    }
    let k = width - 1;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", path.display(), row + 2))?;
        if record.len() != width {
            bail!(
                "{}: row {} has {} fields, expected {width}",
                path.display(),
                row + 2,
                record.len()
            );
        }
        let node: usize = record[0].trim().parse().with_context(|| {
            format!("{}: row {} column node: not an index", path.display(), row + 2)
        })?;
        if node != row {
            bail!("{}: row {} has node id {node}, expected {row}", path.display(), row + 2);
        }
        let mut vals: Vec<f64> = Vec::with_capacity(k);
        for c in 1..width {
            match record[c].trim().parse::<f64>() {
                Ok(v) if v.is_finite() => vals.push(v),
                _ if forward_fill && c > 1 => {
                    let prev = vals[c - 2];
                    vals.push(prev);
                }
                _ => bail!(
                    "{}: row {} column {c}: not a finite number",
                    path.display(),
                    row + 2
                ),
            }
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    let n = rows.len();
    let data = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    Ok(TimeSeries::new(data)?)
}

/// Square distance matrix: N rows of N comma-separated values, no header.
pub fn read_distance_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", path.display(), row + 1))?;
        let mut vals = Vec::with_capacity(record.len());
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().with_context(|| {
                format!("{}: row {} column {}: not a number", path.display(), row + 1, c + 1)
            })?;
            vals.push(v);
        }
        rows.push(vals);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        bail!("{}: distance matrix must be square and non-empty", path.display());
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Loss curves as `epoch,train_loss,val_loss`.
pub fn write_loss_csv(path: &Path, train: &[f64], val: &[f64]) -> Result<()> {
    let mut out = String::from("epoch,train_loss,val_loss\n");
    for (epoch, (t, v)) in train.iter().zip(val).enumerate() {
        out.push_str(&format!("{epoch},{t},{v}\n"));
    }
    atomic_write(path, out.as_bytes())
}
