//! File formats: JSONL and binary point sets, graph exports, CSV sweep
//! tables and self-contained SVG line plots.
//!
//! CSV emission is byte-stable: fixed column order, shortest-roundtrip
//! float formatting, and a schema version stamped on every row.

use crate::abperc::LambdaCEstimate;
use crate::experiments::{EdgeCountReport, PnReport, SweepReport, TrialBatch, SCHEMA_VERSION};
use crate::geom::SpherePoint;
use crate::graph::BorsukGraph;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad magic bytes (expected {0})")]
    BadMagic(&'static str),
    #[error("malformed point file: {0}")]
    Malformed(String),
    #[error("geometry: {0}")]
    Geom(#[from] crate::geom::GeomError),
}

// ------------------------------------------------------------------
// Point sets
// ------------------------------------------------------------------

/// One point per line, each a JSON array of full-precision coordinates.
pub fn write_points_jsonl<P: AsRef<Path>>(path: P, points: &[SpherePoint]) -> Result<(), IoError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for p in points {
        serde_json::to_writer(&mut w, p.coords())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points_jsonl<P: AsRef<Path>>(path: P) -> Result<Vec<SpherePoint>, IoError> {
    let r = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let coords: Vec<f64> = serde_json::from_str(&line)?;
        out.push(SpherePoint::new(coords)?);
    }
    Ok(out)
}

pub const POINTS_MAGIC: &[u8; 8] = b"BORSUKPT";

/// Binary block format: 16-byte header (magic, u32 d, u32 n) followed by
/// `n * (d+1)` little-endian f64 coordinates.
pub fn write_points_binary<P: AsRef<Path>>(path: P, points: &[SpherePoint]) -> Result<(), IoError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let d = points.first().map_or(0, |p| p.dim()) as u32;
    w.write_all(POINTS_MAGIC)?;
    w.write_all(&d.to_le_bytes())?;
    w.write_all(&(points.len() as u32).to_le_bytes())?;
    for p in points {
        for c in p.coords() {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_points_binary<P: AsRef<Path>>(path: P) -> Result<Vec<SpherePoint>, IoError> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..8] != POINTS_MAGIC {
        return Err(IoError::BadMagic("BORSUKPT"));
    }
    let d = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let mut buf = vec![0u8; n * (d + 1) * 8];
    r.read_exact(&mut buf).map_err(|_| {
        IoError::Malformed(format!("expected {} coordinates", n * (d + 1)))
    })?;
    let mut out = Vec::with_capacity(n);
    for chunk in buf.chunks_exact((d + 1) * 8) {
        let coords: Vec<f64> = chunk
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        out.push(SpherePoint::new(coords)?);
    }
    Ok(out)
}

// ------------------------------------------------------------------
// Graph exports
// ------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphExport {
    pub schema_version: u32,
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub seed: Option<u64>,
    pub edges: Vec<(u32, u32)>,
}

impl GraphExport {
    pub fn from_graph(g: &BorsukGraph, seed: Option<u64>) -> Self {
        let mut edges = Vec::with_capacity(g.edge_count());
        for (i, neigh) in g.adj.iter().enumerate() {
            for &j in neigh {
                if (i as u32) < j {
                    edges.push((i as u32, j));
                }
            }
        }
        Self {
            schema_version: SCHEMA_VERSION,
            n: g.n(),
            d: g.d,
            alpha: g.alpha,
            seed,
            edges,
        }
    }
}

pub fn write_graph_json<P: AsRef<Path>>(path: P, export: &GraphExport) -> Result<(), IoError> {
    let w = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(w, export)?;
    Ok(())
}

pub fn read_graph_json<P: AsRef<Path>>(path: P) -> Result<GraphExport, IoError> {
    let r = BufReader::new(std::fs::File::open(path)?);
    Ok(serde_json::from_reader(r)?)
}

pub const EDGES_MAGIC: &[u8; 8] = b"BORSUKEL";

/// Compact binary edge list: magic, u32 n, u64 m, then m little-endian
/// (u32, u32) pairs.
pub fn write_edges_binary<P: AsRef<Path>>(path: P, export: &GraphExport) -> Result<(), IoError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(EDGES_MAGIC)?;
    w.write_all(&(export.n as u32).to_le_bytes())?;
    w.write_all(&(export.edges.len() as u64).to_le_bytes())?;
    for &(i, j) in &export.edges {
        w.write_all(&i.to_le_bytes())?;
        w.write_all(&j.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_edges_binary<P: AsRef<Path>>(path: P) -> Result<(u32, Vec<(u32, u32)>), IoError> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut header = [0u8; 20];
    r.read_exact(&mut header)?;
    if &header[..8] != EDGES_MAGIC {
        return Err(IoError::BadMagic("BORSUKEL"));
    }
    let n = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let m = u64::from_le_bytes(header[12..20].try_into().unwrap()) as usize;
    let mut buf = vec![0u8; m * 8];
    r.read_exact(&mut buf)
        .map_err(|_| IoError::Malformed(format!("expected {m} edges")))?;
    let edges = buf
        .chunks_exact(8)
        .map(|b| {
            (
                u32::from_le_bytes(b[..4].try_into().unwrap()),
                u32::from_le_bytes(b[4..].try_into().unwrap()),
            )
        })
        .collect();
    Ok((n, edges))
}

/// Pretty-printed JSON for any serializable report.
pub fn write_json<P: AsRef<Path>, T: Serialize>(path: P, value: &T) -> Result<(), IoError> {
    let w = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(w, value)?;
    Ok(())
}

// ------------------------------------------------------------------
// CSV emission
// ------------------------------------------------------------------

/// CSV for a generic trial batch.
pub fn trial_batch_csv(batch: &TrialBatch) -> String {
    let mut out = String::from(
        "schema_version,label,n,alpha,lambda,half_width,trials,decided,censored,hits,freq,ci_lo,ci_hi\n",
    );
    for c in &batch.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            batch.schema_version,
            c.label.replace(',', ";"),
            c.n,
            c.alpha,
            c.lambda,
            c.half_width,
            c.trials,
            c.decided,
            c.censored,
            c.hits,
            c.estimate,
            c.ci_lo,
            c.ci_hi
        ));
    }
    out
}

/// CSV for a threshold sweep (cells plus crossing summary rows).
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from(
        "schema_version,kind,n,c,alpha,trials,decided,censored,hits,freq,ci_lo,ci_hi\n",
    );
    for c in &report.cells {
        out.push_str(&format!(
            "{},cell,{},{},{},{},{},{},{},{},{},{}\n",
            report.schema_version,
            c.n,
            c.lambda,
            c.alpha,
            c.trials,
            c.decided,
            c.censored,
            c.hits,
            c.estimate,
            c.ci_lo,
            c.ci_hi
        ));
    }
    for f in &report.crossings {
        out.push_str(&format!(
            "{},crossing,{},{},,,,,,{},{},{}\n",
            report.schema_version, f.n, f.crossing, f.crossing, f.ci.0, f.ci.1
        ));
    }
    out.push_str(&format!(
        "{},pooled,,{},,,,,,{},{},{}\n",
        report.schema_version,
        report.pooled_crossing,
        report.pooled_crossing,
        report.pooled_crossing - report.pooled_half_width,
        report.pooled_crossing + report.pooled_half_width
    ));
    out
}

/// CSV for a percolation sweep: `lambda, R, trials, hits, freq, ci`.
pub fn lambda_sweep_csv(est: &LambdaCEstimate) -> String {
    let mut out =
        String::from("schema_version,model,lambda,R,trials,hits,freq,ci_lo,ci_hi\n");
    let model = match est.model {
        crate::abperc::PercModel::Ab => "ab",
        crate::abperc::PercModel::Boolean => "boolean",
    };
    for c in &est.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            SCHEMA_VERSION, model, c.lambda, c.half_width, c.trials, c.hits, c.freq, c.ci_lo, c.ci_hi
        ));
    }
    out
}

/// CSV for the edge-count report.
pub fn edge_count_csv(report: &EdgeCountReport) -> String {
    let mut out = String::from(
        "schema_version,d,nu,mu,n,alpha,trials,mean,mean_sigma,p_zero,p_zero_lo,p_zero_hi,target_p_zero,tv_poisson\n",
    );
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            report.schema_version,
            report.d,
            report.nu,
            report.mu,
            r.n,
            r.alpha,
            r.trials,
            r.mean,
            r.mean_sigma,
            r.p_zero,
            r.p_zero_ci.0,
            r.p_zero_ci.1,
            r.target_p_zero,
            r.tv_poisson
        ));
    }
    out
}

/// CSV for the connection-probability report.
pub fn pn_csv(report: &PnReport) -> String {
    let mut out = String::from(
        "schema_version,d,c_d,alpha,pairs,hits,empirical,exact,z_exact,asymptotic_ratio\n",
    );
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            report.schema_version,
            report.d,
            report.c_d,
            r.alpha,
            r.pairs,
            r.hits,
            r.empirical,
            r.exact,
            r.z_exact,
            r.asymptotic_ratio
        ));
    }
    out
}

pub fn write_text<P: AsRef<Path>>(path: P, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text)?;
    Ok(())
}

// ------------------------------------------------------------------
// SVG plots
// ------------------------------------------------------------------

/// Minimal self-contained SVG line plot of one or more series.
pub fn svg_line_plot(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h) = (720.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for (_, pts) in series {
        for &(x, y) in pts {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
    }
    if !xmin.is_finite() {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    if (xmax - xmin).abs() < 1e-12 {
        xmax = xmin + 1.0;
    }
    if (ymax - ymin).abs() < 1e-12 {
        ymax = ymin + 1.0;
    }
    let sx = |x: f64| ml + (x - xmin) / (xmax - xmin) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb);
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        w / 2.0,
        title
    );
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb,
        h - mb
    ));
    for i in 0..=4 {
        let fx = xmin + (xmax - xmin) * i as f64 / 4.0;
        let fy = ymin + (ymax - ymin) * i as f64 / 4.0;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{fx:.3}</text>\n",
            sx(fx),
            h - mb + 18.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{fy:.3}</text>\n",
            ml - 6.0,
            sy(fy) + 4.0
        ));
    }
    for (si, (label, pts)) in series.iter().enumerate() {
        let color = palette[si % palette.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{label}</text>\n",
            w - mr - 150.0,
            mt + 16.0 * si as f64
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
