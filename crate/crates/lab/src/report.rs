//! Comparison tables and plot data from cost CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::cost::{fmt_rate, total_time_ms, CostPhase, CsvRow};
use crate::error::{LabError, LabResult};
use crate::harness::{Pipeline, Protocol};

/// Printed under every table.
pub const SCALE_NOTE: &str = "note: timings are desk-scale measurements on one host. Multi-fold wall-clock \
speedups measured on cloud clusters with real network links are not reproduced here; the operation \
counters, their log-log slopes in N and the protocol ordering are the comparable quantities.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellKey {
    pub users: usize,
    /// `p` in parts per million, for ordering.
    pub rate_ppm: u64,
    pub pipeline: Pipeline,
}

impl CellKey {
    pub fn rate(&self) -> f64 {
        self.rate_ppm as f64 / 1e6
    }
}

/// Means over the repeats of one (cell, protocol).
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub protocol: Protocol,
    pub target: usize,
    pub repeats: usize,
    pub total_ms: f64,
    pub recovery_ops: f64,
    pub bytes: f64,
}

/// One round's rows, split out of a CSV by consecutive key runs.
fn instances(rows: &[CsvRow]) -> LabResult<Vec<&[CsvRow]>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let r = &rows[i];
        let len = (r.users + 1) * CostPhase::ALL.len();
        let block = rows.get(i..i + len).ok_or_else(|| LabError::Schema(format!("truncated round at row {}", i + 2)))?;
        let same = |x: &CsvRow| {
            x.protocol == r.protocol && x.users == r.users && x.rate == r.rate && x.pipeline == r.pipeline && x.target == r.target
        };
        if !block.iter().all(same) {
            return Err(LabError::Schema(format!("round starting at row {} mixes cells", i + 2)));
        }
        out.push(block);
        i += len;
    }
    Ok(out)
}

type RoundMetrics = (usize, f64, f64, f64);

pub fn summarize(rows: &[CsvRow]) -> LabResult<BTreeMap<CellKey, Vec<Summary>>> {
    // (U, total_ms, recovery ops, bytes) per round
    let mut acc: BTreeMap<(CellKey, Protocol), Vec<RoundMetrics>> = BTreeMap::new();
    for block in instances(rows)? {
        let r = &block[0];
        let key = CellKey { users: r.users, rate_ppm: (r.rate * 1e6).round() as u64, pipeline: r.pipeline };
        let walls: Vec<(CostPhase, f64)> = block.iter().map(|x| (x.phase, x.wall_ms)).collect();
        let total = total_time_ms(r.pipeline, &walls);
        let ops = block.iter().filter(|x| x.party == 0 && x.phase == CostPhase::Recovery).map(|x| x.field_ops).sum::<u64>();
        let bytes = block.iter().map(|x| x.bytes_out).sum::<u64>();
        acc.entry((key, r.protocol)).or_default().push((r.target, total, ops as f64, bytes as f64));
    }
    let mut out: BTreeMap<CellKey, Vec<Summary>> = BTreeMap::new();
    for ((key, protocol), v) in acc {
        let n = v.len() as f64;
        out.entry(key).or_default().push(Summary {
            protocol,
            target: v[0].0,
            repeats: v.len(),
            total_ms: v.iter().map(|x| x.1).sum::<f64>() / n,
            recovery_ops: v.iter().map(|x| x.2).sum::<f64>() / n,
            bytes: v.iter().map(|x| x.3).sum::<f64>() / n,
        });
    }
    Ok(out)
}

fn ratio(num: f64, den: f64) -> String {
    if den > 0.0 {
        format!("{:.2}×", num / den)
    } else {
        "-".into()
    }
}

/// The comparison table. Speedups divide each protocol's metric by the
/// LightSecAgg metric of the same cell, or by its own when the cell has no
/// LightSecAgg run.
pub fn render_table(summary: &BTreeMap<CellKey, Vec<Summary>>, with_timing: bool) -> String {
    let mut head = vec!["N", "p", "pipeline", "protocol", "U", "repeats"];
    if with_timing {
        head.push("total_ms");
    }
    head.extend(["recovery_ops", "bytes"]);
    if with_timing {
        head.push("time_speedup");
    }
    head.push("ops_speedup");

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (key, list) in summary {
        let base = list.iter().find(|s| s.protocol == Protocol::LightSecAgg);
        for s in list {
            let b = base.unwrap_or(s);
            let mut row = vec![
                key.users.to_string(),
                fmt_rate(key.rate()),
                key.pipeline.name().to_string(),
                s.protocol.name().to_string(),
                s.target.to_string(),
                s.repeats.to_string(),
            ];
            if with_timing {
                row.push(format!("{:.1}", s.total_ms));
            }
            row.push(format!("{:.0}", s.recovery_ops));
            row.push(format!("{:.0}", s.bytes));
            if with_timing {
                row.push(ratio(s.total_ms, b.total_ms));
            }
            row.push(ratio(s.recovery_ops, b.recovery_ops));
            rows.push(row);
        }
    }
    let widths: Vec<usize> = (0..head.len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).chain([head[c].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}", w = *w)).collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(head.clone(), &mut out);
    line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect(), &mut out);
    for r in &rows {
        line(r.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

type SeriesKey = (Protocol, u64, Pipeline);

fn series<F: Fn(&Summary) -> f64>(summary: &BTreeMap<CellKey, Vec<Summary>>, metric: F) -> BTreeMap<SeriesKey, Vec<(f64, f64)>> {
    let mut out: BTreeMap<SeriesKey, Vec<(f64, f64)>> = BTreeMap::new();
    for (key, list) in summary {
        for s in list {
            out.entry((s.protocol, key.rate_ppm, key.pipeline)).or_default().push((key.users as f64, metric(s)));
        }
    }
    out
}

/// Log-log slope of server recovery ops in `N`, per series with at least two `N`.
pub fn render_slopes(summary: &BTreeMap<CellKey, Vec<Summary>>) -> String {
    let mut out = String::new();
    for ((protocol, ppm, pipeline), pts) in series(summary, |s| s.recovery_ops) {
        if let Some(k) = loglog_slope(&pts) {
            let _ = writeln!(
                out,
                "slope recovery_ops ~ N^k: protocol={} p={} pipeline={} k={k:.3}",
                protocol.name(),
                fmt_rate(ppm as f64 / 1e6),
                pipeline.name()
            );
        }
    }
    out
}

/// Writes one `(series, N, value)` file per metric and returns the paths.
pub fn write_plot_data(summary: &BTreeMap<CellKey, Vec<Summary>>, dir: &Path) -> LabResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    type Metric = (&'static str, fn(&Summary) -> f64);
    let metrics: [Metric; 3] =
        [("total_ms", |s| s.total_ms), ("recovery_ops", |s| s.recovery_ops), ("bytes", |s| s.bytes)];
    let mut paths = Vec::new();
    for (name, f) in metrics {
        let mut text = String::from("# series N value\n");
        for ((protocol, ppm, pipeline), pts) in series(summary, f) {
            let label = format!("{}/p={}/{}", protocol.name(), fmt_rate(ppm as f64 / 1e6), pipeline.name());
            for (x, y) in pts {
                let _ = writeln!(text, "{label} {x} {y}");
            }
        }
        let path = dir.join(format!("plot_{name}.dat"));
        std::fs::write(&path, text)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Full report text: table, slopes and the scale note.
pub fn render_report(summary: &BTreeMap<CellKey, Vec<Summary>>, with_timing: bool) -> String {
    let mut s = render_table(summary, with_timing);
    let slopes = render_slopes(summary);
    if !slopes.is_empty() {
        s.push('\n');
        s.push_str(&slopes);
    }
    s.push('\n');
    s.push_str(SCALE_NOTE);
    s.push('\n');
    s
}
