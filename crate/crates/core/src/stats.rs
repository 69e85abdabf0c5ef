//! Latency statistics, hit/miss accounting and CSV output.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::gate::{LatencySample, Outcome};

pub use crate::clock::ns_to_ms;

pub const CSV_HEADER: &str = "frame_index,latency_ms,outcome";

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("no samples")]
    Empty,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad csv record {line}: {reason}")]
    BadRecord { line: u64, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub samples: Vec<LatencySample>,
    pub mean_ms: f64,
    pub max_ms: f64,
    pub min_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
    pub hit_frames: u64,
    pub miss_frames: u64,
    /// Rounded to two decimal places.
    pub miss_rate_percent: f64,
}

/// Nearest-rank percentile of an ascending slice: the value at rank
/// `ceil(p/100 * n)`, with rank at least 1.
pub fn nearest_rank(sorted: &[f64], percentile: u32) -> f64 {
    let n = sorted.len();
    let rank = (percentile as usize * n).div_ceil(100).clamp(1, n);
    sorted[rank - 1]
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn compute_stats(samples: Vec<LatencySample>) -> Result<BenchReport, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut sorted: Vec<f64> = samples.iter().map(|s| s.latency_ms).collect();
    let sum: f64 = sorted.iter().sum();
    let mean_ms = sum / sorted.len() as f64;
    sorted.sort_by(f64::total_cmp);
    let miss_frames = samples
        .iter()
        .filter(|s| s.outcome == Outcome::Miss)
        .count() as u64;
    let hit_frames = samples.len() as u64 - miss_frames;
    Ok(BenchReport {
        mean_ms,
        min_ms: sorted[0],
        max_ms: sorted[sorted.len() - 1],
        p50_ms: nearest_rank(&sorted, 50),
        p95_ms: nearest_rank(&sorted, 95),
        p99_ms: nearest_rank(&sorted, 99),
        hit_frames,
        miss_frames,
        miss_rate_percent: round2(miss_frames as f64 * 100.0 / samples.len() as f64),
        samples,
    })
}

impl BenchReport {
    pub fn total_frames(&self) -> u64 {
        self.hit_frames + self.miss_frames
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "frames     {:>10}", self.total_frames())?;
        writeln!(f, "hit        {:>10}", self.hit_frames)?;
        writeln!(f, "miss       {:>10}", self.miss_frames)?;
        writeln!(f, "miss rate  {:>9.2}%", self.miss_rate_percent)?;
        writeln!(f, "mean       {:>10.3} ms", self.mean_ms)?;
        writeln!(f, "min        {:>10.3} ms", self.min_ms)?;
        writeln!(f, "p50        {:>10.3} ms", self.p50_ms)?;
        writeln!(f, "p95        {:>10.3} ms", self.p95_ms)?;
        writeln!(f, "p99        {:>10.3} ms", self.p99_ms)?;
        write!(f, "max        {:>10.3} ms", self.max_ms)
    }
}

/// Write one row per sample, in collection order.
pub fn emit_csv(report: &BenchReport, path: &Path) -> Result<(), StatsError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for s in &report.samples {
        writeln!(out, "{},{},{}", s.frame_index, s.latency_ms, s.outcome)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<LatencySample>, StatsError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER.split(',').collect::<Vec<_>>() {
        return Err(StatsError::BadRecord {
            line: 1,
            reason: format!("unexpected header {headers:?}"),
        });
    }
    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |reason: String| StatsError::BadRecord { line, reason };
        let frame_index = record[0]
            .parse()
            .map_err(|e| bad(format!("frame_index: {e}")))?;
        let latency_ms: f64 = record[1]
            .parse()
            .map_err(|e| bad(format!("latency_ms: {e}")))?;
        let outcome = match &record[2] {
            "HIT" => Outcome::Hit,
            "MISS" => Outcome::Miss,
            other => return Err(bad(format!("outcome {other:?}"))),
        };
        samples.push(LatencySample {
            frame_index,
            latency_ms,
            outcome,
        });
    }
    Ok(samples)
}

/// `(1 - mean_a / mean_b) * 100`: how much lower A's mean latency is than B's.
pub fn reduction_percent(mean_a: f64, mean_b: f64) -> f64 {
    (1.0 - mean_a / mean_b) * 100.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub a: BenchReport,
    pub b: BenchReport,
    pub reduction_percent: f64,
}

impl Comparison {
    pub fn new(a: BenchReport, b: BenchReport) -> Self {
        let reduction_percent = reduction_percent(a.mean_ms, b.mean_ms);
        Self {
            a,
            b,
            reduction_percent,
        }
    }

    pub fn from_csv(a: &Path, b: &Path) -> Result<Self, StatsError> {
        Ok(Self::new(
            compute_stats(read_csv(a)?)?,
            compute_stats(read_csv(b)?)?,
        ))
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<4} {:>10} {:>10} {:>10} {:>8} {:>9}",
            "", "mean ms", "max ms", "hit", "miss", "miss %"
        )?;
        for (name, r) in [("A", &self.a), ("B", &self.b)] {
            writeln!(
                f,
                "{:<4} {:>10.3} {:>10.3} {:>10} {:>8} {:>8.2}%",
                name, r.mean_ms, r.max_ms, r.hit_frames, r.miss_frames, r.miss_rate_percent
            )?;
        }
        write!(
            f,
            "mean latency reduction (A vs B): {:.2}%",
            self.reduction_percent
        )
    }
}
