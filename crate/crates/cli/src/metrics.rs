//! Per-seed `metrics.csv` and cross-seed `summary.csv`.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! yields the exact values that were written.

use std::fmt::Write as _;
use std::path::Path;

use vrnoma_core::agents::EvalMetrics;

use crate::HarnessError;

pub const METRICS_HEADER: &str = "step,reward,reward_std,successful_frames,energy_j,avg_rate_mbps,rate_defined";

pub const SUMMARY_HEADER: &str = "step,seeds,reward_mean,reward_std,successful_frames_mean,successful_frames_std,\
energy_j_mean,energy_j_std,avg_rate_mbps_mean,avg_rate_mbps_std,rate_defined_seeds";

/// One eval point of one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub step: usize,
    pub reward: f64,
    pub reward_std: f64,
    pub successful_frames: f64,
    pub energy_j: f64,
    /// 0 when `rate_defined` is false.
    pub avg_rate_mbps: f64,
    /// Whether any frame was offloaded, i.e. the average rate is meaningful.
    pub rate_defined: bool,
}

impl MetricsRow {
    pub fn new(step: usize, m: &EvalMetrics) -> Self {
        Self {
            step,
            reward: m.reward,
            reward_std: m.reward_std,
            successful_frames: m.successful_frames,
            energy_j: m.energy_j,
            avg_rate_mbps: m.avg_rate_mbps,
            rate_defined: m.rate_defined,
        }
    }
}

pub fn metrics_to_string(rows: &[MetricsRow]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{}",
            r.step,
            r.reward,
            r.reward_std,
            r.successful_frames,
            r.energy_j,
            r.avg_rate_mbps,
            u8::from(r.rate_defined)
        )
        .unwrap();
    }
    out
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<(), HarnessError> {
    std::fs::write(path, metrics_to_string(rows)).map_err(HarnessError::io(path))
}

pub fn parse_metrics(text: &str, path: &Path) -> Result<Vec<MetricsRow>, HarnessError> {
    let bad = |line: usize, reason: &str| HarnessError::Metrics {
        path: path.to_path_buf(),
        reason: format!("line {line}: {reason}"),
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, METRICS_HEADER)) => {}
        _ => return Err(bad(1, "missing header")),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(line, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 7 {
                return Err(bad(line, "expected 7 fields"));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(line, "malformed number"));
            Ok(MetricsRow {
                step: f[0].parse().map_err(|_| bad(line, "malformed step"))?,
                reward: num(1)?,
                reward_std: num(2)?,
                successful_frames: num(3)?,
                energy_j: num(4)?,
                avg_rate_mbps: num(5)?,
                rate_defined: match f[6] {
                    "1" => true,
                    "0" => false,
                    _ => return Err(bad(line, "rate_defined must be 0 or 1")),
                },
            })
        })
        .collect()
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
    parse_metrics(&text, path)
}

/// Mean and population standard deviation across seeds at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub step: usize,
    pub seeds: usize,
    pub reward: (f64, f64),
    pub successful_frames: (f64, f64),
    pub energy_j: (f64, f64),
    /// Over seeds whose rate is defined; `(0, 0)` if none is.
    pub avg_rate_mbps: (f64, f64),
    pub rate_defined_seeds: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (mean, (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt())
}

/// Aggregates per-seed curves that share the same eval steps.
pub fn summarize(runs: &[Vec<MetricsRow>]) -> Result<Vec<SummaryRow>, HarnessError> {
    let Some(first) = runs.first() else {
        return Ok(Vec::new());
    };
    let mismatch = |reason: String| HarnessError::Metrics { path: "summary.csv".into(), reason };
    for run in runs {
        if run.len() != first.len() || run.iter().zip(first).any(|(a, b)| a.step != b.step) {
            return Err(mismatch("seeds were evaluated at different steps".into()));
        }
    }
    Ok((0..first.len())
        .map(|i| {
            let col = |f: fn(&MetricsRow) -> f64| runs.iter().map(|r| f(&r[i])).collect::<Vec<_>>();
            let rates: Vec<f64> = runs.iter().filter(|r| r[i].rate_defined).map(|r| r[i].avg_rate_mbps).collect();
            SummaryRow {
                step: first[i].step,
                seeds: runs.len(),
                reward: mean_std(&col(|r| r.reward)),
                successful_frames: mean_std(&col(|r| r.successful_frames)),
                energy_j: mean_std(&col(|r| r.energy_j)),
                avg_rate_mbps: mean_std(&rates),
                rate_defined_seeds: rates.len(),
            }
        })
        .collect())
}

pub fn summary_to_string(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
            r.step,
            r.seeds,
            r.reward.0,
            r.reward.1,
            r.successful_frames.0,
            r.successful_frames.1,
            r.energy_j.0,
            r.energy_j.1,
            r.avg_rate_mbps.0,
            r.avg_rate_mbps.1,
            r.rate_defined_seeds
        )
        .unwrap();
    }
    out
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), HarnessError> {
    std::fs::write(path, summary_to_string(rows)).map_err(HarnessError::io(path))
}
