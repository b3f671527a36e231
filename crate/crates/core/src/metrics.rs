//! Per-group accuracy, worst-group accuracy (WGA), overall accuracy (OA),
//! seed aggregation and grid-cell selection.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {preds} predictions, {labels} labels, {groups} groups")]
    Length { preds: usize, labels: usize, groups: usize },
    #[error("no examples")]
    Empty,
    #[error("group id {group} at position {index} out of range (group_count {group_count})")]
    GroupOutOfRange { index: usize, group: u32, group_count: u32 },
    #[error("runs disagree on group_count")]
    GroupCountMismatch,
    #[error("nothing to select from")]
    NoCells,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// `None` for groups with no examples; those are left out of the WGA.
    pub per_group_acc: Vec<Option<f64>>,
    pub per_group_counts: Vec<u64>,
    pub per_group_correct: Vec<u64>,
    pub wga: f64,
    pub oa: f64,
}

impl RunMetrics {
    pub fn empty_groups(&self) -> Vec<usize> {
        self.per_group_counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == 0)
            .map(|(g, _)| g)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub mean_wga: f64,
    pub std_wga: f64,
    pub mean_oa: f64,
    pub std_oa: f64,
    pub repeat_count: usize,
}

pub fn group_metrics(preds: &[u32], labels: &[u32], groups: &[u32], group_count: u32) -> Result<RunMetrics, MetricsError> {
    if preds.len() != labels.len() || labels.len() != groups.len() {
        return Err(MetricsError::Length {
            preds: preds.len(),
            labels: labels.len(),
            groups: groups.len(),
        });
    }
    if preds.is_empty() {
        return Err(MetricsError::Empty);
    }
    let g_n = group_count as usize;
    let mut counts = vec![0u64; g_n];
    let mut correct = vec![0u64; g_n];
    for (index, ((p, l), g)) in preds.iter().zip(labels).zip(groups).enumerate() {
        if *g >= group_count {
            return Err(MetricsError::GroupOutOfRange { index, group: *g, group_count });
        }
        counts[*g as usize] += 1;
        correct[*g as usize] += (p == l) as u64;
    }
    let per_group_acc: Vec<Option<f64>> = counts
        .iter()
        .zip(&correct)
        .map(|(&n, &c)| (n > 0).then(|| c as f64 / n as f64))
        .collect();
    let wga = per_group_acc.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let oa = correct.iter().sum::<u64>() as f64 / preds.len() as f64;
    Ok(RunMetrics {
        per_group_acc,
        per_group_counts: counts,
        per_group_correct: correct,
        wga,
        oa,
    })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Mean and sample standard deviation (divisor `n - 1`) across repeats.
pub fn aggregate(runs: &[RunMetrics]) -> Result<AggregateMetrics, MetricsError> {
    let first = runs.first().ok_or(MetricsError::NoCells)?;
    if runs.iter().any(|r| r.per_group_counts.len() != first.per_group_counts.len()) {
        return Err(MetricsError::GroupCountMismatch);
    }
    let wga: Vec<f64> = runs.iter().map(|r| r.wga).collect();
    let oa: Vec<f64> = runs.iter().map(|r| r.oa).collect();
    let (mean_wga, std_wga) = mean_std(&wga);
    let (mean_oa, std_oa) = mean_std(&oa);
    Ok(AggregateMetrics {
        mean_wga,
        std_wga,
        mean_oa,
        std_oa,
        repeat_count: runs.len(),
    })
}

/// What `select_best` needs to rank one grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellScore {
    pub lr: f64,
    pub wd: f64,
    pub mean_wga: f64,
    pub mean_oa: f64,
}

/// Total order: higher WGA, then higher OA, then lower lr, then lower wd.
fn rank(a: &CellScore, b: &CellScore) -> Ordering {
    a.mean_wga
        .total_cmp(&b.mean_wga)
        .then(a.mean_oa.total_cmp(&b.mean_oa))
        .then(b.lr.total_cmp(&a.lr))
        .then(b.wd.total_cmp(&a.wd))
}

/// Index of the best cell. Exact ties on all four keys go to the first.
pub fn select_best(cells: &[CellScore]) -> Result<usize, MetricsError> {
    let mut best: Option<usize> = None;
    for (i, c) in cells.iter().enumerate() {
        if best.is_none_or(|b| rank(c, &cells[b]) == Ordering::Greater) {
            best = Some(i);
        }
    }
    best.ok_or(MetricsError::NoCells)
}
