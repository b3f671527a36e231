//! Hyperparameter grid over (lr, wd) cells, repeated across seeds, for ERM
//! and for group-balanced subsampling (SUBG).
//!
//! Each (cell, seed) run is an independent task over the shared dataset.
//! Results are collected in a fixed order (lr-major, then wd, seeds in the
//! order given) so the report does not depend on the worker count.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::embs::{EmbeddingDataset, Split, SplitView};
use crate::metrics::{self, AggregateMetrics, CellScore, MetricsError, RunMetrics};
use crate::probe::{self, Normalize, ProbeError, TrainConfig};
use crate::rng::{substream, Purpose};

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    Spec(String),
    #[error("{0} split is empty")]
    EmptySplit(Split),
    #[error("training failed for lr={lr} wd={wd} seed={seed}: {source}")]
    Train {
        lr: f64,
        wd: f64,
        seed: u64,
        #[source]
        source: ProbeError,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Erm,
    Subg,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "erm" => Ok(Method::Erm),
            "subg" => Ok(Method::Subg),
            other => Err(format!("unknown method {other:?} (expected erm or subg)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub lrs: Vec<f64>,
    pub wds: Vec<f64>,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub method: Method,
    pub normalize: Normalize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lrs: vec![0.01, 0.001, 0.0001],
            wds: vec![1e-4, 1e-5, 1e-6],
            seeds: vec![0, 100, 200],
            epochs: 20,
            batch_size: 32,
            method: Method::Erm,
            normalize: Normalize::None,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        if self.lrs.is_empty() || self.wds.is_empty() || self.seeds.is_empty() {
            return Err(GridError::Spec("lrs, wds and seeds must be nonempty".into()));
        }
        if let Some(lr) = self.lrs.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(GridError::Spec(format!("lr must be > 0, got {lr}")));
        }
        if let Some(wd) = self.wds.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(GridError::Spec(format!("wd must be >= 0, got {wd}")));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(GridError::Spec("epochs and batch_size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn run_count(&self) -> usize {
        self.lrs.len() * self.wds.len() * self.seeds.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub train_size: usize,
    pub validation: RunMetrics,
    pub test: RunMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub id: usize,
    pub lr: f64,
    pub wd: f64,
    pub runs: Vec<SeedRun>,
    pub validation: AggregateMetrics,
    pub test: AggregateMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub method: Method,
    pub dataset_sha256: String,
    pub grid: GridSpec,
    pub cells: Vec<CellReport>,
    pub selected: usize,
}

impl GridReport {
    pub fn selected_cell(&self) -> &CellReport {
        &self.cells[self.selected]
    }

    /// Sorted keys, two-space indent, shortest round-trip floats, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub fn canonical_json<T: Serialize>(value: &T) -> String {
    // serde_json::Value uses a BTreeMap, which sorts object keys.
    let v = serde_json::to_value(value).expect("report types serialize infallibly");
    let mut s = serde_json::to_string_pretty(&v).expect("Value serializes infallibly");
    s.push('\n');
    s
}

pub fn fingerprint(dataset: &EmbeddingDataset) -> String {
    let digest = Sha256::digest(dataset.to_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Keeps `m` examples of every nonempty group, where `m` is the smallest
/// nonempty group size. Selection within a group is a seeded sample without
/// replacement; the returned indices are in file order.
pub fn subsample_balanced<'a>(view: &SplitView<'a>, seed: u64) -> Result<SplitView<'a>, GridError> {
    if view.is_empty() {
        return Err(GridError::EmptySplit(view.split()));
    }
    let groups = view.dataset().groups();
    let mut by_group: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for &i in view.indices() {
        by_group.entry(groups[i]).or_default().push(i);
    }
    let m = by_group.values().map(Vec::len).min().expect("view is nonempty");
    let mut keep = Vec::with_capacity(m * by_group.len());
    for (g, mut members) in by_group {
        let mut rng = substream(seed, Purpose::Subsample, g as u64);
        let (chosen, _) = members.partial_shuffle(&mut rng, m);
        keep.extend_from_slice(chosen);
    }
    keep.sort_unstable();
    Ok(view.with_indices(keep))
}

struct RunOutcome {
    train_size: usize,
    validation: RunMetrics,
    test: RunMetrics,
}

fn evaluate(model: &probe::LinearModel, view: &SplitView<'_>, normalize: Normalize, group_count: u32) -> Result<RunMetrics, MetricsError> {
    let preds = probe::predict_with(model, view, normalize);
    metrics::group_metrics(&preds, &view.labels(), &view.groups(), group_count)
}

fn run_one(ds: &EmbeddingDataset, grid: &GridSpec, lr: f64, wd: f64, seed: u64) -> Result<RunOutcome, GridError> {
    let train_all = ds.split_view(Split::Train);
    let train_view = match grid.method {
        Method::Erm => train_all,
        Method::Subg => subsample_balanced(&train_all, seed)?,
    };
    let config = TrainConfig {
        lr,
        wd,
        epochs: grid.epochs,
        batch_size: grid.batch_size,
        seed,
        normalize: grid.normalize,
    };
    let model = probe::train(&train_view, &config).map_err(|source| GridError::Train { lr, wd, seed, source })?;
    let gc = ds.group_count();
    Ok(RunOutcome {
        train_size: train_view.len(),
        validation: evaluate(&model, &ds.split_view(Split::Validation), grid.normalize, gc)?,
        test: evaluate(&model, &ds.split_view(Split::Test), grid.normalize, gc)?,
    })
}

/// Runs every (lr, wd, seed) combination on up to `workers` threads
/// (0 = all cores) and selects the cell with the best mean validation WGA.
pub fn run_grid(dataset: &EmbeddingDataset, grid: &GridSpec, workers: usize) -> Result<GridReport, GridError> {
    grid.validate()?;
    for split in [Split::Train, Split::Validation, Split::Test] {
        if dataset.split_view(split).is_empty() {
            return Err(GridError::EmptySplit(split));
        }
    }
    let mut tasks = Vec::with_capacity(grid.run_count());
    for &lr in &grid.lrs {
        for &wd in &grid.wds {
            for &seed in &grid.seeds {
                tasks.push((lr, wd, seed));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| GridError::Pool(e.to_string()))?;
    let outcomes: Vec<Result<RunOutcome, GridError>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(lr, wd, seed)| run_one(dataset, grid, lr, wd, seed))
            .collect()
    });

    let mut outcomes = outcomes.into_iter();
    let mut cells = Vec::with_capacity(grid.lrs.len() * grid.wds.len());
    for &lr in &grid.lrs {
        for &wd in &grid.wds {
            let mut runs = Vec::with_capacity(grid.seeds.len());
            for &seed in &grid.seeds {
                let o = outcomes.next().expect("one outcome per task")?;
                runs.push(SeedRun {
                    seed,
                    train_size: o.train_size,
                    validation: o.validation,
                    test: o.test,
                });
            }
            let val: Vec<RunMetrics> = runs.iter().map(|r| r.validation.clone()).collect();
            let test: Vec<RunMetrics> = runs.iter().map(|r| r.test.clone()).collect();
            cells.push(CellReport {
                id: cells.len(),
                lr,
                wd,
                validation: metrics::aggregate(&val)?,
                test: metrics::aggregate(&test)?,
                runs,
            });
        }
    }
    let scores: Vec<CellScore> = cells
        .iter()
        .map(|c| CellScore {
            lr: c.lr,
            wd: c.wd,
            mean_wga: c.validation.mean_wga,
            mean_oa: c.validation.mean_oa,
        })
        .collect();
    let selected = metrics::select_best(&scores)?;
    Ok(GridReport {
        method: grid.method,
        dataset_sha256: fingerprint(dataset),
        grid: grid.clone(),
        cells,
        selected,
    })
}
