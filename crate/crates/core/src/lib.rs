//! Worst-group accuracy benchmark for linear probes on frozen embeddings.
//!
//! A softmax linear classifier is trained with ERM on fixed embedding
//! vectors and scored per group, where groups cross the class label with a
//! spuriously correlated attribute. The pieces:
//!
//! - [`embs`]: the EMBS binary dataset format and split views.
//! - [`synth`]: Waterbirds-analog Gaussian embeddings with an analytic oracle.
//! - [`probe`]: the linear probe, its loss/gradient and the SGD trainer.
//! - [`metrics`]: per-group accuracy, WGA, OA, seed aggregation, cell selection.
//! - [`grid`]: the lr x wd x seed grid for ERM and balanced subsampling.
//! - [`report`]: tables, scatter CSV and published reference numbers.
//! - [`cli`]: the `probe-bench` command line.
//!
//! See `examples/` for one runnable program per capability.

pub mod cli;
pub mod embs;
pub mod grid;
pub mod metrics;
pub mod probe;
pub mod report;
mod rng;
pub mod synth;

pub use embs::{read_embs, write_embs, EmbeddingDataset, EmbsError, Split, SplitView};
pub use grid::{run_grid, subsample_balanced, GridReport, GridSpec, Method};
pub use metrics::{aggregate, group_metrics, select_best, AggregateMetrics, RunMetrics};
pub use probe::{init_model, loss_and_grad, predict, train, LinearModel, Normalize, TrainConfig};
pub use synth::{core_oracle_accuracy, generate, SynthSpec};
