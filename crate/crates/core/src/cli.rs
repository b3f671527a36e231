//! `probe-bench` command line: `synth`, `grid`, `validate`, `report`.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data or validation
//! error, 3 runtime failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::embs::{EmbeddingDataset, Split};
use crate::grid::{self, GridReport, GridSpec, Method};
use crate::report::{self, TableFormat};
use crate::synth::{self, SynthSpec, GROUP_ORDER};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Runtime(m) => m,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "probe-bench", version, about = "Linear probes on frozen embeddings, scored by worst-group accuracy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic grouped-Gaussian EMBS file from a JSON spec.
    Synth {
        /// Spec JSON (keys: dim, core_snr, spur_snr, train_counts, val_counts, test_counts, seed).
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the lr x wd x seed grid and write a canonical JSON report.
    Grid {
        embs: PathBuf,
        /// Grid JSON; omitted keys take the default grid.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// erm or subg; overrides the grid file.
        #[arg(long)]
        method: Option<Method>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = all cores). Output does not depend on it.
        #[arg(long, env = "PROBE_BENCH_WORKERS", default_value_t = 0)]
        workers: usize,
    },
    /// Check an EMBS file and print its split/group histogram.
    Validate { embs: PathBuf },
    /// Render grid reports as a table (json, csv, markdown) or scatter CSV.
    Report {
        /// Report JSON files; `label=path` sets the scatter label.
        #[arg(required = true)]
        reports: Vec<String>,
        #[arg(long, default_value = "markdown")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    1
                }
            };
        }
    };
    let result = match cli.command {
        Command::Synth { spec, out } => cmd_synth(&spec, &out, stdout),
        Command::Grid { embs, grid, method, out, workers } => cmd_grid(&embs, grid.as_deref(), method, &out, workers, stdout),
        Command::Validate { embs } => cmd_validate(&embs, stdout),
        Command::Report { reports, format, out } => cmd_report(&reports, &format, &out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.code()
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

fn load_embs(path: &Path) -> Result<EmbeddingDataset, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("reading {}: {e}", path.display())))?;
    EmbeddingDataset::from_bytes(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn print_histogram(ds: &EmbeddingDataset, out: &mut dyn Write) {
    let hist = ds.histogram();
    let _ = writeln!(out, "n={} dim={} classes={} groups={}", ds.len(), ds.dim(), ds.class_count(), ds.group_count());
    for split in Split::ALL {
        let counts = &hist[split as usize];
        let total: u64 = counts.iter().sum();
        let per: Vec<String> = counts.iter().enumerate().map(|(g, c)| format!("g{g}={c}")).collect();
        let _ = writeln!(out, "{split}: n={total} {}", per.join(" "));
    }
}

pub fn cmd_synth(spec_path: &Path, out: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = fs::read_to_string(spec_path).map_err(|e| CliError::Usage(format!("reading {}: {e}", spec_path.display())))?;
    let spec: SynthSpec = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad spec: {e}")))?;
    let ds = synth::generate(&spec).map_err(|e| CliError::Usage(format!("bad spec: {e}")))?;
    write_file(out, &ds.to_bytes())?;
    let sidecar = serde_json::json!({
        "generator": "synth",
        "spec": spec,
        "oracle_core_accuracy": synth::core_oracle_accuracy(&spec),
    });
    write_file(&out.with_extension("json"), grid::canonical_json(&sidecar).as_bytes())?;

    let _ = writeln!(stdout, "wrote {} ({} examples)", out.display(), ds.len());
    let hist = ds.histogram();
    for split in Split::ALL {
        let counts: Vec<String> = GROUP_ORDER
            .iter()
            .map(|(y, b)| hist[split as usize][(2 * y + b) as usize].to_string())
            .collect();
        let _ = writeln!(stdout, "{split}: n={} groups (y1b1/y1b0/y0b1/y0b0) {}", ds.split_view(split).len(), counts.join("/"));
    }
    Ok(())
}

pub fn cmd_grid(embs: &Path, grid_path: Option<&Path>, method: Option<Method>, out: &Path, workers: usize, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut spec = match grid_path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("reading {}: {e}", p.display())))?;
            serde_json::from_str::<GridSpec>(&text).map_err(|e| CliError::Usage(format!("bad grid: {e}")))?
        }
        None => GridSpec::default(),
    };
    if let Some(m) = method {
        spec.method = m;
    }
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let ds = load_embs(embs)?;
    let report = grid::run_grid(&ds, &spec, workers).map_err(|e| match e {
        grid::GridError::EmptySplit(_) | grid::GridError::Metrics(_) => CliError::Data(e.to_string()),
        _ => CliError::Runtime(e.to_string()),
    })?;
    write_file(out, report.to_canonical_json().as_bytes())?;
    let c = report.selected_cell();
    let _ = writeln!(
        stdout,
        "method={:?} runs={} selected cell {} (lr={}, wd={}): test WGA {:.6} ± {:.6}, test OA {:.6} ± {:.6}",
        report.method,
        spec.run_count(),
        c.id,
        c.lr,
        c.wd,
        c.test.mean_wga,
        c.test.std_wga,
        c.test.mean_oa,
        c.test.std_oa
    );
    Ok(())
}

pub fn cmd_validate(embs: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    let ds = load_embs(embs)?;
    print_histogram(&ds, stdout);
    for w in ds.warnings() {
        let _ = writeln!(stdout, "warning: {w}");
    }
    let _ = writeln!(stdout, "ok");
    Ok(())
}

pub fn cmd_report(reports: &[String], format: &str, out: &Path) -> Result<(), CliError> {
    let mut loaded = Vec::with_capacity(reports.len());
    for arg in reports {
        let (label, path) = match arg.split_once('=') {
            Some((l, p)) => (l.to_string(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(arg);
                let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| arg.clone());
                (stem, p)
            }
        };
        let text = fs::read_to_string(&path).map_err(|e| CliError::Data(format!("reading {}: {e}", path.display())))?;
        let report = GridReport::from_json(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        loaded.push((label, report));
    }
    let text = if format == "scatter" {
        report::emit_scatter(&loaded)
    } else {
        let fmt: TableFormat = format.parse().map_err(|e: report::ReportError| CliError::Usage(format!("{e}; or scatter")))?;
        if loaded.len() != 1 {
            return Err(CliError::Usage(format!("{format} table takes exactly one report, got {}", loaded.len())));
        }
        report::emit_table(&loaded[0].1, fmt)
    };
    write_file(out, text.as_bytes())
}
