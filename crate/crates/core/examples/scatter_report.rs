//! Turn grid reports into a results table and the OA-vs-WGA scatter series,
//! which carries the published reference points alongside computed ones.
//!
//!     cargo run --release --example scatter_report

use probe_bench::report::{emit_scatter, emit_table, TableFormat, REFERENCE};
use probe_bench::{generate, run_grid, GridSpec, Method, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec { lrs: vec![0.01], wds: vec![1e-4], epochs: 10, ..Default::default() };
    let mut reports = Vec::new();
    for (label, core_snr, method) in [("weak-erm", 1.0, Method::Erm), ("weak-subg", 1.0, Method::Subg), ("strong-erm", 4.0, Method::Erm)] {
        let ds = generate(&SynthSpec { dim: 32, core_snr, ..Default::default() })?;
        reports.push((label.to_string(), run_grid(&ds, &GridSpec { method, ..grid.clone() }, 0)?));
    }
    print!("{}", emit_table(&reports[0].1, TableFormat::Markdown));
    println!();
    let scatter = emit_scatter(&reports);
    for line in scatter.lines().take(reports.len() + 1) {
        println!("{line}");
    }
    println!("... plus {} reference rows and the y=x diagonal", REFERENCE.len());
    Ok(())
}
