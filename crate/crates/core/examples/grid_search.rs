//! Run a small custom grid, print each cell, and dump the canonical report.
//!
//!     cargo run --release --example grid_search

use probe_bench::{generate, run_grid, GridReport, GridSpec, Method, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = generate(&SynthSpec { dim: 16, core_snr: 1.5, ..Default::default() })?;
    let grid = GridSpec {
        lrs: vec![0.1, 0.01],
        wds: vec![0.0, 1e-3],
        seeds: vec![0, 1],
        epochs: 5,
        method: Method::Erm,
        ..Default::default()
    };
    let report = run_grid(&ds, &grid, 0)?;
    for c in &report.cells {
        let mark = if c.id == report.selected { "*" } else { " " };
        println!(
            "{mark} lr={:<5} wd={:<6} val WGA {:.4} ± {:.4}  test WGA {:.4}",
            c.lr, c.wd, c.validation.mean_wga, c.validation.std_wga, c.test.mean_wga
        );
    }
    let json = report.to_canonical_json();
    assert_eq!(GridReport::from_json(&json)?.to_canonical_json(), json);
    println!("dataset sha256 {}", report.dataset_sha256);
    println!("report is {} bytes of canonical JSON", json.len());
    Ok(())
}
