use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use probe_bench::embs::EmbeddingDataset;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_probe-bench"));
    c.env_remove("PROBE_BENCH_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const SMALL_SPEC: &str = r#"{"dim": 4, "core_snr": 2.0, "spur_snr": 2.0,
  "train_counts": [60, 6, 4, 20], "val_counts": [10, 10, 5, 5], "test_counts": [10, 10, 5, 5], "seed": 3}"#;
const SMALL_GRID: &str = r#"{"lrs": [0.01, 0.001], "wds": [1e-4], "seeds": [0, 100], "epochs": 3}"#;

#[test]
fn synth_default_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.json", "{}");
    let out = dir.path().join("wb.embs");
    let o = run(&["synth", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let stdout = text(&o.stdout);
    assert!(stdout.contains("11788 examples"), "{stdout}");
    assert!(stdout.contains("train: n=4795 groups (y1b1/y1b0/y0b1/y0b0) 3498/184/56/1057"), "{stdout}");
    let ds = EmbeddingDataset::from_bytes(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(ds.len(), 11788);
    let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("wb.json")).unwrap()).unwrap();
    assert_eq!(sidecar["spec"]["dim"], 64);

    let out2 = dir.path().join("again.embs");
    assert!(run(&["synth", spec.to_str().unwrap(), "--out", out2.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&out2).unwrap());
}

#[test]
fn synth_rejects_bad_dim() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.json", r#"{"dim": 1}"#);
    let o = run(&["synth", spec.to_str().unwrap(), "--out", dir.path().join("x.embs").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("dim"));
}

#[test]
fn validate_good_truncated_and_bad_group() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.json", SMALL_SPEC);
    let embs = dir.path().join("d.embs");
    assert!(run(&["synth", spec.to_str().unwrap(), "--out", embs.to_str().unwrap()]).status.success());

    let o = run(&["validate", embs.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o.stdout).contains("train: n=90 g0=20 g1=4 g2=6 g3=60"), "{}", text(&o.stdout));

    let bytes = std::fs::read(&embs).unwrap();
    let cut = write(dir.path(), "cut.embs", "");
    std::fs::write(&cut, &bytes[..100]).unwrap();
    let o = run(&["validate", cut.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("got 100"), "{}", text(&o.stderr));

    // group block starts after header, embeddings and labels
    let n = 150;
    let group_block = 32 + n * 4 * 4 + n * 4;
    let mut bad = bytes.clone();
    bad[group_block + 4 * 7] = 9;
    let badp = dir.path().join("bad.embs");
    std::fs::write(&badp, &bad).unwrap();
    let o = run(&["validate", badp.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("example 7"), "{}", text(&o.stderr));
}

#[test]
fn grid_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.json", SMALL_SPEC);
    let grid = write(dir.path(), "grid.json", SMALL_GRID);
    let embs = dir.path().join("d.embs");
    assert!(run(&["synth", spec.to_str().unwrap(), "--out", embs.to_str().unwrap()]).status.success());

    let r1 = dir.path().join("r1.json");
    let o = run(&["grid", embs.to_str().unwrap(), "--grid", grid.to_str().unwrap(), "--out", r1.to_str().unwrap(), "--workers", "1"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("selected cell"));
    let r4 = dir.path().join("r4.json");
    let o = bin()
        .args(["grid", embs.to_str().unwrap(), "--grid", grid.to_str().unwrap(), "--out", r4.to_str().unwrap()])
        .env("PROBE_BENCH_WORKERS", "4")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read(&r1).unwrap(), std::fs::read(&r4).unwrap());

    let rs = dir.path().join("rs.json");
    let o = run(&["grid", embs.to_str().unwrap(), "--grid", grid.to_str().unwrap(), "--method", "subg", "--out", rs.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&rs).unwrap()).unwrap();
    assert_eq!(v["method"], "subg");

    let md = dir.path().join("t.md");
    assert!(run(&["report", r1.to_str().unwrap(), "--format", "markdown", "--out", md.to_str().unwrap()]).status.success());
    assert!(std::fs::read_to_string(&md).unwrap().starts_with("| cell | lr | wd |"));

    let sc = dir.path().join("s.csv");
    let lab = format!("synth-hi={}", r1.display());
    assert!(run(&["report", &lab, rs.to_str().unwrap(), "--format", "scatter", "--out", sc.to_str().unwrap()]).status.success());
    let s = std::fs::read_to_string(&sc).unwrap();
    assert!(s.contains("\nsynth-hi,") && s.contains("\nrs,") && s.contains("GroupDRO,91.8,89.2,Table 8"));

    let o = run(&["report", r1.to_str().unwrap(), "--format", "xml", "--out", sc.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_and_data_errors() {
    let o = run(&["grid", "/nonexistent/file.embs", "--out", "/tmp/never.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["validate", "--bogus", "x"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    for cmd in ["synth", "grid", "validate", "report"] {
        let o = run(&[cmd, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        assert!(text(&o.stdout).contains("Usage"));
    }
}

#[test]
fn write_failure_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.json", SMALL_SPEC);
    let o = run(&["synth", spec.to_str().unwrap(), "--out", "/nonexistent-dir/x.embs"]);
    assert_eq!(o.status.code(), Some(3));
}
