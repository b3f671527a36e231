use probe_bench::embs::Split;
use probe_bench::grid::{run_grid, subsample_balanced, GridSpec, Method};
use probe_bench::metrics::{select_best, CellScore};
use probe_bench::synth::{generate, SynthSpec};

fn small_spec() -> SynthSpec {
    SynthSpec {
        dim: 8,
        core_snr: 1.5,
        spur_snr: 2.0,
        train_counts: [300, 20, 10, 100],
        val_counts: [40, 40, 20, 20],
        test_counts: [50, 50, 30, 30],
        seed: 5,
    }
}

fn quick_grid(method: Method) -> GridSpec {
    GridSpec { epochs: 3, method, ..Default::default() }
}

#[test]
fn default_grid_runs_every_combination_once() {
    let ds = generate(&small_spec()).unwrap();
    let grid = quick_grid(Method::Erm);
    let report = run_grid(&ds, &grid, 2).unwrap();
    assert_eq!(report.cells.len(), 9);
    assert_eq!(report.cells.iter().map(|c| c.runs.len()).sum::<usize>(), 27);
    let mut seen = Vec::new();
    for (i, c) in report.cells.iter().enumerate() {
        // lr-major, then wd
        assert_eq!((c.lr, c.wd), (grid.lrs[i / 3], grid.wds[i % 3]));
        assert_eq!(c.runs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![0, 100, 200]);
        seen.extend(c.runs.iter().map(|r| (c.lr.to_bits(), c.wd.to_bits(), r.seed)));
    }
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), 27);
    let scores: Vec<CellScore> = report
        .cells
        .iter()
        .map(|c| CellScore { lr: c.lr, wd: c.wd, mean_wga: c.validation.mean_wga, mean_oa: c.validation.mean_oa })
        .collect();
    assert_eq!(report.selected, select_best(&scores).unwrap());
}

#[test]
fn single_cell_grid() {
    let ds = generate(&small_spec()).unwrap();
    let grid = GridSpec { lrs: vec![0.01], wds: vec![0.0], seeds: vec![7], epochs: 2, ..Default::default() };
    let report = run_grid(&ds, &grid, 1).unwrap();
    assert_eq!((report.cells.len(), report.selected), (1, 0));
    assert_eq!(report.cells[0].validation.std_wga, 0.0);
}

#[test]
fn report_is_independent_of_worker_count() {
    let ds = generate(&small_spec()).unwrap();
    for method in [Method::Erm, Method::Subg] {
        let grid = quick_grid(method);
        let one = run_grid(&ds, &grid, 1).unwrap().to_canonical_json();
        let four = run_grid(&ds, &grid, 4).unwrap().to_canonical_json();
        assert_eq!(one, four);
    }
}

#[test]
fn subg_changes_only_the_training_view() {
    let ds = generate(&small_spec()).unwrap();
    let erm = run_grid(&ds, &quick_grid(Method::Erm), 0).unwrap();
    let subg = run_grid(&ds, &quick_grid(Method::Subg), 0).unwrap();
    assert_eq!(subg.method, Method::Subg);
    for (a, b) in erm.cells.iter().zip(&subg.cells) {
        for (ra, rb) in a.runs.iter().zip(&b.runs) {
            assert_eq!(ra.train_size, 430);
            assert_eq!(rb.train_size, 40);
            assert_eq!(ra.validation.per_group_counts, rb.validation.per_group_counts);
            assert_eq!(ra.test.per_group_counts, rb.test.per_group_counts);
        }
    }
}

#[test]
fn subsample_default_counts() {
    let ds = generate(&SynthSpec { dim: 2, ..Default::default() }).unwrap();
    let train = ds.split_view(Split::Train);
    for seed in [0, 100, 200] {
        let sub = subsample_balanced(&train, seed).unwrap();
        assert_eq!(sub.len(), 224);
        assert_eq!(sub.group_counts(), vec![56, 56, 56, 56]);
        assert!(sub.indices().iter().all(|i| train.indices().binary_search(i).is_ok()));
    }
    let a = subsample_balanced(&train, 0).unwrap();
    let b = subsample_balanced(&train, 100).unwrap();
    assert_ne!(a.indices(), b.indices());
}

#[test]
fn training_errors_name_the_cell() {
    use probe_bench::embs::EmbeddingDataset;
    let splits = vec![Split::Train, Split::Train, Split::Validation, Split::Test];
    let ds = EmbeddingDataset::new(1, 2, 2, vec![1e30, -1e30, 1.0, -1.0], vec![0, 1, 0, 1], vec![0, 1, 0, 1], splits).unwrap();
    let grid = GridSpec { lrs: vec![1e300], wds: vec![0.0], seeds: vec![17], epochs: 1, ..Default::default() };
    let err = run_grid(&ds, &grid, 1).unwrap_err().to_string();
    assert!(err.contains("seed=17") && err.contains("non-finite"), "{err}");
}
