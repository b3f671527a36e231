//! Train a single probe, score it per group, and save the weights.
//!
//!     cargo run --release --example train_probe

use probe_bench::probe::predict_with;
use probe_bench::{generate, group_metrics, train, LinearModel, Normalize, Split, SynthSpec, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = generate(&SynthSpec { dim: 64, core_snr: 2.0, ..Default::default() })?;
    for normalize in [Normalize::None, Normalize::L2PerVector] {
        let config = TrainConfig { lr: 0.01, wd: 1e-4, normalize, ..Default::default() };
        let model = train(&ds.split_view(Split::Train), &config)?;
        let test = ds.split_view(Split::Test);
        let preds = predict_with(&model, &test, normalize);
        let m = group_metrics(&preds, &test.labels(), &test.groups(), ds.group_count())?;
        println!("{normalize:?}: test WGA {:.4}, OA {:.4}", m.wga, m.oa);
        for (g, acc) in m.per_group_acc.iter().enumerate() {
            println!("  group {g}: {:.4} over {}", acc.unwrap_or(f64::NAN), m.per_group_counts[g]);
        }

        let mut bytes = Vec::new();
        model.write_to(&mut bytes)?;
        let back = LinearModel::read_from(bytes.as_slice())?;
        assert_eq!(back, model);
        println!("  saved model: {} bytes", bytes.len());
    }
    Ok(())
}
