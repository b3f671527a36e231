//! Build a tiny dataset by hand, write it as an EMBS file, read it back and
//! print what validation sees. Then corrupt one byte and show the error.
//!
//!     cargo run --example embs_roundtrip

use probe_bench::{read_embs, write_embs, EmbeddingDataset, Split};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = EmbeddingDataset::new(
        3,
        2,
        4,
        vec![0.1, 0.2, 0.3, -0.1, -0.2, -0.3, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        vec![1, 0, 1, 0],
        vec![3, 0, 2, 1],
        vec![Split::Train, Split::Train, Split::Validation, Split::Test],
    )?;

    let path = std::env::temp_dir().join("probe_bench_roundtrip.embs");
    write_embs(&ds, std::fs::File::create(&path)?)?;
    let back = read_embs(std::fs::File::open(&path)?)?;
    assert_eq!(back.to_bytes(), ds.to_bytes());
    println!("wrote {} bytes to {}", ds.encoded_len(), path.display());

    for (split, counts) in Split::ALL.iter().zip(back.histogram()) {
        println!("{split}: groups {counts:?}");
    }
    for w in back.warnings() {
        println!("warning: {w}");
    }

    let mut bytes = ds.to_bytes();
    bytes[0] = b'X';
    match EmbeddingDataset::from_bytes(&bytes) {
        Ok(_) => println!("corrupt file parsed?"),
        Err(e) => println!("corrupted magic: {e}"),
    }
    std::fs::remove_file(path)?;
    Ok(())
}
