//! Read and write class manifests as CSV and JSON Lines.
//!
//! ```bash
//! cargo run --example manifest_io
//! ```

use tailsampler::data_model::{parse_manifest, write_manifest, write_manifest_jsonl};
use tailsampler::{ClassManifest, ItemRecord, ManifestFormat};

fn main() -> tailsampler::Result<()> {
    let manifest = ClassManifest::from_items(vec![
        ItemRecord::new("cat-1", 0, 0.92).with_features(vec![0.1, 1.5]),
        ItemRecord::new("cat-2", 0, 0.35).with_features(vec![0.4, 0.9]),
        ItemRecord::new("dog-1", 1, 0.71).with_features(vec![-1.2, 0.3]),
        ItemRecord {
            probability: None,
            ..ItemRecord::new("fox-1", 2, 0.0).with_features(vec![2.0, -0.5])
        },
    ])?;

    let dir = std::env::temp_dir().join("tailsampler-manifest-example");
    std::fs::create_dir_all(&dir).map_err(|e| tailsampler::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let csv = dir.join("manifest.csv");
    let jsonl = dir.join("manifest.jsonl");
    write_manifest(&manifest, &csv)?;
    write_manifest_jsonl(&manifest, &jsonl)?;

    println!("{}", std::fs::read_to_string(&csv).unwrap());
    println!("{}", std::fs::read_to_string(&jsonl).unwrap());

    let from_csv = parse_manifest(&csv, ManifestFormat::Csv)?;
    let from_jsonl = parse_manifest(&jsonl, ManifestFormat::from_path(&jsonl))?;
    assert_eq!(from_csv.items(), manifest.items());
    assert_eq!(from_jsonl.items(), manifest.items());
    println!("round trip ok; class counts {:?}", from_csv.class_counts());

    let (reindexed, map) = manifest.reindex_by_frequency();
    println!("frequency order relabelling {map:?}, {} items", reindexed.len());
    Ok(())
}
