//! Rebalance a long-tailed manifest: each class keeps min(k, N_c) items chosen
//! by the k-DPP over that class's probabilities.
//!
//! ```bash
//! cargo run --example balanced_resample
//! ```

use rand::Rng;
use tailsampler::data_model::write_subset_indices;
use tailsampler::ipdpp::{balanced_resample, merged_indices};
use tailsampler::rng::named_rng;
use tailsampler::{ClassManifest, ItemRecord, SamplerConfig, SamplerVariant};

fn main() -> tailsampler::Result<()> {
    let mut rng = named_rng(42, "balanced-resample-example");
    let mut items = Vec::new();
    for (class, size) in [(0, 120), (1, 60), (2, 25), (3, 6)] {
        for i in 0..size {
            items.push(ItemRecord::new(format!("c{class}-{i:03}"), class, rng.random::<f64>()));
        }
    }
    let manifest = ClassManifest::from_items(items)?;
    let k = 20;

    for variant in [SamplerVariant::PaperArgmax, SamplerVariant::Probabilistic] {
        let config = SamplerConfig::new(k, 7).with_variant(variant);
        let samples = balanced_resample(&manifest, &config)?;
        println!("{variant:?}");
        for (class, sample) in &samples {
            let members = manifest.class_indices(*class);
            let p = |i: &usize| manifest.items()[*i].probability.unwrap();
            let class_mean = members.iter().map(p).sum::<f64>() / members.len() as f64;
            let kept_mean = sample.indices.iter().map(p).sum::<f64>() / sample.len() as f64;
            println!(
                "  class {class}: {:>3} -> {:>2} items, mean p {class_mean:.3} -> {kept_mean:.3}",
                members.len(),
                sample.len()
            );
        }
    }

    let config = SamplerConfig::new(k, 7);
    let subset = merged_indices(&balanced_resample(&manifest, &config)?);
    let path = std::env::temp_dir().join("tailsampler-balanced-subset.csv");
    write_subset_indices(&manifest, &subset, &path)?;
    println!("\nwrote {} rows to {}", subset.len(), path.display());
    Ok(())
}
