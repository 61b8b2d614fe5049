//! Train free toy embeddings with the balanced loss and watch the mean
//! intra-class cosine distance shrink, with and without extra positives.
//!
//! ```bash
//! cargo run --release --example bns_toy
//! ```

use tailsampler::bns::{toy_dataset, train_toy_embeddings, BnsConfig, ToyTraining};

fn main() -> tailsampler::Result<()> {
    let (data, labels) = toy_dataset(2, 20, 2, 1.0, 3)?;
    let training = ToyTraining {
        seed: 3,
        ..ToyTraining::default()
    };

    for m in [0, 3, 6] {
        let trace = train_toy_embeddings(&data, &labels, &BnsConfig::new(0.3, m, 5)?, &training)?;
        let every = |step: usize| trace.intra_dist[step];
        println!(
            "m={m}: intra-class distance {:.4} -> {:.4} -> {:.4} -> {:.4}; loss {:.4} -> {:.4}",
            every(0),
            every(50),
            every(100),
            every(200),
            trace.loss[0],
            trace.loss[199]
        );
    }

    let trace = train_toy_embeddings(&data, &labels, &BnsConfig::default(), &training)?;
    let path = std::env::temp_dir().join("tailsampler-bns-trace.csv");
    let file = std::fs::File::create(&path).map_err(|e| tailsampler::Error::Io {
        path: path.clone(),
        source: e,
    })?;
    trace.write_csv(file).map_err(|e| tailsampler::Error::Io {
        path: path.clone(),
        source: e,
    })?;
    println!("trace written to {}", path.display());
    Ok(())
}
