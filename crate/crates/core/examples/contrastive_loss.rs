//! The balanced contrastive loss on one batch: value, reduction to plain
//! negative sampling, and analytic gradients.
//!
//! ```bash
//! cargo run --example contrastive_loss
//! ```

use tailsampler::bns::{bns_gradient, bns_loss, ns_loss, BnsBatch, BnsConfig};
use tailsampler::verify::bns_gradient_error;

fn main() -> tailsampler::Result<()> {
    let batch = BnsBatch {
        anchor: vec![0.6, 0.8, 0.0],
        positive: vec![0.5, 0.85, 0.1],
        extra_positives: vec![vec![0.7, 0.6, 0.2], vec![0.4, 0.9, -0.1]],
        negatives: vec![vec![-0.8, 0.1, 0.5], vec![0.1, -0.9, 0.3], vec![0.0, 0.2, -0.95]],
    };
    let config = BnsConfig::new(0.3, 2, 3)?;
    println!("balanced loss (m=2): {:.6}", bns_loss(&batch, &config)?);

    let plain = BnsBatch {
        extra_positives: Vec::new(),
        ..batch.clone()
    };
    let config0 = BnsConfig::new(0.3, 0, 3)?;
    println!(
        "m=0: balanced {:.12}  negative sampling {:.12}",
        bns_loss(&plain, &config0)?,
        ns_loss(&plain, &config0)?
    );

    let grad = bns_gradient(&batch, &config)?;
    println!("d/d anchor   {:+.5?}", grad.anchor);
    println!("d/d positive {:+.5?}", grad.positive);
    println!(
        "finite-difference relative error {:.2e}",
        bns_gradient_error(&batch, &config, 1e-5)
    );
    Ok(())
}
