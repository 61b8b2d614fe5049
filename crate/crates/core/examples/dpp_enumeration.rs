//! Exhaustive view of a small DPP: every subset probability, the partition
//! function, and item marginals read off the marginal kernel.
//!
//! ```bash
//! cargo run --example dpp_enumeration
//! ```

use tailsampler::build_stochastic_matrix;
use tailsampler::dpp::{enumerate_all, expected_size, marginal_kernel, mask_to_indices};

fn main() -> tailsampler::Result<()> {
    let probs = [0.9, 0.7, 0.4, 0.1];
    let s = build_stochastic_matrix(&probs)?;
    let table = enumerate_all(&s)?;

    println!("det(S + I) = {:.10}", table.partition());
    println!("sum of det(S_Y) over all Y = {:.10}", table.det_sum());
    println!("relative gap = {:.2e}", table.normalization_error());

    let mut rows: Vec<(u32, f64)> = table.probabilities().collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("\nmost likely subsets:");
    for (mask, p) in rows.iter().take(6) {
        println!("  {:?}  {p:.5}", mask_to_indices(*mask));
    }

    let kernel = marginal_kernel(&s)?.inclusion_probabilities();
    println!("\nitem  p(correct)  P(i in Y) enumerated  diag(K)");
    for (i, (m, k)) in table.marginals().iter().zip(&kernel).enumerate() {
        println!("{i:>4}  {:>10.2}  {m:>20.6}  {k:.6}", probs[i]);
    }
    println!("\nexpected size {:.4}", expected_size(&s)?);
    println!("size distribution {:.4?}", table.size_distribution());
    Ok(())
}
