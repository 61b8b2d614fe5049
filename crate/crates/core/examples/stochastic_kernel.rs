//! Build the symmetric stochastic kernel from classification probabilities and
//! inspect its spectrum.
//!
//! ```bash
//! cargo run --example stochastic_kernel
//! ```

use tailsampler::build_stochastic_matrix;
use tailsampler::stochastic_matrix::validate_lemmas;

fn main() -> tailsampler::Result<()> {
    let probs = [0.95, 0.9, 0.6, 0.3, 0.05];
    let s = build_stochastic_matrix(&probs)?;

    println!("kernel:\n{:.4}", s.entries());

    let spectrum = s.spectrum()?;
    println!("eigenvalues (descending): {:.6?}", spectrum.eigenvalues);
    println!("rank: {}", spectrum.rank());

    let report = validate_lemmas(&s);
    println!("{}", serde_json::to_string_pretty(&report).unwrap());

    // two items: the smaller eigenvalue is 1 - p1*p2
    let pair = build_stochastic_matrix(&[0.8, 0.5])?;
    println!("two-item eigenvalues: {:.6?}", pair.spectrum()?.eigenvalues);
    Ok(())
}
