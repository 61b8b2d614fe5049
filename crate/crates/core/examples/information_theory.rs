//! Exact discrete information measures and the noise-contrastive lower bound.
//!
//! ```bash
//! cargo run --example information_theory
//! ```

use nalgebra::DMatrix;
use tailsampler::infotheory::{
    entropy, information_content, joint_entropy, mutual_information, nce_bound_check, variation_of_information,
    DiscreteJoint,
};

fn main() -> tailsampler::Result<()> {
    println!("H(0.5, 0.5) = {:.6}", entropy(&[0.5, 0.5])?);
    for p in [0.9, 0.5, 0.1, 0.01] {
        println!("information content of p={p}: {:.4} nats", information_content(p)?);
    }

    let joint = DiscreteJoint::new(DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.1, 0.4]))?;
    let mi = mutual_information(&joint);
    println!(
        "\nMI = {mi:.6}, H(X,Y) = {:.6}, VI = {:.6}",
        joint_entropy(&joint),
        variation_of_information(&joint)
    );

    println!("\nnegatives  bound      MI");
    for n in [1, 2, 4, 8, 16, 64] {
        let r = nce_bound_check(&joint, n)?;
        println!("{n:>9}  {:.6}  {:.6}  holds={}", r.rhs, r.lhs, r.holds);
    }
    Ok(())
}
