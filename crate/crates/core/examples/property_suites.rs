//! Run the randomized property suites programmatically, as `tailsampler verify`
//! does, and print the pass/fail table.
//!
//! ```bash
//! cargo run --release --example property_suites
//! ```

use tailsampler::verify::{run_suite, write_table, Suite, VerifyOptions};

fn main() {
    let opts = VerifyOptions {
        trials: 100,
        mc_draws: 20_000,
        ..VerifyOptions::default()
    };
    let outcomes = run_suite(Suite::All, &opts);
    write_table(&outcomes, std::io::stdout()).unwrap();
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    println!("\n{} checks, {failed} failing", outcomes.len());
}
