//! A small run of the two-stage synthetic long-tail experiment, comparing
//! IP-DPP rebalancing with random undersampling and full-data training.
//!
//! ```bash
//! cargo run --release --example two_stage_experiment
//! ```

use tailsampler::experiment::{run_experiment, Method, Schedule, SyntheticConfig};
use tailsampler::SamplerConfig;

fn main() -> tailsampler::Result<()> {
    let data = SyntheticConfig::default();
    let sizes = data.class_sizes();
    let k = 10 * sizes.last().unwrap();
    println!("class sizes {sizes:?}, k = {k}");

    let methods = Method::ALL.into_iter().collect();
    let seeds: Vec<u64> = (0..4).collect();
    let report = run_experiment(&data, &SamplerConfig::new(k, 0), &Schedule::default(), &methods, &seeds)?;

    let fmt = |v: Option<f64>| v.map(|x| format!("{:.3}", x)).unwrap_or_else(|| "-".into());
    println!("\nmethod               many   medium few    overall");
    for (method, m) in report.summary() {
        println!(
            "{:<20} {}  {}  {}  {:.3}",
            method.name(),
            fmt(m.many),
            fmt(m.medium),
            fmt(m.few),
            m.overall
        );
    }

    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    println!("\n{}", String::from_utf8(csv).unwrap());
    Ok(())
}
