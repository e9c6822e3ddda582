//! The full synthetic benchmark: methods A (g), B (r + 0.2g), C (r) and
//! D (double score) under both tuning problems, as the `synth` command runs
//! it. Pass a sample size to trade accuracy for speed.
//!
//! cargo run --release --example benchmark [n]

use ood_reject::cli::{cmd_synth, Command, RunConfig};

fn main() -> ood_reject::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let config = RunConfig {
        n,
        ..RunConfig::new(Command::Synth)
    };
    let report = cmd_synth(&config)?;
    print!("{}", report.to_text());
    Ok(())
}
