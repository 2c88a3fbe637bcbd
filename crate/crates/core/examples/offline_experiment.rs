//! Runs the full experiment from a settings file and prints the report.
//!
//! cargo run --example offline_experiment -- [settings file]

use std::path::PathBuf;

use btdetect::config::KeyValues;
use btdetect::eval::{run_experiment, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/fixture_experiment.conf"));
    let config = ExperimentConfig::from_settings(&KeyValues::from_file(&path)?)?;
    let output = run_experiment(&config)?;
    print!("{}", output.report.to_text());
    for f in &output.failures {
        eprintln!("dropped pair {}: {}", f.pair_id, f.message);
    }
    Ok(())
}
