//! All three variants on one dataset, written to a single CSV with a
//! `model` column.
//!
//! ```text
//! cargo run --release --example compare_models -- comparison.csv
//! ```

use std::path::PathBuf;

use qfl_ring::experiment::{self, ExperimentConfig, ModelChoice};

fn main() -> qfl_ring::Result<()> {
    let output = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "comparison.csv".to_string()));
    let configs: Vec<ExperimentConfig> = ModelChoice::ALL.iter().map(|&m| ExperimentConfig::new(m)).collect();
    for report in experiment::compare(&configs, &output)? {
        println!(
            "{:<14} final accuracy {:.4}, convergence round {:>3}, {} ms",
            report.config.model, report.final_accuracy, report.convergence_round, report.elapsed_ms
        );
    }
    println!("wrote {}", output.display());
    Ok(())
}
