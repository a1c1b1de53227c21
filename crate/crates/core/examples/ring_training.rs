//! Trains one model variant around a ring of clients and prints the
//! per-round metrics.
//!
//! ```text
//! cargo run --release --example ring_training -- qfl-quantum teleport
//! ```

use qfl_ring::experiment::{self, ExperimentConfig, ModelChoice};

fn main() -> qfl_ring::Result<()> {
    let mut args = std::env::args().skip(1);
    let model: ModelChoice = args.next().as_deref().unwrap_or("cfl").parse()?;
    let mut config = ExperimentConfig::new(model);
    if let Some(transport) = args.next() {
        config.transport = transport.parse()?;
    }
    config.rounds = 30;

    let report = experiment::run_in_memory(&config)?;
    for m in report.metrics.iter().step_by(5) {
        println!("round {:>3}  loss {:.4}  accuracy {:.4}", m.round, m.mean_train_loss, m.test_accuracy);
    }
    print!("{}", report.summary());
    Ok(())
}
