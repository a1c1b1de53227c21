//! Moves a quantum-weight store through simulated teleportation, one
//! qubit per weight, and decodes the angles on the receiving side.

use qfl_ring::qweights::QuantumWeightStore;
use qfl_ring::seeds::{derive_rng, STREAM_CHANNEL};
use qfl_ring::teleport::{angle_difference, teleport_weights};

fn main() -> qfl_ring::Result<()> {
    let store = QuantumWeightStore::random(2, 1, std::f64::consts::PI, &mut derive_rng(5, 0))?;
    let transfer = teleport_weights(&store, &mut derive_rng(5, STREAM_CHANNEL))?;
    println!("{:>9} {:>9} {:>8} {:>9}", "sent", "received", "bell", "fidelity");
    for (record, received) in transfer.records.iter().zip(transfer.store.angles().as_slice()) {
        let sent = record.input_angle.unwrap_or(f64::NAN);
        let (m1, m2) = record.bell_outcome;
        println!("{sent:>9.5} {received:>9.5} {:>8} {:>9.6}", format!("({m1},{m2})"), record.fidelity);
        assert!(angle_difference(sent, *received).abs() < 1e-9);
    }
    Ok(())
}
