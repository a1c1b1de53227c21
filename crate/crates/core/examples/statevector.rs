//! Gates, expectations and measurement on a small register.
//!
//! ```text
//! cargo run --example statevector
//! ```

use qfl_ring::seeds::derive_rng;
use qfl_ring::statevec::{Gate, Observable, StateVector};

fn main() -> qfl_ring::Result<()> {
    let bell = StateVector::zero_state(2)?.apply_circuit(&[Gate::H(0), Gate::Cnot { control: 0, target: 1 }])?;
    let amps: Vec<String> = bell.amplitudes().iter().map(|a| format!("{a:.4}")).collect();
    println!("bell amplitudes: [{}]", amps.join(", "));
    println!("<Z0> = {:+.3}, <X0> = {:+.3}", bell.expectation(&Observable::z(0))?, bell.expectation(&Observable::x(0))?);

    let mut rng = derive_rng(1, 0);
    let mut agree = 0;
    for _ in 0..1000 {
        let (bits, _) = bell.measure_qubits(&[0, 1], &mut rng)?;
        agree += usize::from(bits[0] == bits[1]);
    }
    println!("measured qubits agreed in {agree}/1000 shots");

    let tilted = StateVector::zero_state(1)?.apply_gate(&Gate::Rx { target: 0, angle: 1.0 })?;
    println!("<Z> after RX(1.0) = {:.6} (cos 1 = {:.6})", tilted.expectation(&Observable::z(0))?, 1f64.cos());
    Ok(())
}
