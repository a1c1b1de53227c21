//! Weights stored as rotation angles: each usable weight is gamma times
//! the Pauli-Z expectation of RX(angle)|0>.

use qfl_ring::datagen::Sample;
use qfl_ring::qweights::QuantumWeightStore;
use qfl_ring::seeds::derive_rng;
use qfl_ring::trainkit::{Classifier, Trainable};

fn main() -> qfl_ring::Result<()> {
    let store = QuantumWeightStore::random(2, 2, std::f64::consts::PI, &mut derive_rng(3, 0))?;
    let weights = store.materialize()?;
    for (angle, w) in store.angles().as_slice().iter().zip(weights.as_slice()).take(4) {
        println!("angle {angle:+.4} -> weight {w:+.4}");
    }

    let sample = Sample { features: [1.2, 1.9], label: 1 };
    println!("logits {:?}", store.logits(&sample.features)?);
    let (loss, grad) = store.sample_loss_grad(&sample)?;
    println!("loss {loss:.6}, d loss / d angle[0..3] = {:?}", &grad[..3]);
    Ok(())
}
