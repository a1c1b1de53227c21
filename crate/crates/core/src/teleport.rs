//! Single-qubit teleportation over a Bell pair, and weight-by-weight
//! transfer of a [`QuantumWeightStore`].
//!
//! Register layout (qubit 0 is the high bit):
//!
//! ```text
//! q0  message      ──■── H ── M (m1)
//! q1  sender half  ──X────── M (m2)
//! q2  receiver half ──────────── X^m2 ── Z^m1 ── output
//! ```
//!
//! `q1` and `q2` start as `(|00⟩ + |11⟩)/√2`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::qweights::{decode_angle, encode_weight, QuantumWeightStore};
use crate::statevec::{Gate, Observable, StateVector, NORM_TOLERANCE};

const MESSAGE: usize = 0;
const SENDER: usize = 1;
const RECEIVER: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct TeleportRecord {
    /// Bell measurement bits `(m1, m2)` from the message and sender qubits.
    pub bell_outcome: (u8, u8),
    /// Angle of the weight carried by this transfer, when there is one.
    pub input_angle: Option<f64>,
    pub recovered_state: StateVector,
    /// `|⟨ψ_in|ψ_out⟩|²`.
    pub fidelity: f64,
}

/// Weights as received on the far side of the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTransfer {
    pub store: QuantumWeightStore,
    pub records: Vec<TeleportRecord>,
}

fn check_message(message: &StateVector) -> Result<()> {
    if message.num_qubits() != 1 {
        return Err(Error::LengthMismatch {
            what: "teleported message qubits",
            expected: 1,
            actual: message.num_qubits(),
        });
    }
    let norm = message.norm();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized(norm));
    }
    Ok(())
}

/// Message entangled with the channel and rotated into the Bell basis,
/// ready for the sender's measurement.
fn entangle(message: &StateVector) -> Result<StateVector> {
    check_message(message)?;
    let channel = StateVector::zero_state(2)?.apply_circuit(&[
        Gate::H(0),
        Gate::Cnot { control: 0, target: 1 },
    ])?;
    message.tensor(&channel)?.apply_circuit(&[
        Gate::Cnot {
            control: MESSAGE,
            target: SENDER,
        },
        Gate::H(MESSAGE),
    ])
}

fn correct_and_extract(message: &StateVector, collapsed: StateVector, (m1, m2): (u8, u8)) -> Result<TeleportRecord> {
    let mut corrections = Vec::with_capacity(2);
    if m2 == 1 {
        corrections.push(Gate::X(RECEIVER));
    }
    if m1 == 1 {
        corrections.push(Gate::Z(RECEIVER));
    }
    let corrected = collapsed.apply_circuit(&corrections)?;
    let base = (usize::from(m1) << 2) | (usize::from(m2) << 1);
    let amps = corrected.amplitudes();
    let recovered_state = StateVector::from_amplitudes(vec![amps[base], amps[base + 1]])?;
    let fidelity = message.fidelity(&recovered_state)?;
    Ok(TeleportRecord {
        bell_outcome: (m1, m2),
        input_angle: None,
        recovered_state,
        fidelity,
    })
}

/// Teleports a single-qubit state, sampling the Bell measurement from `rng`.
pub fn teleport_state<R: Rng + ?Sized>(message: &StateVector, rng: &mut R) -> Result<TeleportRecord> {
    let prepared = entangle(message)?;
    let (bits, collapsed) = prepared.measure_qubits(&[MESSAGE, SENDER], rng)?;
    correct_and_extract(message, collapsed, (bits[0], bits[1]))
}

/// Teleports with the Bell measurement forced to `outcome`.
pub fn teleport_state_with_outcome(message: &StateVector, outcome: (u8, u8)) -> Result<TeleportRecord> {
    if outcome.0 > 1 || outcome.1 > 1 {
        return Err(Error::Config(format!("Bell outcome bits must be 0 or 1, got {outcome:?}")));
    }
    let prepared = entangle(message)?;
    let (_, after_first) = prepared.project(MESSAGE, outcome.0)?;
    let (_, collapsed) = after_first.project(SENDER, outcome.1)?;
    correct_and_extract(message, collapsed, outcome)
}

/// Sends every stored angle through its own teleportation, in
/// `(layer, qubit, angle)` order, and decodes it on the receiving side.
///
/// Decoded angles are reported in `(−π, π]`; stored angles outside that
/// interval arrive wrapped, which leaves every materialized weight and
/// its gradient unchanged.
pub fn teleport_weights<R: Rng + ?Sized>(store: &QuantumWeightStore, rng: &mut R) -> Result<WeightTransfer> {
    let angles = store.angles().as_slice();
    let mut received = Vec::with_capacity(angles.len());
    let mut records = Vec::with_capacity(angles.len());
    for (index, &angle) in angles.iter().enumerate() {
        let wrap = |source: Error| Error::WeightTransfer {
            index,
            source: Box::new(source),
        };
        let message = encode_weight(angle).map_err(wrap)?;
        let mut record = teleport_state(&message, rng).map_err(wrap)?;
        let out = &record.recovered_state;
        let z = out.expectation(&Observable::z(0)).map_err(wrap)?;
        let y = out.expectation(&Observable::y(0)).map_err(wrap)?;
        received.push(decode_angle(z, y).map_err(wrap)?);
        record.input_angle = Some(angle);
        records.push(record);
    }
    Ok(WeightTransfer {
        store: store.with_angles(received)?,
        records,
    })
}

/// Smallest signed difference between two angles, in `(−π, π]`.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let d = (a - b).rem_euclid(tau);
    if d > std::f64::consts::PI {
        d - tau
    } else {
        d
    }
}
