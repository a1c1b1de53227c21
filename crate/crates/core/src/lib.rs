//! Decentralized quantum federated learning on a ring of clients.
//!
//! A two-qubit variational circuit classifier is trained on the make-circles
//! toy dataset by a chain of clients, each holding one shard of the data.
//! Three interchangeable model variants share the same orchestration:
//!
//! * `cfl`: a small classical MLP with classical weight hand-off,
//! * `qfl-classical`: the variational circuit with classical weights,
//! * `qfl-quantum`: the variational circuit whose weights are stored as
//!   qubit rotation angles and moved between clients by simulated
//!   teleportation.
//!
//! Module map:
//!
//! | module       | contents                                                       |
//! |--------------|----------------------------------------------------------------|
//! | [`statevec`] | dense statevector simulator, gates, Pauli expectations, measurement |
//! | [`vqc`]      | encoder, entangling variational layers, parameter-shift gradients |
//! | [`qweights`] | weights as quantum states, chain-rule gradients, angle decoding |
//! | [`teleport`] | single-qubit Bell-pair teleportation of states and weight stores |
//! | [`trainkit`] | loss, SGD, classical baseline, local training, metrics |
//! | [`fedring`]  | sharding, ring training, hub-spoke averaging baseline |
//! | [`datagen`]  | make-circles generation, stratified split, angle scaling |
//! | [`experiment`] | configuration, end-to-end runs, CSV output, comparisons |
//!
//! Qubit 0 is the most significant bit of a basis-state label everywhere.

pub mod datagen;
pub mod error;
pub mod experiment;
pub mod fedring;
pub mod numfmt;
pub mod qweights;
pub mod seeds;
pub mod statevec;
pub mod teleport;
pub mod trainkit;
pub mod vqc;

pub use error::{Error, Result};
