//! Variational quantum circuit classifier.
//!
//! Circuit layout for `n` qubits and `L` layers:
//!
//! ```text
//! |0⟩ ─ RX(x_0) ─┤ entangler ├─ ROT(φ,θ,ω) ─ … ─ ⟨Z_0⟩
//! |0⟩ ─ RX(x_1) ─┤           ├─ ROT(φ,θ,ω) ─ … ─ ⟨Z_1⟩
//!                 └──── repeated L times ───┘
//! ```
//!
//! The entangler is a closed ring of CNOTs `q → q+1 (mod n)`; for two qubits
//! that is `CNOT(0→1)` followed by `CNOT(1→0)`. Gradients use the two-term
//! parameter-shift rule on full-circuit re-evaluations.

use rand::Rng;

use crate::datagen::Sample;
use crate::error::{Error, Result};
use crate::statevec::{Gate, Observable, StateVector};
use crate::trainkit::{loss_and_grad, Classifier, Trainable};

/// Angles per qubit per layer, in `(φ, θ, ω)` order.
pub const ANGLES_PER_QUBIT: usize = 3;
pub const PHI: usize = 0;
pub const THETA: usize = 1;
pub const OMEGA: usize = 2;

pub const DEFAULT_QUBITS: usize = 2;
pub const DEFAULT_LAYERS: usize = 2;

/// Half-width of the uniform range used for fresh circuit parameters.
pub const INIT_HALF_WIDTH: f64 = std::f64::consts::FRAC_PI_4;

/// Two-term shift rule `d/dp f = c · (f(p + s) − f(p − s))`, exact for
/// gates generated by a Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftRule {
    pub shift: f64,
    pub coefficient: f64,
}

impl ShiftRule {
    pub const PAULI: ShiftRule = ShiftRule {
        shift: std::f64::consts::FRAC_PI_2,
        coefficient: 0.5,
    };

    pub fn combine(&self, plus: f64, minus: f64) -> f64 {
        self.coefficient * (plus - minus)
    }

    /// Derivative of a scalar function at `at` using two shifted evaluations.
    pub fn derivative<F>(&self, at: f64, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let plus = f(at + self.shift)?;
        let minus = f(at - self.shift)?;
        Ok(self.combine(plus, minus))
    }
}

impl Default for ShiftRule {
    fn default() -> Self {
        ShiftRule::PAULI
    }
}

/// Rotation angles of shape `[layers][qubits][3]`, stored flat in
/// `(layer, qubit, angle)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    num_layers: usize,
    num_qubits: usize,
    values: Vec<f64>,
}

impl LayerParams {
    pub fn new(num_layers: usize, num_qubits: usize, values: Vec<f64>) -> Result<Self> {
        if num_layers == 0 {
            return Err(Error::Config("a circuit needs at least one layer".into()));
        }
        if num_qubits == 0 {
            return Err(Error::QubitCount(0));
        }
        let expected = num_layers * num_qubits * ANGLES_PER_QUBIT;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                what: "layer parameters",
                expected,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("layer parameters"));
        }
        Ok(LayerParams {
            num_layers,
            num_qubits,
            values,
        })
    }

    pub fn zeros(num_layers: usize, num_qubits: usize) -> Result<Self> {
        Self::new(
            num_layers,
            num_qubits,
            vec![0.0; num_layers * num_qubits * ANGLES_PER_QUBIT],
        )
    }

    /// Same shape as `self`, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.num_layers, self.num_qubits, values)
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, layer: usize, qubit: usize, angle: usize) -> usize {
        debug_assert!(layer < self.num_layers && qubit < self.num_qubits && angle < ANGLES_PER_QUBIT);
        (layer * self.num_qubits + qubit) * ANGLES_PER_QUBIT + angle
    }

    pub fn get(&self, layer: usize, qubit: usize, angle: usize) -> f64 {
        self.values[self.index(layer, qubit, angle)]
    }

    pub fn set(&mut self, layer: usize, qubit: usize, angle: usize, value: f64) {
        let i = self.index(layer, qubit, angle);
        self.values[i] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    fn same_shape(&self, other: &LayerParams) -> bool {
        self.num_layers == other.num_layers && self.num_qubits == other.num_qubits
    }

    pub(crate) fn check_shape(&self, other: &LayerParams, what: &'static str) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::LengthMismatch {
                what,
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(())
    }
}

/// Encoder, entangling variational layers and per-qubit Pauli-Z readout.
#[derive(Debug, Clone, PartialEq)]
pub struct VqcModel {
    params: LayerParams,
}

impl VqcModel {
    pub fn new(params: LayerParams) -> Self {
        VqcModel { params }
    }

    pub fn zeros(num_qubits: usize, num_layers: usize) -> Result<Self> {
        Ok(VqcModel::new(LayerParams::zeros(num_layers, num_qubits)?))
    }

    /// Parameters drawn uniformly from `[−π/4, π/4]`.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, num_layers: usize, rng: &mut R) -> Result<Self> {
        let n = num_layers * num_qubits * ANGLES_PER_QUBIT;
        let values = (0..n)
            .map(|_| rng.random_range(-INIT_HALF_WIDTH..=INIT_HALF_WIDTH))
            .collect();
        Ok(VqcModel::new(LayerParams::new(num_layers, num_qubits, values)?))
    }

    pub fn num_qubits(&self) -> usize {
        self.params.num_qubits
    }

    pub fn num_layers(&self) -> usize {
        self.params.num_layers
    }

    pub fn params(&self) -> &LayerParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut LayerParams {
        &mut self.params
    }

    pub fn observables(&self) -> Vec<Observable> {
        (0..self.num_qubits()).map(Observable::z).collect()
    }

    /// `⊗_q RX(features[q]) |0…0⟩`.
    pub fn encode(&self, features: &[f64]) -> Result<StateVector> {
        if features.len() != self.num_qubits() {
            return Err(Error::LengthMismatch {
                what: "features",
                expected: self.num_qubits(),
                actual: features.len(),
            });
        }
        if features.iter().any(|f| !f.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        let mut state = StateVector::zero_state(self.num_qubits())?;
        for (target, &angle) in features.iter().enumerate() {
            state.apply_gate_in_place(&Gate::Rx { target, angle })?;
        }
        Ok(state)
    }

    /// Gates of the variational block for `params`, in application order.
    pub fn variational_gates(params: &LayerParams) -> Vec<Gate> {
        let n = params.num_qubits;
        let mut gates = Vec::with_capacity(params.num_layers * (2 * n));
        for layer in 0..params.num_layers {
            gates.extend(entangler(n));
            for q in 0..n {
                gates.push(Gate::Rot {
                    target: q,
                    phi: params.get(layer, q, PHI),
                    theta: params.get(layer, q, THETA),
                    omega: params.get(layer, q, OMEGA),
                });
            }
        }
        gates
    }

    /// Per-qubit `⟨Z⟩` after the full circuit.
    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>> {
        let encoded = self.encode(features)?;
        readout(&encoded, &self.params)
    }

    /// Loss gradient with respect to every circuit angle, given
    /// `upstream[k] = ∂Loss/∂⟨Z_k⟩`.
    pub fn gradient(&self, features: &[f64], upstream: &[f64]) -> Result<LayerParams> {
        if upstream.len() != self.num_qubits() {
            return Err(Error::LengthMismatch {
                what: "upstream gradient",
                expected: self.num_qubits(),
                actual: upstream.len(),
            });
        }
        if upstream.iter().any(|u| !u.is_finite()) {
            return Err(Error::NonFinite("upstream gradient"));
        }
        let encoded = self.encode(features)?;
        let rule = ShiftRule::PAULI;
        let mut shifted = self.params.clone();
        let mut grad = vec![0.0; self.params.len()];
        for (p, slot) in grad.iter_mut().enumerate() {
            let original = self.params.values[p];
            shifted.values[p] = original + rule.shift;
            let plus = readout(&encoded, &shifted)?;
            shifted.values[p] = original - rule.shift;
            let minus = readout(&encoded, &shifted)?;
            shifted.values[p] = original;
            *slot = upstream
                .iter()
                .zip(plus.iter().zip(&minus))
                .map(|(u, (a, b))| u * rule.combine(*a, *b))
                .sum();
        }
        self.params.with_values(grad)
    }
}

fn entangler(num_qubits: usize) -> Vec<Gate> {
    match num_qubits {
        1 => Vec::new(),
        n => (0..n)
            .map(|q| Gate::Cnot {
                control: q,
                target: (q + 1) % n,
            })
            .collect(),
    }
}

fn readout(encoded: &StateVector, params: &LayerParams) -> Result<Vec<f64>> {
    let mut state = encoded.clone();
    for gate in VqcModel::variational_gates(params) {
        state.apply_gate_in_place(&gate)?;
    }
    (0..params.num_qubits)
        .map(|q| state.expectation(&Observable::z(q)))
        .collect()
}

fn two_logits(outputs: &[f64]) -> Result<[f64; 2]> {
    match outputs {
        [a, b] => Ok([*a, *b]),
        _ => Err(Error::LengthMismatch {
            what: "classifier outputs",
            expected: 2,
            actual: outputs.len(),
        }),
    }
}

impl Classifier for VqcModel {
    fn logits(&self, features: &[f64; 2]) -> Result<[f64; 2]> {
        two_logits(&self.forward(features)?)
    }
}

impl Trainable for VqcModel {
    fn params(&self) -> &[f64] {
        self.params.as_slice()
    }

    fn params_mut(&mut self) -> &mut [f64] {
        self.params.as_mut_slice()
    }

    fn sample_loss_grad(&self, sample: &Sample) -> Result<(f64, Vec<f64>)> {
        let logits = self.logits(&sample.features)?;
        let (loss, dlogits) = loss_and_grad(&logits, sample.label)?;
        let grad = self.gradient(&sample.features, &dlogits)?;
        Ok((loss, grad.into_vec()))
    }
}
