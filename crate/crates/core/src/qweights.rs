//! Weights held as quantum states.
//!
//! Each trainable weight is a rotation angle `a`. Its usable value is read
//! off the qubit `RX(a)|0⟩` as the Pauli-Z expectation `cos a`, scaled by
//! `γ` before it is fed to the circuit as a rotation angle. Training updates
//! the stored angles by chaining the circuit gradient through the
//! parameter-shift derivative of the expectation.

use rand::Rng;

use crate::datagen::Sample;
use crate::error::{Error, Result};
use crate::statevec::{Gate, Observable, StateVector};
use crate::trainkit::{Classifier, Trainable};
use crate::vqc::{LayerParams, ShiftRule, VqcModel, ANGLES_PER_QUBIT};

pub const DEFAULT_GAMMA: f64 = std::f64::consts::PI;

/// Fresh angles are drawn from `[π/2 − INIT_SPREAD, π/2 + INIT_SPREAD]`, so
/// materialized weights start near zero where `|d cos / da|` is largest.
pub const INIT_SPREAD: f64 = 0.5;

/// Slack allowed when checking that an expectation pair describes a pure
/// `RX(a)|0⟩` state.
pub const DECODE_TOLERANCE: f64 = 1e-6;

/// The single-qubit state carrying one weight.
pub fn encode_weight(angle: f64) -> Result<StateVector> {
    StateVector::zero_state(1)?.apply_gate(&Gate::Rx { target: 0, angle })
}

/// `⟨Z⟩` of the weight qubit, i.e. the unscaled materialized weight.
pub fn weight_expectation(angle: f64) -> Result<f64> {
    encode_weight(angle)?.expectation(&Observable::z(0))
}

/// Recovers the angle of `RX(a)|0⟩` from its `⟨Z⟩ = cos a` and
/// `⟨Y⟩ = −sin a`. The result lies in `(−π, π]`.
pub fn decode_angle(expect_z: f64, expect_y: f64) -> Result<f64> {
    let radius = expect_z * expect_z + expect_y * expect_y;
    if !radius.is_finite() || (radius - 1.0).abs() > DECODE_TOLERANCE {
        return Err(Error::InconsistentExpectations {
            z: expect_z,
            y: expect_y,
        });
    }
    let angle = (-expect_y).atan2(expect_z);
    Ok(if angle <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        angle
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumWeightStore {
    angles: LayerParams,
    gamma: f64,
}

impl QuantumWeightStore {
    pub fn new(angles: LayerParams, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
        }
        Ok(QuantumWeightStore { angles, gamma })
    }

    pub fn random<R: Rng + ?Sized>(num_qubits: usize, num_layers: usize, gamma: f64, rng: &mut R) -> Result<Self> {
        let centre = std::f64::consts::FRAC_PI_2;
        let n = num_layers * num_qubits * ANGLES_PER_QUBIT;
        let values = (0..n)
            .map(|_| rng.random_range(centre - INIT_SPREAD..=centre + INIT_SPREAD))
            .collect();
        Self::new(LayerParams::new(num_layers, num_qubits, values)?, gamma)
    }

    pub fn angles(&self) -> &LayerParams {
        &self.angles
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Same gamma, replacement angles of the same shape.
    pub fn with_angles(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.angles.with_values(values)?, self.gamma)
    }

    /// Effective circuit parameters `γ·⟨Z⟩` for every stored angle.
    pub fn materialize(&self) -> Result<LayerParams> {
        let values = self
            .angles
            .as_slice()
            .iter()
            .map(|&a| weight_expectation(a).map(|z| self.gamma * z))
            .collect::<Result<Vec<_>>>()?;
        self.angles.with_values(values)
    }

    /// The circuit these weights currently describe.
    pub fn circuit(&self) -> Result<VqcModel> {
        Ok(VqcModel::new(self.materialize()?))
    }

    /// Chains `∂Loss/∂(effective parameter)` back to the stored angles.
    /// The inner derivative `d⟨Z⟩/da` is taken with the shift rule on the
    /// weight qubit itself.
    pub fn weight_gradient(&self, circuit_grad: &LayerParams) -> Result<LayerParams> {
        self.angles.check_shape(circuit_grad, "circuit gradient")?;
        let rule = ShiftRule::PAULI;
        let values = self
            .angles
            .as_slice()
            .iter()
            .zip(circuit_grad.as_slice())
            .map(|(&a, &g)| {
                let inner = rule.derivative(a, weight_expectation)?;
                Ok(g * self.gamma * inner)
            })
            .collect::<Result<Vec<_>>>()?;
        self.angles.with_values(values)
    }
}

impl Classifier for QuantumWeightStore {
    fn logits(&self, features: &[f64; 2]) -> Result<[f64; 2]> {
        self.circuit()?.logits(features)
    }
}

impl Trainable for QuantumWeightStore {
    fn params(&self) -> &[f64] {
        self.angles.as_slice()
    }

    fn params_mut(&mut self) -> &mut [f64] {
        self.angles.as_mut_slice()
    }

    fn sample_loss_grad(&self, sample: &Sample) -> Result<(f64, Vec<f64>)> {
        self.batch_loss_grad(std::slice::from_ref(sample))
    }

    /// Materializes once per batch; the chain rule is linear in the circuit
    /// gradient so it is applied to the batch mean.
    fn batch_loss_grad(&self, batch: &[Sample]) -> Result<(f64, Vec<f64>)> {
        let circuit = self.circuit()?;
        let (loss, circuit_grad) = circuit.batch_loss_grad(batch)?;
        let circuit_grad = self.angles.with_values(circuit_grad)?;
        Ok((loss, self.weight_gradient(&circuit_grad)?.into_vec()))
    }

    fn check_invariants(&self) -> Result<()> {
        if self.angles.as_slice().iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("weight angles"));
        }
        let bound = self.gamma * (1.0 + 1e-12);
        if self.materialize()?.as_slice().iter().any(|w| w.abs() > bound) {
            return Err(Error::Config("materialized weight escaped [-gamma, gamma]".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn store(values: Vec<f64>, gamma: f64) -> QuantumWeightStore {
        let n = values.len() / 6;
        QuantumWeightStore::new(LayerParams::new(n, 2, values).unwrap(), gamma).unwrap()
    }

    #[test]
    fn materialize_examples() {
        let s = store(vec![0.0; 6], PI);
        assert!(s.materialize().unwrap().as_slice().iter().all(|&w| (w - PI).abs() < 1e-15));
        let s = store(vec![FRAC_PI_2; 6], PI);
        assert!(s.materialize().unwrap().as_slice().iter().all(|&w| w.abs() < 1e-10));
    }

    #[test]
    fn materialize_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let gamma = rng.random_range(0.1..4.0);
            let values: Vec<f64> = (0..12).map(|_| rng.random_range(-7.0..7.0)).collect();
            let s = store(values.clone(), gamma);
            for (w, a) in s.materialize().unwrap().as_slice().iter().zip(&values) {
                assert_abs_diff_eq!(*w, gamma * a.cos(), epsilon = 1e-10);
                assert!(w.abs() <= gamma + 1e-12);
            }
        }
    }

    #[test]
    fn weight_gradient_examples() {
        let s = store(vec![0.0; 6], PI);
        let g = s.weight_gradient(&LayerParams::new(1, 2, vec![3.7; 6]).unwrap()).unwrap();
        assert!(g.as_slice().iter().all(|v| v.abs() < 1e-15));

        let s = store(vec![FRAC_PI_2; 6], PI);
        let g = s.weight_gradient(&LayerParams::new(1, 2, vec![1.0; 6]).unwrap()).unwrap();
        // finite differences of a ↦ γ·cos a at π/2
        let eps = 1e-6;
        let fd = PI * ((FRAC_PI_2 + eps).cos() - (FRAC_PI_2 - eps).cos()) / (2.0 * eps);
        for v in g.as_slice() {
            assert_abs_diff_eq!(*v, -PI, epsilon = 1e-9);
            assert_abs_diff_eq!(*v, fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn inner_shift_derivative_is_minus_sine() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let a: f64 = rng.random_range(-2.0 * PI..2.0 * PI);
            let d = ShiftRule::PAULI.derivative(a, weight_expectation).unwrap();
            assert_abs_diff_eq!(d, -a.sin(), epsilon = 1e-9);
        }
    }

    #[test]
    fn weight_gradient_rejects_shape_mismatch() {
        let s = store(vec![0.0; 6], PI);
        assert!(matches!(
            s.weight_gradient(&LayerParams::zeros(2, 2).unwrap()),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_angle(1.0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(decode_angle(0.0, -1.0).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(decode_angle(-1.0, 0.0).unwrap(), PI);
        assert_eq!(decode_angle(-1.0, -0.0).unwrap(), PI);
        assert!(matches!(decode_angle(0.5, 0.5), Err(Error::InconsistentExpectations { .. })));
        assert!(decode_angle(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn decode_round_trips_rx_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a: f64 = rng.random_range(-PI..PI);
            let s = encode_weight(a).unwrap();
            let z = s.expectation(&Observable::z(0)).unwrap();
            let y = s.expectation(&Observable::y(0)).unwrap();
            assert_abs_diff_eq!(decode_angle(z, y).unwrap(), a, epsilon = 1e-9);
        }
    }

    #[test]
    fn gamma_must_be_positive() {
        let angles = LayerParams::zeros(1, 2).unwrap();
        assert!(QuantumWeightStore::new(angles.clone(), 0.0).is_err());
        assert!(QuantumWeightStore::new(angles, f64::INFINITY).is_err());
    }

    #[test]
    fn random_init_is_centred_on_the_equator() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = QuantumWeightStore::random(2, 2, PI, &mut rng).unwrap();
        assert_eq!(s.params().len(), 12);
        for a in s.params() {
            assert!((a - FRAC_PI_2).abs() <= INIT_SPREAD);
        }
    }

    #[test]
    fn composed_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let eps = 1e-5;
        for _ in 0..10 {
            let s = QuantumWeightStore::random(2, 2, PI, &mut rng).unwrap();
            let sample = crate::datagen::random_sample(&mut rng);
            let (_, grad) = s.sample_loss_grad(&sample).unwrap();
            for p in 0..grad.len() {
                let mut plus = s.clone();
                plus.params_mut()[p] += eps;
                let mut minus = s.clone();
                minus.params_mut()[p] -= eps;
                let fd = (plus.sample_loss_grad(&sample).unwrap().0 - minus.sample_loss_grad(&sample).unwrap().0) / (2.0 * eps);
                assert_abs_diff_eq!(grad[p], fd, epsilon = 1e-5);
            }
        }
    }
}
