//! Dense statevector simulation for few-qubit registers.
//!
//! Basis labels put qubit 0 in the most significant bit: for two qubits the
//! amplitude order is `|00⟩, |01⟩, |10⟩, |11⟩` with the left digit being
//! qubit 0.
//!
//! States are values: [`StateVector::apply_gate`] returns a new state and
//! leaves its input untouched.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 12;

/// Tolerance used when checking that a supplied state is normalized.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Outcomes with probability below this are never sampled.
const MIN_OUTCOME_PROBABILITY: f64 = 1e-15;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub type Matrix2 = [[Complex64; 2]; 2];

/// Primitive gates. Angles are in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Rx { target: usize, angle: f64 },
    Ry { target: usize, angle: f64 },
    Rz { target: usize, angle: f64 },
    /// General single-qubit rotation `RZ(omega) · RY(theta) · RZ(phi)`
    /// (rightmost factor acts first).
    Rot {
        target: usize,
        phi: f64,
        theta: f64,
        omega: f64,
    },
    Cnot { control: usize, target: usize },
    H(usize),
    X(usize),
    Z(usize),
}

impl Gate {
    pub fn target(&self) -> usize {
        match *self {
            Gate::Rx { target, .. }
            | Gate::Ry { target, .. }
            | Gate::Rz { target, .. }
            | Gate::Rot { target, .. }
            | Gate::Cnot { target, .. }
            | Gate::H(target)
            | Gate::X(target)
            | Gate::Z(target) => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            Gate::Cnot { control, .. } => Some(control),
            _ => None,
        }
    }

    fn angles_finite(&self) -> bool {
        match *self {
            Gate::Rx { angle, .. } | Gate::Ry { angle, .. } | Gate::Rz { angle, .. } => {
                angle.is_finite()
            }
            Gate::Rot {
                phi, theta, omega, ..
            } => phi.is_finite() && theta.is_finite() && omega.is_finite(),
            _ => true,
        }
    }

    /// The 2×2 matrix of a single-qubit gate, `None` for CNOT.
    pub fn single_qubit_matrix(&self) -> Option<Matrix2> {
        let m = match *self {
            Gate::Rx { angle, .. } => rx_matrix(angle),
            Gate::Ry { angle, .. } => ry_matrix(angle),
            Gate::Rz { angle, .. } => rz_matrix(angle),
            Gate::Rot {
                phi, theta, omega, ..
            } => matmul2(&rz_matrix(omega), &matmul2(&ry_matrix(theta), &rz_matrix(phi))),
            Gate::H(_) => {
                let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[s, s], [s, -s]]
            }
            Gate::X(_) => [[ZERO, ONE], [ONE, ZERO]],
            Gate::Z(_) => [[ONE, ZERO], [ZERO, -ONE]],
            Gate::Cnot { .. } => return None,
        };
        Some(m)
    }

    /// Dense matrix of the gate on its own qubits: 2×2, or 4×4 for CNOT
    /// with the control as the high bit.
    pub fn matrix(&self) -> Vec<Vec<Complex64>> {
        match self.single_qubit_matrix() {
            Some(m) => m.iter().map(|row| row.to_vec()).collect(),
            None => {
                let mut m = vec![vec![ZERO; 4]; 4];
                m[0][0] = ONE;
                m[1][1] = ONE;
                m[2][3] = ONE;
                m[3][2] = ONE;
                m
            }
        }
    }
}

fn rx_matrix(angle: f64) -> Matrix2 {
    let c = Complex64::new((angle / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, -(angle / 2.0).sin());
    [[c, s], [s, c]]
}

fn ry_matrix(angle: f64) -> Matrix2 {
    let c = Complex64::new((angle / 2.0).cos(), 0.0);
    let s = Complex64::new((angle / 2.0).sin(), 0.0);
    [[c, -s], [s, c]]
}

fn rz_matrix(angle: f64) -> Matrix2 {
    [
        [Complex64::from_polar(1.0, -angle / 2.0), ZERO],
        [ZERO, Complex64::from_polar(1.0, angle / 2.0)],
    ]
}

fn matmul2(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// A single-qubit Pauli observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observable {
    pub pauli: Pauli,
    pub target: usize,
}

impl Observable {
    pub fn z(target: usize) -> Self {
        Observable {
            pauli: Pauli::Z,
            target,
        }
    }

    pub fn y(target: usize) -> Self {
        Observable {
            pauli: Pauli::Y,
            target,
        }
    }

    pub fn x(target: usize) -> Self {
        Observable {
            pauli: Pauli::X,
            target,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero_state(num_qubits: usize) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = ONE;
        Ok(StateVector {
            num_qubits,
            amplitudes,
        })
    }

    /// Builds a state from explicit amplitudes, which must be normalized.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::AmplitudeCount(len));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_qubit_count(num_qubits)?;
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("amplitudes"));
        }
        let state = StateVector {
            num_qubits,
            amplitudes,
        };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Tensor product `self ⊗ other`; `self` supplies the leading qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        check_qubit_count(self.num_qubits + other.num_qubits)?;
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Ok(StateVector {
            num_qubits: self.num_qubits + other.num_qubits,
            amplitudes,
        })
    }

    /// Returns `U|self⟩`.
    pub fn apply_gate(&self, gate: &Gate) -> Result<StateVector> {
        let mut next = self.clone();
        next.apply_gate_in_place(gate)?;
        Ok(next)
    }

    /// Applies gates left to right.
    pub fn apply_circuit<'a, I>(&self, gates: I) -> Result<StateVector>
    where
        I: IntoIterator<Item = &'a Gate>,
    {
        let mut next = self.clone();
        for gate in gates {
            next.apply_gate_in_place(gate)?;
        }
        Ok(next)
    }

    pub(crate) fn apply_gate_in_place(&mut self, gate: &Gate) -> Result<()> {
        self.check_index(gate.target())?;
        if !gate.angles_finite() {
            return Err(Error::NonFinite("gate angle"));
        }
        match gate.single_qubit_matrix() {
            Some(m) => {
                let mask = self.mask(gate.target());
                for i in 0..self.amplitudes.len() {
                    if i & mask == 0 {
                        let j = i | mask;
                        let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
                        self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                        self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
                    }
                }
            }
            None => {
                let control = gate.control().expect("two-qubit gate has a control");
                self.check_index(control)?;
                if control == gate.target() {
                    return Err(Error::ControlIsTarget(control));
                }
                let cmask = self.mask(control);
                let tmask = self.mask(gate.target());
                for i in 0..self.amplitudes.len() {
                    if i & cmask != 0 && i & tmask == 0 {
                        self.amplitudes.swap(i, i | tmask);
                    }
                }
            }
        }
        debug_assert!((self.norm() - 1.0).abs() < 1e-9);
        Ok(())
    }

    /// Exact expectation `⟨self|P_target|self⟩`.
    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        self.check_index(obs.target)?;
        let mask = self.mask(obs.target);
        let value = match obs.pauli {
            Pauli::Z => self
                .amplitudes
                .iter()
                .enumerate()
                .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
                .sum(),
            Pauli::X | Pauli::Y => {
                let mut acc = 0.0;
                for i in (0..self.amplitudes.len()).filter(|i| i & mask == 0) {
                    let overlap = self.amplitudes[i].conj() * self.amplitudes[i | mask];
                    acc += if obs.pauli == Pauli::X {
                        overlap.re
                    } else {
                        overlap.im
                    };
                }
                2.0 * acc
            }
        };
        Ok(value)
    }

    /// Probability that measuring `target` yields 1.
    pub fn probability_one(&self, target: usize) -> Result<f64> {
        self.check_index(target)?;
        let mask = self.mask(target);
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Projects `target` onto `outcome` and renormalizes. Returns the
    /// probability of that outcome together with the post-measurement state.
    pub fn project(&self, target: usize, outcome: u8) -> Result<(f64, StateVector)> {
        let p1 = self.probability_one(target)?;
        let probability = if outcome == 0 { 1.0 - p1 } else { p1 };
        if probability < MIN_OUTCOME_PROBABILITY {
            return Err(Error::ImpossibleOutcome {
                qubit: target,
                outcome,
            });
        }
        let mask = self.mask(target);
        let keep_set = outcome != 0;
        let scale = 1.0 / probability.sqrt();
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if (i & mask != 0) == keep_set { a * scale } else { ZERO })
            .collect();
        Ok((
            probability,
            StateVector {
                num_qubits: self.num_qubits,
                amplitudes,
            },
        ))
    }

    /// Measures each target in order in the computational basis, sampling
    /// from Born probabilities. Returns the outcome bits and the collapsed,
    /// renormalized state.
    pub fn measure_qubits<R: Rng + ?Sized>(
        &self,
        targets: &[usize],
        rng: &mut R,
    ) -> Result<(Vec<u8>, StateVector)> {
        for (k, &t) in targets.iter().enumerate() {
            self.check_index(t)?;
            if targets[..k].contains(&t) {
                return Err(Error::DuplicateTarget(t));
            }
        }
        let mut state = self.clone();
        let mut outcomes = Vec::with_capacity(targets.len());
        for &t in targets {
            let p1 = state.probability_one(t)?;
            let p0 = 1.0 - p1;
            let draw: f64 = rng.random();
            let outcome = if p0 < MIN_OUTCOME_PROBABILITY {
                1
            } else if p1 < MIN_OUTCOME_PROBABILITY || draw < p0 {
                0
            } else {
                1
            };
            state = state.project(t, outcome)?.1;
            outcomes.push(outcome);
        }
        Ok((outcomes, state))
    }

    /// `|⟨self|other⟩|²`, insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::LengthMismatch {
                what: "fidelity operands",
                expected: self.num_qubits,
                actual: other.num_qubits,
            });
        }
        let inner: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(inner.norm_sqr())
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.num_qubits {
            return Err(Error::QubitIndex {
                index,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }
}

fn check_qubit_count(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(Error::QubitCount(num_qubits));
    }
    Ok(())
}
