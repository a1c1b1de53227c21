//! Independent reference implementations for integration tests: explicit
//! 4×4 matrix products for the two-qubit classifier, its analytic
//! derivative, the forward/backward (Heisenberg) factorization of that
//! derivative, and central finite differences.
#![allow(dead_code)]

use num_complex::Complex64;

pub type M4 = [[Complex64; 4]; 4];
type M2 = [[Complex64; 2]; 2];

const O: Complex64 = Complex64::new(0.0, 0.0);
const I1: Complex64 = Complex64::new(1.0, 0.0);
const IM: Complex64 = Complex64::new(0.0, 1.0);

const PAULI_X: M2 = [[O, I1], [I1, O]];
const PAULI_Y: M2 = [[O, Complex64::new(0.0, -1.0)], [IM, O]];
const PAULI_Z: M2 = [[I1, O], [O, Complex64::new(-1.0, 0.0)]];
const ID2: M2 = [[I1, O], [O, I1]];

/// `exp(-i a P / 2) = cos(a/2) I - i sin(a/2) P`.
fn rotation(p: &M2, a: f64) -> M2 {
    let (s, c) = (a / 2.0).sin_cos();
    let mut m = [[O; 2]; 2];
    for r in 0..2 {
        for k in 0..2 {
            m[r][k] = ID2[r][k] * c - IM * s * p[r][k];
        }
    }
    m
}

/// Qubit 0 is the left (most significant) factor.
fn kron(a: &M2, b: &M2) -> M4 {
    let mut m = [[O; 4]; 4];
    for r in 0..4 {
        for k in 0..4 {
            m[r][k] = a[r / 2][k / 2] * b[r % 2][k % 2];
        }
    }
    m
}

fn on_qubit(g: &M2, q: usize) -> M4 {
    if q == 0 {
        kron(g, &ID2)
    } else {
        kron(&ID2, g)
    }
}

fn cnot(control: usize) -> M4 {
    let mut m = [[O; 4]; 4];
    for basis in 0..4 {
        let (b0, b1) = (basis >> 1, basis & 1);
        let flipped = if control == 0 { (b0 << 1) | (b1 ^ b0) } else { ((b0 ^ b1) << 1) | b1 };
        m[flipped][basis] = I1;
    }
    m
}

pub fn mul(a: &M4, b: &M4) -> M4 {
    let mut m = [[O; 4]; 4];
    for r in 0..4 {
        for k in 0..4 {
            m[r][k] = (0..4).map(|j| a[r][j] * b[j][k]).sum();
        }
    }
    m
}

fn dagger(a: &M4) -> M4 {
    let mut m = [[O; 4]; 4];
    for r in 0..4 {
        for k in 0..4 {
            m[r][k] = a[k][r].conj();
        }
    }
    m
}

fn apply(a: &M4, v: &[Complex64; 4]) -> [Complex64; 4] {
    let mut out = [O; 4];
    for r in 0..4 {
        out[r] = (0..4).map(|k| a[r][k] * v[k]).sum();
    }
    out
}

fn braket(u: &[Complex64; 4], a: &M4, v: &[Complex64; 4]) -> Complex64 {
    let av = apply(a, v);
    (0..4).map(|r| u[r].conj() * av[r]).sum()
}

/// One elementary operation of the circuit; rotations remember their
/// generator and which entry of the flat parameter vector drives them.
struct Op {
    matrix: M4,
    generator: Option<M4>,
    param: Option<usize>,
}

fn rot_op(p: &M2, q: usize, angle: f64, param: Option<usize>) -> Op {
    Op {
        matrix: on_qubit(&rotation(p, angle), q),
        generator: Some(on_qubit(p, q)),
        param,
    }
}

/// RX encoding, then per layer CNOT(0→1), CNOT(1→0) and on each qubit
/// RZ(φ), RY(θ), RZ(ω) in that time order. Parameters are laid out
/// `[layer][qubit][φ, θ, ω]`.
fn ops(features: &[f64; 2], params: &[f64]) -> Vec<Op> {
    assert_eq!(params.len() % 6, 0);
    let mut out = vec![rot_op(&PAULI_X, 0, features[0], None), rot_op(&PAULI_X, 1, features[1], None)];
    for layer in 0..params.len() / 6 {
        out.push(Op { matrix: cnot(0), generator: None, param: None });
        out.push(Op { matrix: cnot(1), generator: None, param: None });
        for q in 0..2 {
            let base = layer * 6 + q * 3;
            out.push(rot_op(&PAULI_Z, q, params[base], Some(base)));
            out.push(rot_op(&PAULI_Y, q, params[base + 1], Some(base + 1)));
            out.push(rot_op(&PAULI_Z, q, params[base + 2], Some(base + 2)));
        }
    }
    out
}

fn z_on(k: usize) -> M4 {
    on_qubit(&PAULI_Z, k)
}

fn zero_ket() -> [Complex64; 4] {
    [I1, O, O, O]
}

/// Full circuit unitary as one explicit product.
pub fn unitary(features: &[f64; 2], params: &[f64]) -> M4 {
    ops(features, params)
        .iter()
        .fold(on_qubit(&ID2, 0), |acc, op| mul(&op.matrix, &acc))
}

/// `[⟨Z0⟩, ⟨Z1⟩]` from `⟨00| U† Z_k U |00⟩`.
pub fn forward(features: &[f64; 2], params: &[f64]) -> [f64; 2] {
    let psi = apply(&unitary(features, params), &zero_ket());
    [braket(&psi, &z_on(0), &psi).re, braket(&psi, &z_on(1), &psi).re]
}

/// `∂⟨Z_k⟩/∂p` by replacing each rotation with its exact matrix
/// derivative `-i/2 · P · R(a)`: `2 Re⟨ψ| Z_k |∂ψ⟩`.
pub fn analytic_gradient(features: &[f64; 2], params: &[f64], k: usize) -> Vec<f64> {
    let ops = ops(features, params);
    let psi = apply(&unitary(features, params), &zero_ket());
    let mut grad = vec![0.0; params.len()];
    for (i, op) in ops.iter().enumerate() {
        let (Some(p), Some(gen)) = (op.param, op.generator.as_ref()) else { continue };
        let mut d = on_qubit(&ID2, 0);
        for (j, other) in ops.iter().enumerate() {
            let factor = if j == i {
                let mut m = mul(gen, &other.matrix);
                m.iter_mut().flatten().for_each(|x| *x *= -IM * 0.5);
                m
            } else {
                other.matrix
            };
            d = mul(&factor, &d);
        }
        let dpsi = apply(&d, &zero_ket());
        grad[p] = 2.0 * braket(&psi, &z_on(k), &dpsi).re;
    }
    grad
}

/// Same derivative through the forward state `|φ_i⟩` after gate i and the
/// backward observable `B_{i+1} = V† Z_k V` of the gates after it:
/// `∂f/∂p = (i/2) ⟨φ_i| [P, B_{i+1}] |φ_i⟩`.
pub fn heisenberg_gradient(features: &[f64; 2], params: &[f64], k: usize) -> Vec<f64> {
    let ops = ops(features, params);
    let mut forward_states = Vec::with_capacity(ops.len());
    let mut phi = zero_ket();
    for op in &ops {
        phi = apply(&op.matrix, &phi);
        forward_states.push(phi);
    }
    let mut grad = vec![0.0; params.len()];
    let mut backward = z_on(k);
    for (i, op) in ops.iter().enumerate().rev() {
        if let (Some(p), Some(gen)) = (op.param, op.generator.as_ref()) {
            let comm_a = mul(gen, &backward);
            let comm_b = mul(&backward, gen);
            let mut comm = [[O; 4]; 4];
            for r in 0..4 {
                for c in 0..4 {
                    comm[r][c] = comm_a[r][c] - comm_b[r][c];
                }
            }
            grad[p] = (IM * 0.5 * braket(&forward_states[i], &comm, &forward_states[i])).re;
        }
        backward = mul(&dagger(&op.matrix), &mul(&backward, &op.matrix));
    }
    grad
}

/// Central differences of a scalar function.
pub fn finite_difference<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], eps: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + eps;
            let plus = f(&probe);
            probe[i] = x[i] - eps;
            let minus = f(&probe);
            probe[i] = x[i];
            (plus - minus) / (2.0 * eps)
        })
        .collect()
}

/// Softmax cross-entropy written out directly, without max-subtraction.
pub fn naive_cross_entropy(logits: [f64; 2], label: usize) -> f64 {
    let z: f64 = logits.iter().map(|l| l.exp()).sum();
    -(logits[label].exp() / z).ln()
}

pub fn gradients_agree(got: &[f64], want: &[f64], abs: f64, rel: f64) -> bool {
    got.len() == want.len()
        && got
            .iter()
            .zip(want)
            .all(|(g, w)| (g - w).abs() <= abs.max(rel * w.abs()))
}
