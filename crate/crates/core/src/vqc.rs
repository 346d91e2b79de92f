//! Strongly-entangling variational circuit on an amplitude-encoded input.
//!
//! Each layer applies `G_q = R_Z(μ₁) R_Y(μ₂) R_Z(μ₃)` to every qubit (so
//! `R_Z(μ₃)` acts first), then a CNOT ring `i → (i + r) mod M`. The circuit
//! reports `⟨Z_k⟩` for every qubit. Gradients use the adjoint method: one
//! backward sweep that uncomputes the state and a costate gate by gate.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QgatError, Result};
use crate::statevector::{amplitude_encode, GateOp, Pauli, StateVector, ZERO_NORM_THRESHOLD};

/// Rotation angles, `n_layers × n_qubits × 3`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    n_layers: usize,
    n_qubits: usize,
    angles: Vec<f64>,
}

impl CircuitParams {
    pub fn new(n_layers: usize, n_qubits: usize, angles: Vec<f64>) -> Result<Self> {
        let want = param_count(n_layers, n_qubits);
        if angles.len() != want {
            return Err(QgatError::Config(format!(
                "circuit parameters need {n_layers}×{n_qubits}×3 = {want} angles, got {}",
                angles.len()
            )));
        }
        if let Some(i) = angles.iter().position(|a| !a.is_finite()) {
            return Err(QgatError::Input(format!("non-finite circuit angle at {i}")));
        }
        Ok(Self {
            n_layers,
            n_qubits,
            angles,
        })
    }

    pub fn zeros(n_layers: usize, n_qubits: usize) -> Self {
        Self {
            n_layers,
            n_qubits,
            angles: vec![0.0; param_count(n_layers, n_qubits)],
        }
    }

    /// Angles drawn from `Uniform[0, 2π)`.
    pub fn random<R: Rng + ?Sized>(n_layers: usize, n_qubits: usize, rng: &mut R) -> Self {
        let angles = (0..param_count(n_layers, n_qubits))
            .map(|_| rng.random_range(0.0..TAU))
            .collect();
        Self {
            n_layers,
            n_qubits,
            angles,
        }
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn index(&self, layer: usize, qubit: usize, k: usize) -> usize {
        (layer * self.n_qubits + qubit) * 3 + k
    }

    pub fn get(&self, layer: usize, qubit: usize, k: usize) -> f64 {
        self.angles[self.index(layer, qubit, k)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.angles
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.angles
    }
}

/// Number of trainable angles in an `n_layers`-deep circuit on `n_qubits`.
pub fn param_count(n_layers: usize, n_qubits: usize) -> usize {
    n_layers * n_qubits * 3
}

/// CNOT ring ranges per layer.
///
/// Single-qubit registers carry no ranges and skip the ring entirely.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntanglingLayout {
    n_qubits: usize,
    n_layers: usize,
    ranges: Vec<usize>,
}

/// Ranges `r_ℓ = ((ℓ-1) mod (M-1)) + 1`, cycling through `1..M`.
pub fn build_layout(n_qubits: usize, n_layers: usize) -> Result<EntanglingLayout> {
    if n_qubits < 2 {
        return Err(QgatError::Config(format!(
            "an entangling layout needs at least 2 qubits, got {n_qubits}"
        )));
    }
    if n_layers == 0 {
        return Err(QgatError::Config("circuit needs at least one layer".into()));
    }
    let ranges = (0..n_layers).map(|l| l % (n_qubits - 1) + 1).collect();
    Ok(EntanglingLayout {
        n_qubits,
        n_layers,
        ranges,
    })
}

impl EntanglingLayout {
    /// Layout for any register size: the usual ring for `n_qubits ≥ 2`,
    /// rotations only for a single qubit.
    pub fn for_register(n_qubits: usize, n_layers: usize) -> Result<Self> {
        match n_qubits {
            0 => Err(QgatError::Config("circuit needs at least one qubit".into())),
            1 if n_layers == 0 => Err(QgatError::Config("circuit needs at least one layer".into())),
            1 => Ok(Self {
                n_qubits: 1,
                n_layers,
                ranges: Vec::new(),
            }),
            _ => build_layout(n_qubits, n_layers),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn ranges(&self) -> &[usize] {
        &self.ranges
    }

    /// CNOT target for control `i` in `layer`.
    pub fn target(&self, layer: usize, control: usize) -> Option<usize> {
        self.ranges
            .get(layer)
            .map(|r| (control + r) % self.n_qubits)
    }

    fn check(&self, params: &CircuitParams) -> Result<()> {
        if params.n_layers != self.n_layers || params.n_qubits != self.n_qubits {
            return Err(QgatError::Config(format!(
                "circuit parameters are {}×{}×3 but layout is {} layers on {} qubits",
                params.n_layers, params.n_qubits, self.n_layers, self.n_qubits
            )));
        }
        Ok(())
    }
}

/// Gate sequence with the flat parameter index driving each rotation.
fn gate_sequence(
    params: &CircuitParams,
    layout: &EntanglingLayout,
) -> Vec<(GateOp, Option<usize>)> {
    let n = layout.n_qubits;
    let mut ops = Vec::with_capacity(layout.n_layers * (4 * n));
    for layer in 0..layout.n_layers {
        for wire in 0..n {
            let [i1, i2, i3] = [0, 1, 2].map(|k| params.index(layer, wire, k));
            let a = params.as_slice();
            ops.push((GateOp::Rz { wire, angle: a[i3] }, Some(i3)));
            ops.push((GateOp::Ry { wire, angle: a[i2] }, Some(i2)));
            ops.push((GateOp::Rz { wire, angle: a[i1] }, Some(i1)));
        }
        if let Some(&r) = layout.ranges.get(layer) {
            for control in 0..n {
                ops.push((
                    GateOp::Cnot {
                        control,
                        target: (control + r) % n,
                    },
                    None,
                ));
            }
        }
    }
    ops
}

/// A gate and the trainable angle it carries, if any.
type TaggedGate = (GateOp, Option<usize>);

fn run(
    input: &[f64],
    params: &CircuitParams,
    layout: &EntanglingLayout,
) -> Result<(StateVector, Vec<TaggedGate>)> {
    layout.check(params)?;
    let mut state = amplitude_encode(input, layout.n_qubits)?;
    let ops = gate_sequence(params, layout);
    for (op, _) in &ops {
        state.apply_gate(op)?;
    }
    Ok((state, ops))
}

/// `(⟨Z_1⟩, …, ⟨Z_{n_q}⟩)` after encoding `input` and applying the ansatz.
pub fn circuit_forward(
    input: &[f64],
    params: &CircuitParams,
    layout: &EntanglingLayout,
) -> Result<Vec<f64>> {
    let (state, _) = run(input, params, layout)?;
    Ok(state.expect_z_all())
}

/// Gradients of `Σ_k upstream_k ⟨Z_k⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitGrads {
    /// Same layout as [`CircuitParams::as_slice`].
    pub params: Vec<f64>,
    /// One entry per raw input component, through the normalization.
    pub input: Vec<f64>,
}

pub fn circuit_backward(
    input: &[f64],
    params: &CircuitParams,
    layout: &EntanglingLayout,
    upstream: &[f64],
) -> Result<CircuitGrads> {
    let n = layout.n_qubits;
    if upstream.len() != n {
        return Err(QgatError::Dimension(format!(
            "upstream gradient has length {}, circuit measures {n} qubits",
            upstream.len()
        )));
    }
    let (mut psi, ops) = run(input, params, layout)?;

    // λ = O|ψ⟩ with O = Σ_k g_k Z_k, diagonal in the computational basis
    let dim = psi.dim();
    let weights: Vec<f64> = (0..dim)
        .map(|i| {
            (0..n)
                .map(|q| {
                    if (i >> (n - 1 - q)) & 1 == 0 {
                        upstream[q]
                    } else {
                        -upstream[q]
                    }
                })
                .sum()
        })
        .collect();
    let mut lambda = psi.clone();
    lambda.scale_diagonal(&weights);

    let mut grad_params = vec![0.0; params.as_slice().len()];
    for (op, pidx) in ops.iter().rev() {
        if let Some(p) = pidx {
            let (pauli, wire) = match *op {
                GateOp::Ry { wire, .. } => (Pauli::Y, wire),
                GateOp::Rz { wire, .. } => (Pauli::Z, wire),
                _ => unreachable!("only rotations carry parameters"),
            };
            // d/dθ ⟨ψ|U†OU|ψ⟩ for U = exp(-iθG/2) reduces to Im⟨λ|G|ψ⟩
            grad_params[*p] += lambda.pauli_overlap(&psi, pauli, wire).im;
        }
        let inv = op.inverse();
        psi.apply_gate(&inv)?;
        lambda.apply_gate(&inv)?;
    }

    // f(u) = uᵀ Re(U†OU) u for real u, so ∂f/∂u = 2 Re(λ₀)
    let norm = input.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut grad_input = vec![0.0; input.len()];
    if norm >= ZERO_NORM_THRESHOLD {
        let g: Vec<f64> = lambda.amplitudes()[..input.len()]
            .iter()
            .map(|a| 2.0 * a.re)
            .collect();
        let u_dot_g: f64 = input.iter().zip(&g).map(|(x, gi)| x / norm * gi).sum();
        for ((out, x), gi) in grad_input.iter_mut().zip(input).zip(&g) {
            *out = (gi - x / norm * u_dot_g) / norm;
        }
    }
    Ok(CircuitGrads {
        params: grad_params,
        input: grad_input,
    })
}
