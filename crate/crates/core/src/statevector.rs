//! Dense complex statevector with in-place gate application.
//!
//! Wire 0 is the most significant bit of the basis index, so `|10⟩` on two
//! qubits is index 2. Rotations follow `R_G(θ) = exp(-iθG/2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QgatError, Result};

/// Inputs with L2 norm below this are treated as the zero vector.
pub const ZERO_NORM_THRESHOLD: f64 = 1e-12;

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 20;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateOp {
    Ry {
        wire: usize,
        angle: f64,
    },
    Rz {
        wire: usize,
        angle: f64,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    CPhase {
        control: usize,
        target: usize,
        angle: f64,
    },
}

impl GateOp {
    /// The gate that undoes `self`.
    pub fn inverse(&self) -> GateOp {
        match *self {
            GateOp::Ry { wire, angle } => GateOp::Ry {
                wire,
                angle: -angle,
            },
            GateOp::Rz { wire, angle } => GateOp::Rz {
                wire,
                angle: -angle,
            },
            GateOp::Cnot { control, target } => GateOp::Cnot { control, target },
            GateOp::CPhase {
                control,
                target,
                angle,
            } => GateOp::CPhase {
                control,
                target,
                angle: -angle,
            },
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let check = |w: usize| {
            if w < n_qubits {
                Ok(())
            } else {
                Err(QgatError::Index {
                    what: "qubit register",
                    index: w,
                    size: n_qubits,
                })
            }
        };
        match *self {
            GateOp::Ry { wire, .. } | GateOp::Rz { wire, .. } => check(wire),
            GateOp::Cnot { control, target }
            | GateOp::CPhase {
                control, target, ..
            } => {
                check(control)?;
                check(target)?;
                if control == target {
                    return Err(QgatError::Input(format!(
                        "two-qubit gate needs distinct wires, got {control} twice"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Single-qubit Pauli operators used as rotation generators and observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The computational basis state `|0…0⟩`.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes, renormalizing them to unit length.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(QgatError::Dimension(format!(
                "amplitude vector length {len} is not a power of two"
            )));
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(QgatError::Input("non-finite amplitude".into()));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < ZERO_NORM_THRESHOLD {
            return Err(QgatError::Input("zero amplitude vector".into()));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_register(n_qubits)?;
        Ok(Self {
            n_qubits,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Stride of `wire` in the basis index.
    #[inline]
    fn stride(&self, wire: usize) -> usize {
        1 << (self.n_qubits - 1 - wire)
    }

    pub fn apply_gate(&mut self, gate: &GateOp) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match *gate {
            GateOp::Ry { wire, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let stride = self.stride(wire);
                for_each_pair(&mut self.amplitudes, stride, |a0, a1| {
                    let (x0, x1) = (*a0, *a1);
                    *a0 = x0 * c - x1 * s;
                    *a1 = x0 * s + x1 * c;
                });
            }
            GateOp::Rz { wire, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let lower = Complex64::new(c, -s);
                let upper = Complex64::new(c, s);
                let stride = self.stride(wire);
                for_each_pair(&mut self.amplitudes, stride, |a0, a1| {
                    *a0 *= lower;
                    *a1 *= upper;
                });
            }
            GateOp::Cnot { control, target } => {
                let cmask = self.stride(control);
                let tmask = self.stride(target);
                for i in 0..self.amplitudes.len() {
                    if i & cmask != 0 && i & tmask == 0 {
                        self.amplitudes.swap(i, i | tmask);
                    }
                }
            }
            GateOp::CPhase {
                control,
                target,
                angle,
            } => {
                let mask = self.stride(control) | self.stride(target);
                let phase = Complex64::from_polar(1.0, angle);
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    if i & mask == mask {
                        *a *= phase;
                    }
                }
            }
        }
        Ok(())
    }

    /// Exact `⟨Z_qubit⟩`.
    pub fn expect_z(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.n_qubits {
            return Err(QgatError::Index {
                what: "qubit register",
                index: qubit,
                size: self.n_qubits,
            });
        }
        let mask = self.stride(qubit);
        let value: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if i & mask == 0 {
                    a.norm_sqr()
                } else {
                    -a.norm_sqr()
                }
            })
            .sum();
        Ok(value.clamp(-1.0, 1.0))
    }

    /// `⟨Z_k⟩` for every qubit, in wire order.
    pub fn expect_z_all(&self) -> Vec<f64> {
        (0..self.n_qubits)
            .map(|q| self.expect_z(q).expect("wire in range"))
            .collect()
    }

    /// `⟨self| P_wire |other⟩`.
    pub fn pauli_overlap(&self, other: &StateVector, pauli: Pauli, wire: usize) -> Complex64 {
        debug_assert_eq!(self.dim(), other.dim());
        let mask = self.stride(wire);
        let mut acc = ZERO;
        for (i, (l, r)) in self.amplitudes.iter().zip(&other.amplitudes).enumerate() {
            let bit_set = i & mask != 0;
            let term = match pauli {
                Pauli::Z => {
                    if bit_set {
                        -*r
                    } else {
                        *r
                    }
                }
                // (Y r)_i = -i r_{i|m} for bit 0, +i r_{i&!m} for bit 1
                Pauli::Y => {
                    let partner = other.amplitudes[i ^ mask];
                    if bit_set {
                        Complex64::new(-partner.im, partner.re)
                    } else {
                        Complex64::new(partner.im, -partner.re)
                    }
                }
            };
            acc += l.conj() * term;
        }
        acc
    }

    /// Multiplies each amplitude by a real diagonal weight.
    pub(crate) fn scale_diagonal(&mut self, weights: &[f64]) {
        for (a, w) in self.amplitudes.iter_mut().zip(weights) {
            *a *= *w;
        }
    }
}

fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(QgatError::Config(format!(
            "register size {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

#[inline]
fn for_each_pair(
    amps: &mut [Complex64],
    stride: usize,
    mut f: impl FnMut(&mut Complex64, &mut Complex64),
) {
    for block in amps.chunks_exact_mut(2 * stride) {
        let (lo, hi) = block.split_at_mut(stride);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            f(a0, a1);
        }
    }
}

/// Zero-pads `x` to `2^n_qubits` and L2-normalizes it into a real-amplitude state.
///
/// Inputs whose norm is below [`ZERO_NORM_THRESHOLD`] encode as `|0…0⟩`.
pub fn amplitude_encode(x: &[f64], n_qubits: usize) -> Result<StateVector> {
    check_register(n_qubits)?;
    let dim = 1usize << n_qubits;
    if x.len() > dim {
        return Err(QgatError::Dimension(format!(
            "input length {} exceeds 2^{n_qubits} = {dim}",
            x.len()
        )));
    }
    if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
        return Err(QgatError::Input(format!(
            "non-finite feature at position {pos}"
        )));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < ZERO_NORM_THRESHOLD {
        return StateVector::zero_state(n_qubits);
    }
    let mut amplitudes = vec![ZERO; dim];
    for (a, v) in amplitudes.iter_mut().zip(x) {
        *a = Complex64::new(v / norm, 0.0);
    }
    Ok(StateVector {
        n_qubits,
        amplitudes,
    })
}

/// Product state `⊗_i R_Y(x_i)|0⟩`, one qubit per feature.
pub fn angle_encode(x: &[f64]) -> Result<StateVector> {
    if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
        return Err(QgatError::Input(format!(
            "non-finite feature at position {pos}"
        )));
    }
    let mut state = StateVector::zero_state(x.len())?;
    for (wire, &angle) in x.iter().enumerate() {
        state.apply_gate(&GateOp::Ry { wire, angle })?;
    }
    Ok(state)
}
