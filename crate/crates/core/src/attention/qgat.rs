//! Quantum attention scoring.
//!
//! For a message edge `j → i` the circuit input is
//! `a′ = P([W h_i ‖ W h_j ‖ h_i ‖ h_j])`, of length `2^{n_q} · ⌈h/n_q⌉`.
//! `a′` is cut into `⌈h/n_q⌉` contiguous chunks; each chunk is
//! amplitude-encoded and run through the shared circuit, and the first `h`
//! of the concatenated `⟨Z⟩` readouts are the head logits. Logits go into
//! the softmax unchanged.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::glorot;
use crate::error::{QgatError, Result};
use crate::graph::Neighborhood;
use crate::vqc::{circuit_backward, circuit_forward, CircuitParams, EntanglingLayout};

/// Where the per-head value matrices `W^{(k)}` come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueProjection {
    /// `W^{(k)}` is the `k`-th `d_out`-column slice of the shared `W`.
    #[default]
    SharedSlice,
    /// A separate `d × (h·d_out)` matrix.
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QgatLayerState {
    pub(crate) heads: usize,
    pub(crate) out_per_head: usize,
    pub(crate) n_qubits: usize,
    /// `d × (h·d_out)`.
    pub(crate) w: Array2<f64>,
    /// `(2h·d_out + 2d) × (2^{n_q}·⌈h/n_q⌉)`.
    pub(crate) p: Array2<f64>,
    pub(crate) w_value: Option<Array2<f64>>,
    pub(crate) circuit: CircuitParams,
    pub(crate) layout: EntanglingLayout,
}

pub fn n_executions(heads: usize, n_qubits: usize) -> usize {
    heads.div_ceil(n_qubits)
}

/// Width of `a′`, `2^{n_q} · ⌈h/n_q⌉`.
pub fn circuit_input_width(heads: usize, n_qubits: usize) -> usize {
    (1usize << n_qubits) * n_executions(heads, n_qubits)
}

#[derive(Debug, Clone)]
pub(crate) struct QgatTape {
    pub z: Array2<f64>,
    /// `a′` per message edge, `E × width`.
    pub a_prime: Array2<f64>,
    pub executions: usize,
}

impl QgatLayerState {
    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        heads: usize,
        out_per_head: usize,
        n_qubits: usize,
        circuit_layers: usize,
        value_projection: ValueProjection,
        rng: &mut R,
    ) -> Result<Self> {
        if heads == 0 || n_qubits == 0 || circuit_layers == 0 || out_per_head == 0 || in_dim == 0 {
            return Err(QgatError::Config(format!(
                "QGAT needs positive dims, heads, qubits and circuit layers \
                 (d={in_dim}, d_out={out_per_head}, h={heads}, n_q={n_qubits}, L={circuit_layers})"
            )));
        }
        let layout = EntanglingLayout::for_register(n_qubits, circuit_layers)?;
        let hd = heads * out_per_head;
        let w = glorot(in_dim, hd, rng);
        let p = glorot(
            2 * hd + 2 * in_dim,
            circuit_input_width(heads, n_qubits),
            rng,
        );
        let w_value = match value_projection {
            ValueProjection::SharedSlice => None,
            ValueProjection::Independent => Some(glorot(in_dim, hd, rng)),
        };
        let circuit = CircuitParams::random(circuit_layers, n_qubits, rng);
        Ok(Self {
            heads,
            out_per_head,
            n_qubits,
            w,
            p,
            w_value,
            circuit,
            layout,
        })
    }

    /// Assembles a state from explicit weights.
    pub fn from_parts(
        heads: usize,
        out_per_head: usize,
        w: Array2<f64>,
        p: Array2<f64>,
        w_value: Option<Array2<f64>>,
        circuit: CircuitParams,
    ) -> Result<Self> {
        let n_qubits = circuit.n_qubits();
        let layout = EntanglingLayout::for_register(n_qubits, circuit.n_layers())?;
        let (d, hd) = w.dim();
        if hd != heads * out_per_head {
            return Err(QgatError::Config(format!(
                "W has {hd} columns, expected h·d_out = {}",
                heads * out_per_head
            )));
        }
        let want = (2 * hd + 2 * d, circuit_input_width(heads, n_qubits));
        if p.dim() != want {
            return Err(QgatError::Config(format!(
                "P is {:?}, expected {want:?}",
                p.dim()
            )));
        }
        if let Some(wv) = &w_value {
            if wv.dim() != w.dim() {
                return Err(QgatError::Config(
                    "value projection must match W's shape".into(),
                ));
            }
        }
        Ok(Self {
            heads,
            out_per_head,
            n_qubits,
            w,
            p,
            w_value,
            circuit,
            layout,
        })
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn in_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn circuit(&self) -> &CircuitParams {
        &self.circuit
    }

    pub fn layout(&self) -> &EntanglingLayout {
        &self.layout
    }

    pub fn executions_per_edge(&self) -> usize {
        n_executions(self.heads, self.n_qubits)
    }

    fn hd(&self) -> usize {
        self.heads * self.out_per_head
    }

    /// Row blocks of `P` acting on `W h_i`, `W h_j`, `h_i`, `h_j`.
    fn p_blocks(&self) -> [ndarray::ArrayView2<'_, f64>; 4] {
        let (hd, d) = (self.hd(), self.in_dim());
        [
            self.p.slice(s![..hd, ..]),
            self.p.slice(s![hd..2 * hd, ..]),
            self.p.slice(s![2 * hd..2 * hd + d, ..]),
            self.p.slice(s![2 * hd + d.., ..]),
        ]
    }

    /// `a′_ij = P([W h_i ‖ W h_j ‖ h_i ‖ h_j])` for one edge.
    pub fn edge_input(&self, h_i: ArrayView1<f64>, h_j: ArrayView1<f64>) -> Result<Array1<f64>> {
        let d = self.in_dim();
        if h_i.len() != d || h_j.len() != d {
            return Err(QgatError::Config(format!(
                "node features have length {}/{}, W expects {d}",
                h_i.len(),
                h_j.len()
            )));
        }
        let (zi, zj) = (h_i.dot(&self.w), h_j.dot(&self.w));
        let a = ndarray::concatenate(Axis(0), &[zi.view(), zj.view(), h_i, h_j])
            .expect("1-d concatenation");
        Ok(a.dot(&self.p))
    }

    /// Head logits for one circuit input; also returns how many times the
    /// circuit ran.
    pub fn logits(&self, a_prime: &[f64]) -> Result<(Vec<f64>, usize)> {
        let chunk = 1usize << self.n_qubits;
        let n_exec = self.executions_per_edge();
        if a_prime.len() != chunk * n_exec {
            return Err(QgatError::Dimension(format!(
                "circuit input has length {}, expected 2^{} · {n_exec} = {}",
                a_prime.len(),
                self.n_qubits,
                chunk * n_exec
            )));
        }
        let mut out = Vec::with_capacity(self.n_qubits * n_exec);
        for piece in a_prime.chunks_exact(chunk) {
            out.extend(circuit_forward(piece, &self.circuit, &self.layout)?);
        }
        out.truncate(self.heads);
        Ok((out, n_exec))
    }

    pub(crate) fn forward(
        &self,
        nb: &Neighborhood,
        h: &Array2<f64>,
    ) -> Result<(Array2<f64>, Array2<f64>, QgatTape)> {
        if h.ncols() != self.in_dim() {
            return Err(QgatError::Config(format!(
                "layer expects {} input features, got {}",
                self.in_dim(),
                h.ncols()
            )));
        }
        let z = h.dot(&self.w);
        let [p1, p2, p3, p4] = self.p_blocks();
        let dst_part = z.dot(&p1) + h.dot(&p3);
        let src_part = z.dot(&p2) + h.dot(&p4);

        let edges = nb.message_edges();
        let width = self.p.ncols();
        let mut a_prime = Array2::zeros((edges.len(), width));
        for (e, &(src, dst)) in edges.iter().enumerate() {
            let mut row = a_prime.row_mut(e);
            row.assign(&dst_part.row(dst));
            row += &src_part.row(src);
        }
        let per_edge: Vec<Result<(Vec<f64>, usize)>> = (0..edges.len())
            .into_par_iter()
            .map(|e| self.logits(a_prime.row(e).as_slice().expect("standard layout")))
            .collect();
        let mut logits = Array2::zeros((edges.len(), self.heads));
        let mut executions = 0;
        for (e, res) in per_edge.into_iter().enumerate() {
            let (l, n) = res?;
            logits.row_mut(e).assign(&Array1::from(l));
            executions += n;
        }
        let values = match &self.w_value {
            Some(wv) => h.dot(wv),
            None => z.clone(),
        };
        Ok((
            logits,
            values,
            QgatTape {
                z,
                a_prime,
                executions,
            },
        ))
    }

    /// Returns parameter gradients (in [`Self::params`] order) and `∂L/∂h`.
    pub(crate) fn backward(
        &self,
        nb: &Neighborhood,
        h: &Array2<f64>,
        tape: &QgatTape,
        g_logits: &Array2<f64>,
        g_values: &Array2<f64>,
    ) -> Result<(Vec<Vec<f64>>, Array2<f64>)> {
        let chunk = 1usize << self.n_qubits;
        let nq = self.n_qubits;
        let n_exec = self.executions_per_edge();
        let edges = nb.message_edges();

        let per_edge: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..edges.len())
            .into_par_iter()
            .map(|e| {
                let input = tape.a_prime.row(e);
                let input = input.as_slice().expect("standard layout");
                let mut g_theta = vec![0.0; self.circuit.as_slice().len()];
                let mut g_input = vec![0.0; input.len()];
                for c in 0..n_exec {
                    let upstream: Vec<f64> = (0..nq)
                        .map(|q| {
                            let head = c * nq + q;
                            if head < self.heads {
                                g_logits[[e, head]]
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    if upstream.iter().all(|u| *u == 0.0) {
                        continue;
                    }
                    let piece = &input[c * chunk..(c + 1) * chunk];
                    let g = circuit_backward(piece, &self.circuit, &self.layout, &upstream)?;
                    for (acc, v) in g_theta.iter_mut().zip(&g.params) {
                        *acc += v;
                    }
                    g_input[c * chunk..(c + 1) * chunk].copy_from_slice(&g.input);
                }
                Ok((g_theta, g_input))
            })
            .collect();

        let n = nb.n_nodes();
        let width = self.p.ncols();
        let mut g_theta = vec![0.0; self.circuit.as_slice().len()];
        let mut g_dst = Array2::<f64>::zeros((n, width));
        let mut g_src = Array2::<f64>::zeros((n, width));
        for (res, &(src, dst)) in per_edge.into_iter().zip(&edges) {
            let (gt, ga) = res?;
            for (acc, v) in g_theta.iter_mut().zip(&gt) {
                *acc += v;
            }
            let ga = ArrayView1::from(&ga);
            let mut row = g_dst.row_mut(dst);
            row += &ga;
            let mut row = g_src.row_mut(src);
            row += &ga;
        }

        let [p1, p2, p3, p4] = self.p_blocks();
        let z = &tape.z;
        let g_p = ndarray::concatenate(
            Axis(0),
            &[
                z.t().dot(&g_dst).view(),
                z.t().dot(&g_src).view(),
                h.t().dot(&g_dst).view(),
                h.t().dot(&g_src).view(),
            ],
        )
        .expect("P blocks stack");

        let mut g_z = g_dst.dot(&p1.t()) + g_src.dot(&p2.t());
        let mut g_h = g_dst.dot(&p3.t()) + g_src.dot(&p4.t());
        let g_wv = match &self.w_value {
            Some(wv) => {
                g_h += &g_values.dot(&wv.t());
                Some(h.t().dot(g_values))
            }
            None => {
                g_z += g_values;
                None
            }
        };
        let g_w = h.t().dot(&g_z);
        g_h += &g_z.dot(&self.w.t());

        let mut grads = vec![into_vec(g_w), into_vec(g_p), g_theta];
        if let Some(g) = g_wv {
            grads.push(into_vec(g));
        }
        Ok((grads, g_h))
    }

    pub(crate) fn params(&self) -> Vec<(&'static str, &[f64])> {
        let mut out = vec![
            ("W", self.w.as_slice().expect("standard layout")),
            ("P", self.p.as_slice().expect("standard layout")),
            ("theta", self.circuit.as_slice()),
        ];
        if let Some(wv) = &self.w_value {
            out.push(("W_value", wv.as_slice().expect("standard layout")));
        }
        out
    }

    pub(crate) fn params_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let mut out = vec![
            ("W", self.w.as_slice_mut().expect("standard layout")),
            ("P", self.p.as_slice_mut().expect("standard layout")),
            ("theta", self.circuit.as_mut_slice()),
        ];
        if let Some(wv) = &mut self.w_value {
            out.push(("W_value", wv.as_slice_mut().expect("standard layout")));
        }
        out
    }
}

pub(crate) fn into_vec(a: Array2<f64>) -> Vec<f64> {
    if a.is_standard_layout() {
        a.into_raw_vec_and_offset().0
    } else {
        a.iter().copied().collect()
    }
}
