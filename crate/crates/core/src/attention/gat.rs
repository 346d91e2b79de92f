//! Classical attention scorers.
//!
//! GAT: `e_ij = LeakyReLU(a_dstᵀ W h_i + a_srcᵀ W h_j)`.
//! GATv2: `e_ij = aᵀ LeakyReLU(W_dst h_i + W_src h_j)`, values from `W_src`.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::glorot;
use super::qgat::into_vec;
use crate::error::{QgatError, Result};
use crate::graph::Neighborhood;

pub const LEAKY_SLOPE: f64 = 0.2;

#[inline]
fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

#[inline]
fn leaky_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

fn check_input(expected: usize, h: &Array2<f64>) -> Result<()> {
    if h.ncols() != expected {
        return Err(QgatError::Dimension(format!(
            "layer expects {expected} input features, got {}",
            h.ncols()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatState {
    pub(crate) heads: usize,
    pub(crate) out_per_head: usize,
    pub(crate) w: Array2<f64>,
    /// `h × d_out` attention weights on the destination's projection.
    pub(crate) a_dst: Array2<f64>,
    pub(crate) a_src: Array2<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct GatTape {
    pub z: Array2<f64>,
    /// Pre-LeakyReLU score per edge and head.
    pub raw: Array2<f64>,
}

impl GatState {
    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        heads: usize,
        out_per_head: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            heads,
            out_per_head,
            w: glorot(in_dim, heads * out_per_head, rng),
            a_dst: glorot(heads, out_per_head, rng),
            a_src: glorot(heads, out_per_head, rng),
        }
    }

    pub fn from_parts(
        heads: usize,
        out_per_head: usize,
        w: Array2<f64>,
        a_dst: Array2<f64>,
        a_src: Array2<f64>,
    ) -> Result<Self> {
        if w.ncols() != heads * out_per_head
            || a_dst.dim() != (heads, out_per_head)
            || a_src.dim() != (heads, out_per_head)
        {
            return Err(QgatError::Config(
                "GAT weight shapes disagree with heads × d_out".into(),
            ));
        }
        Ok(Self {
            heads,
            out_per_head,
            w,
            a_dst,
            a_src,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.w.nrows()
    }

    /// Per-node `a·(W h)` for each head.
    fn head_scores(&self, z: &Array2<f64>, a: &Array2<f64>) -> Array2<f64> {
        let (h, dout) = (self.heads, self.out_per_head);
        Array2::from_shape_fn((z.nrows(), h), |(i, k)| {
            (0..dout).map(|t| z[[i, k * dout + t]] * a[[k, t]]).sum()
        })
    }

    pub(crate) fn forward(
        &self,
        nb: &Neighborhood,
        h: &Array2<f64>,
    ) -> Result<(Array2<f64>, Array2<f64>, GatTape)> {
        check_input(self.in_dim(), h)?;
        let z = h.dot(&self.w);
        let s_dst = self.head_scores(&z, &self.a_dst);
        let s_src = self.head_scores(&z, &self.a_src);
        let edges = nb.message_edges();
        let raw = Array2::from_shape_fn((edges.len(), self.heads), |(e, k)| {
            let (src, dst) = edges[e];
            s_dst[[dst, k]] + s_src[[src, k]]
        });
        let logits = raw.mapv(leaky);
        Ok((logits, z.clone(), GatTape { z, raw }))
    }

    pub(crate) fn backward(
        &self,
        nb: &Neighborhood,
        h: &Array2<f64>,
        tape: &GatTape,
        g_logits: &Array2<f64>,
        g_values: &Array2<f64>,
    ) -> (Vec<Vec<f64>>, Array2<f64>) {
        let (n, heads, dout) = (nb.n_nodes(), self.heads, self.out_per_head);
        let mut g_sdst = Array2::<f64>::zeros((n, heads));
        let mut g_ssrc = Array2::<f64>::zeros((n, heads));
        for (e, (src, dst)) in nb.message_edges().into_iter().enumerate() {
            for k in 0..heads {
                let g = g_logits[[e, k]] * leaky_grad(tape.raw[[e, k]]);
                g_sdst[[dst, k]] += g;
                g_ssrc[[src, k]] += g;
            }
        }
        let z = &tape.z;
        let mut g_z = g_values.clone();
        let mut g_adst = Array2::<f64>::zeros((heads, dout));
        let mut g_asrc = Array2::<f64>::zeros((heads, dout));
        for i in 0..n {
            for k in 0..heads {
                for t in 0..dout {
                    let c = k * dout + t;
                    g_adst[[k, t]] += g_sdst[[i, k]] * z[[i, c]];
                    g_asrc[[k, t]] += g_ssrc[[i, k]] * z[[i, c]];
                    g_z[[i, c]] +=
                        g_sdst[[i, k]] * self.a_dst[[k, t]] + g_ssrc[[i, k]] * self.a_src[[k, t]];
                }
            }
        }
        let g_w = h.t().dot(&g_z);
        let g_h = g_z.dot(&self.w.t());
        (vec![into_vec(g_w), into_vec(g_adst), into_vec(g_asrc)], g_h)
    }

    pub(crate) fn params(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("W", self.w.as_slice().expect("standard layout")),
            ("a_dst", self.a_dst.as_slice().expect("standard layout")),
            ("a_src", self.a_src.as_slice().expect("standard layout")),
        ]
    }

    pub(crate) fn params_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("W", self.w.as_slice_mut().expect("standard layout")),
            ("a_dst", self.a_dst.as_slice_mut().expect("standard layout")),
            ("a_src", self.a_src.as_slice_mut().expect("standard layout")),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gatv2State {
    pub(crate) heads: usize,
    pub(crate) out_per_head: usize,
    pub(crate) w_dst: Array2<f64>,
    pub(crate) w_src: Array2<f64>,
    pub(crate) a: Array2<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Gatv2Tape {
    pub x_dst: Array2<f64>,
    pub x_src: Array2<f64>,
}

impl Gatv2State {
    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        heads: usize,
        out_per_head: usize,
        rng: &mut R,
    ) -> Self {
        let hd = heads * out_per_head;
        Self {
            heads,
            out_per_head,
            w_dst: glorot(in_dim, hd, rng),
            w_src: glorot(in_dim, hd, rng),
            a: glorot(heads, out_per_head, rng),
        }
    }

    pub fn from_parts(
        heads: usize,
        out_per_head: usize,
        w_dst: Array2<f64>,
        w_src: Array2<f64>,
        a: Array2<f64>,
    ) -> Result<Self> {
        let hd = heads * out_per_head;
        if w_dst.ncols() != hd || w_src.dim() != w_dst.dim() || a.dim() != (heads, out_per_head) {
            return Err(QgatError::Config(
                "GATv2 weight shapes disagree with heads × d_out".into(),
            ));
        }
        Ok(Self {
            heads,
            out_per_head,
            w_dst,
            w_src,
            a,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.w_dst.nrows()
    }

    pub(crate) fn forward(
        &self,
        nb: &Neighborhood,
        h: &Array2<f64>,
    ) -> Result<(Array2<f64>, Array2<f64>, Gatv2Tape)> {
        check_input(self.in_dim(), h)?;
        let x_dst = h.dot(&self.w_dst);
        let x_src = h.dot(&self.w_src);
        let (heads, dout) = (self.heads, self.out_per_head);
        let edges = nb.message_edges();
        let logits = Array2::from_shape_fn((edges.len(), heads), |(e, k)| {
            let (src, dst) = edges[e];
            (0..dout)
                .map(|t| {
                    let c = k * dout + t;
                    self.a[[k, t]] * leaky(x_dst[[dst, c]] + x_src[[src, c]])
                })
                .sum()
        });
        Ok((logits, x_src.clone(), Gatv2Tape { x_dst, x_src }))
    }

    pub(crate) fn backward(
        &self,
        nb: &Neighborhood,
        h: &Array2<f64>,
        tape: &Gatv2Tape,
        g_logits: &Array2<f64>,
        g_values: &Array2<f64>,
    ) -> (Vec<Vec<f64>>, Array2<f64>) {
        let (heads, dout) = (self.heads, self.out_per_head);
        let mut g_xdst = Array2::<f64>::zeros(tape.x_dst.dim());
        let mut g_xsrc = g_values.clone();
        let mut g_a = Array2::<f64>::zeros(self.a.dim());
        for (e, (src, dst)) in nb.message_edges().into_iter().enumerate() {
            for k in 0..heads {
                let g = g_logits[[e, k]];
                if g == 0.0 {
                    continue;
                }
                for t in 0..dout {
                    let c = k * dout + t;
                    let u = tape.x_dst[[dst, c]] + tape.x_src[[src, c]];
                    g_a[[k, t]] += g * leaky(u);
                    let gu = g * self.a[[k, t]] * leaky_grad(u);
                    g_xdst[[dst, c]] += gu;
                    g_xsrc[[src, c]] += gu;
                }
            }
        }
        let g_wdst = h.t().dot(&g_xdst);
        let g_wsrc = h.t().dot(&g_xsrc);
        let g_h = g_xdst.dot(&self.w_dst.t()) + g_xsrc.dot(&self.w_src.t());
        (vec![into_vec(g_wdst), into_vec(g_wsrc), into_vec(g_a)], g_h)
    }

    pub(crate) fn params(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("W_dst", self.w_dst.as_slice().expect("standard layout")),
            ("W_src", self.w_src.as_slice().expect("standard layout")),
            ("a", self.a.as_slice().expect("standard layout")),
        ]
    }

    pub(crate) fn params_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("W_dst", self.w_dst.as_slice_mut().expect("standard layout")),
            ("W_src", self.w_src.as_slice_mut().expect("standard layout")),
            ("a", self.a.as_slice_mut().expect("standard layout")),
        ]
    }
}
