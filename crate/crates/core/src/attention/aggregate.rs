//! Softmax over in-neighborhoods, attention dropout, weighted aggregation,
//! head merge and activation. Shared by every scorer.

use ndarray::{s, Array2};
use rand::{Rng, RngCore};

use super::{Activation, Merge};
use crate::graph::Neighborhood;

#[derive(Debug, Clone)]
pub(crate) struct AggregateTape {
    /// Softmax output, `E × h`.
    pub alpha: Array2<f64>,
    /// Per-entry dropout scale (0 or `1/(1-p)`), absent in eval mode.
    pub alpha_scale: Option<Array2<f64>>,
    /// Merged pre-activation, `N × width`.
    pub pre_activation: Array2<f64>,
}

pub(crate) struct AggregateSpec {
    pub heads: usize,
    pub out_per_head: usize,
    pub merge: Merge,
    pub activation: Activation,
    pub dropout: f64,
}

/// Numerically stable softmax of `logits` over each node's incoming edges, per head.
pub fn neighborhood_softmax(nb: &Neighborhood, logits: &Array2<f64>) -> Array2<f64> {
    let heads = logits.ncols();
    let mut alpha = Array2::zeros(logits.dim());
    for node in 0..nb.n_nodes() {
        let range = nb.edge_range(node);
        if range.is_empty() {
            continue;
        }
        for k in 0..heads {
            let col = logits.slice(s![range.clone(), k]);
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut denom = 0.0;
            for (e, &v) in range.clone().zip(col.iter()) {
                let w = (v - max).exp();
                alpha[[e, k]] = w;
                denom += w;
            }
            for e in range.clone() {
                alpha[[e, k]] /= denom;
            }
        }
    }
    alpha
}

pub(crate) fn dropout_scale(rng: &mut dyn RngCore, dim: (usize, usize), rate: f64) -> Array2<f64> {
    let keep = 1.0 / (1.0 - rate);
    Array2::from_shape_simple_fn(dim, || {
        if rng.random::<f64>() < rate {
            0.0
        } else {
            keep
        }
    })
}

pub(crate) fn aggregate_forward(
    nb: &Neighborhood,
    logits: &Array2<f64>,
    values: &Array2<f64>,
    spec: &AggregateSpec,
    rng: Option<&mut dyn RngCore>,
) -> (Array2<f64>, AggregateTape) {
    let (h, dout) = (spec.heads, spec.out_per_head);
    let alpha = neighborhood_softmax(nb, logits);
    let alpha_scale = match rng {
        Some(rng) if spec.dropout > 0.0 => Some(dropout_scale(rng, alpha.dim(), spec.dropout)),
        _ => None,
    };
    let weights = match &alpha_scale {
        Some(scale) => &alpha * scale,
        None => alpha.clone(),
    };

    let n = nb.n_nodes();
    let width = spec.merge.width(h, dout);
    let mut pre = Array2::zeros((n, width));
    for node in 0..n {
        for (e, &src) in nb.edge_range(node).zip(nb.neighbors(node)) {
            let v = values.row(src);
            for k in 0..h {
                let w = weights[[e, k]];
                match spec.merge {
                    Merge::Concat => {
                        for t in 0..dout {
                            pre[[node, k * dout + t]] += w * v[k * dout + t];
                        }
                    }
                    Merge::Mean => {
                        for t in 0..dout {
                            pre[[node, t]] += w * v[k * dout + t];
                        }
                    }
                }
            }
        }
    }
    if spec.merge == Merge::Mean {
        pre /= h as f64;
    }
    let out = pre.mapv(|x| spec.activation.apply(x));
    (
        out,
        AggregateTape {
            alpha,
            alpha_scale,
            pre_activation: pre,
        },
    )
}

/// Returns `(∂L/∂logits, ∂L/∂values)` given `∂L/∂output`.
pub(crate) fn aggregate_backward(
    nb: &Neighborhood,
    values: &Array2<f64>,
    tape: &AggregateTape,
    spec: &AggregateSpec,
    upstream: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>) {
    let (h, dout) = (spec.heads, spec.out_per_head);
    let mut g_pre = upstream.clone();
    g_pre.zip_mut_with(&tape.pre_activation, |g, &x| {
        *g *= spec.activation.derivative(x)
    });
    if spec.merge == Merge::Mean {
        g_pre /= h as f64;
    }
    // ∂L/∂(head output) for node i, head k, coordinate t
    let head_grad = |node: usize, k: usize, t: usize| match spec.merge {
        Merge::Concat => g_pre[[node, k * dout + t]],
        Merge::Mean => g_pre[[node, t]],
    };

    let e_total = tape.alpha.nrows();
    let mut g_weights = Array2::<f64>::zeros((e_total, h));
    let mut g_values = Array2::<f64>::zeros(values.dim());
    for node in 0..nb.n_nodes() {
        for (e, &src) in nb.edge_range(node).zip(nb.neighbors(node)) {
            for k in 0..h {
                let w = match &tape.alpha_scale {
                    Some(scale) => tape.alpha[[e, k]] * scale[[e, k]],
                    None => tape.alpha[[e, k]],
                };
                let mut acc = 0.0;
                for t in 0..dout {
                    let g = head_grad(node, k, t);
                    acc += g * values[[src, k * dout + t]];
                    g_values[[src, k * dout + t]] += w * g;
                }
                g_weights[[e, k]] = acc;
            }
        }
    }
    if let Some(scale) = &tape.alpha_scale {
        g_weights *= scale;
    }

    let mut g_logits = Array2::zeros((e_total, h));
    for node in 0..nb.n_nodes() {
        let range = nb.edge_range(node);
        for k in 0..h {
            let dot: f64 = range
                .clone()
                .map(|e| tape.alpha[[e, k]] * g_weights[[e, k]])
                .sum();
            for e in range.clone() {
                g_logits[[e, k]] = tape.alpha[[e, k]] * (g_weights[[e, k]] - dot);
            }
        }
    }
    (g_logits, g_values)
}
