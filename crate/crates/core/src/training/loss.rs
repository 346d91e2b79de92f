//! Task losses with their gradients. Every loss is a mean over the selected
//! rows (or node pairs), and gradients are zero outside them.

use ndarray::Array2;

use crate::error::{QgatError, Result};

fn check_rows(n: usize, rows: &[usize]) -> Result<()> {
    if rows.is_empty() {
        return Err(QgatError::EmptySplit("loss over zero rows".into()));
    }
    if let Some(&r) = rows.iter().find(|&&r| r >= n) {
        return Err(QgatError::Index {
            what: "node",
            index: r,
            size: n,
        });
    }
    Ok(())
}

/// Mean softmax cross-entropy of `logits` against class indices `y`.
pub fn softmax_cross_entropy(
    logits: &Array2<f64>,
    y: &[usize],
    rows: &[usize],
) -> Result<(f64, Array2<f64>)> {
    let (n, c) = logits.dim();
    check_rows(n, rows)?;
    if y.len() != n {
        return Err(QgatError::Dimension(format!(
            "{} labels for {n} rows",
            y.len()
        )));
    }
    let scale = 1.0 / rows.len() as f64;
    let mut grad = Array2::zeros((n, c));
    let mut total = 0.0;
    for &r in rows {
        let label = y[r];
        if label >= c {
            return Err(QgatError::Input(format!(
                "label {label} of node {r} is out of range for {c} classes"
            )));
        }
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + sum.ln();
        total += log_z - row[label];
        for k in 0..c {
            let p = (row[k] - log_z).exp();
            grad[[r, k]] = scale * (p - if k == label { 1.0 } else { 0.0 });
        }
    }
    Ok((total * scale, grad))
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of one logit against a 0/1 target, and its derivative.
#[inline]
pub fn bce_with_logit(x: f64, target: bool) -> (f64, f64) {
    let y = if target { 1.0 } else { 0.0 };
    (
        x.max(0.0) - x * y + (-x.abs()).exp().ln_1p(),
        sigmoid(x) - y,
    )
}

/// Mean per-label binary cross-entropy; `targets` is row-major `N × L`.
pub fn bce_with_logits(
    logits: &Array2<f64>,
    targets: &[bool],
    rows: &[usize],
) -> Result<(f64, Array2<f64>)> {
    let (n, l) = logits.dim();
    check_rows(n, rows)?;
    if targets.len() != n * l {
        return Err(QgatError::Dimension(format!(
            "{} targets for a {n}×{l} output",
            targets.len()
        )));
    }
    let scale = 1.0 / (rows.len() * l) as f64;
    let mut grad = Array2::zeros((n, l));
    let mut total = 0.0;
    for &r in rows {
        for k in 0..l {
            let (loss, g) = bce_with_logit(logits[[r, k]], targets[r * l + k]);
            total += loss;
            grad[[r, k]] = scale * g;
        }
    }
    Ok((total * scale, grad))
}

/// Inner-product scores of node pairs.
pub fn link_scores(emb: &Array2<f64>, pairs: &[(usize, usize)]) -> Vec<f64> {
    pairs
        .iter()
        .map(|&(u, v)| emb.row(u).dot(&emb.row(v)))
        .collect()
}

/// Mean BCE over positive and negative pairs scored by inner product.
pub fn link_bce(
    emb: &Array2<f64>,
    pos: &[(usize, usize)],
    neg: &[(usize, usize)],
) -> Result<(f64, Array2<f64>)> {
    let total_pairs = pos.len() + neg.len();
    if total_pairs == 0 {
        return Err(QgatError::EmptySplit("link loss over zero pairs".into()));
    }
    let n = emb.nrows();
    if let Some(&(u, v)) = pos.iter().chain(neg).find(|&&(u, v)| u >= n || v >= n) {
        return Err(QgatError::Index {
            what: "node",
            index: u.max(v),
            size: n,
        });
    }
    let scale = 1.0 / total_pairs as f64;
    let mut grad = Array2::zeros(emb.dim());
    let mut total = 0.0;
    for (pairs, target) in [(pos, true), (neg, false)] {
        for &(u, v) in pairs {
            let s = emb.row(u).dot(&emb.row(v));
            let (loss, g) = bce_with_logit(s, target);
            total += loss;
            let g = g * scale;
            let (eu, ev) = (emb.row(u).to_owned(), emb.row(v).to_owned());
            grad.row_mut(u).scaled_add(g, &ev);
            grad.row_mut(v).scaled_add(g, &eu);
        }
    }
    Ok((total * scale, grad))
}
