//! Evaluation metrics. All return values in `[0, 1]`.

use std::cmp::Ordering;

use ndarray::Array2;

fn argmax(row: ndarray::ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (k, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = k;
        }
    }
    best
}

/// Fraction of `rows` whose arg-max logit (first on ties) equals the label.
pub fn accuracy(logits: &Array2<f64>, y: &[usize], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return f64::NAN;
    }
    let correct = rows
        .iter()
        .filter(|&&r| argmax(logits.row(r)) == y[r])
        .count();
    correct as f64 / rows.len() as f64
}

/// Micro-averaged F1 with a positive prediction wherever the logit is > 0.
/// With no positive labels and no positive predictions the score is 1.
pub fn micro_f1(logits: &Array2<f64>, targets: &[bool], rows: &[usize]) -> f64 {
    let l = logits.ncols();
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for &r in rows {
        for k in 0..l {
            match (logits[[r, k]] > 0.0, targets[r * l + k]) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                (false, false) => {}
            }
        }
    }
    let denom = 2 * tp + fp + fneg;
    if denom == 0 {
        1.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Area under the ROC curve via the rank-sum statistic with averaged ties.
/// `None` when only one class is present.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&b| b).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their average
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += avg * order[i..=j].iter().filter(|&&o| labels[o]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

/// Fraction of positives scored strictly above the `k`-th highest negative.
/// With fewer than `k` negatives every positive counts as a hit.
pub fn hits_at_k(pos: &[f64], neg: &[f64], k: usize) -> f64 {
    if pos.is_empty() {
        return f64::NAN;
    }
    if k == 0 || neg.len() < k {
        return 1.0;
    }
    let mut sorted = neg.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let threshold = sorted[k - 1];
    pos.iter().filter(|&&p| p > threshold).count() as f64 / pos.len() as f64
}

/// Mean reciprocal rank of each positive against the shared negative set;
/// ties with negatives count half.
pub fn mrr(pos: &[f64], neg: &[f64]) -> f64 {
    if pos.is_empty() {
        return f64::NAN;
    }
    let mut sorted = neg.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let total: f64 = pos
        .iter()
        .map(|&p| {
            let below = sorted.partition_point(|&n| n < p);
            let at_or_below = sorted.partition_point(|&n| n <= p);
            let above = sorted.len() - at_or_below;
            let ties = at_or_below - below;
            1.0 / (1.0 + above as f64 + 0.5 * ties as f64)
        })
        .sum();
    total / pos.len() as f64
}
