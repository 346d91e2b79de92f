use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::noise::sample_non_edges;
use super::Graph;
use crate::error::{QgatError, Result};

/// Positive and negative node pairs for one split, as `(min, max)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct LabeledEdges {
    pub pos: Vec<(usize, usize)>,
    pub neg: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSplit {
    /// Message-passing graph with val/test positives removed.
    pub train_graph: Graph,
    pub train: LabeledEdges,
    pub val: LabeledEdges,
    pub test: LabeledEdges,
}

/// Holds out `round(frac · E)` undirected edges for val and test and samples
/// `neg_ratio` negatives per positive from pairs that are edges in no split.
pub fn split_link_prediction(
    g: &Graph,
    frac_val: f64,
    frac_test: f64,
    neg_ratio: usize,
    seed: u64,
) -> Result<LinkSplit> {
    if !(0.0..1.0).contains(&frac_val)
        || !(0.0..1.0).contains(&frac_test)
        || frac_val + frac_test >= 1.0
    {
        return Err(QgatError::Input(format!(
            "split fractions must be >= 0 and sum below 1, got val={frac_val}, test={frac_test}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all = g.undirected_pairs();
    let e = all.len();
    let n_val = (frac_val * e as f64).round() as usize;
    let n_test = (frac_test * e as f64).round() as usize;
    if (frac_val > 0.0 && n_val == 0)
        || (frac_test > 0.0 && n_test == 0)
        || n_val + n_test >= e.max(1)
    {
        return Err(QgatError::Infeasible(format!(
            "{e} edges are too few to hold out val={frac_val}, test={frac_test}"
        )));
    }
    let mut shuffled = all.clone();
    shuffled.shuffle(&mut rng);
    let test_pos: Vec<_> = shuffled[..n_test].to_vec();
    let val_pos: Vec<_> = shuffled[n_test..n_test + n_val].to_vec();
    let held: HashSet<(usize, usize)> = shuffled[..n_test + n_val].iter().copied().collect();
    let train_pos: Vec<_> = all.iter().copied().filter(|p| !held.contains(p)).collect();

    let train_graph = if held.is_empty() {
        g.clone()
    } else {
        let kept = g
            .edges()
            .iter()
            .copied()
            .filter(|&(s, d)| !held.contains(&(s.min(d), s.max(d))))
            .collect();
        g.with_edges(kept)?
    };

    let existing: HashSet<(usize, usize)> = all.into_iter().collect();
    let counts = [train_pos.len(), val_pos.len(), test_pos.len()].map(|c| c * neg_ratio);
    let negatives = sample_non_edges(g.n_nodes(), &existing, counts.iter().sum(), &mut rng)?;
    let (train_neg, rest) = negatives.split_at(counts[0]);
    let (val_neg, test_neg) = rest.split_at(counts[1]);

    Ok(LinkSplit {
        train_graph,
        train: LabeledEdges {
            pos: train_pos,
            neg: train_neg.to_vec(),
        },
        val: LabeledEdges {
            pos: val_pos,
            neg: val_neg.to_vec(),
        },
        test: LabeledEdges {
            pos: test_pos,
            neg: test_neg.to_vec(),
        },
    })
}
