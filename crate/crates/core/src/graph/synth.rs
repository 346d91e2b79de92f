use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Graph, Labels, SplitMasks};
use crate::error::{QgatError, Result};

/// Stochastic block model with Gaussian class-mean features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SbmParams {
    pub n_per_class: usize,
    pub n_classes: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    /// Euclidean distance between any two class means.
    pub class_sep: f64,
}

impl Default for SbmParams {
    fn default() -> Self {
        Self {
            n_per_class: 30,
            n_classes: 2,
            p_in: 0.3,
            p_out: 0.02,
            feature_dim: 8,
            class_sep: 1.0,
        }
    }
}

fn check_probabilities(p_in: f64, p_out: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) || p_out > p_in {
        return Err(QgatError::Input(format!(
            "need 0 <= p_out <= p_in <= 1, got p_in={p_in}, p_out={p_out}"
        )));
    }
    Ok(())
}

fn sbm_pairs<R: Rng + ?Sized>(
    block: &[usize],
    p_in: f64,
    p_out: f64,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    let n = block.len();
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if block[u] == block[v] { p_in } else { p_out };
            // always draw so the stream does not depend on p
            let draw: f64 = rng.random();
            if draw < p {
                pairs.push((u, v));
            }
        }
    }
    pairs
}

/// Nodes are laid out class by class; class `c`'s mean sits at
/// `class_sep/√2 · e_c`, so every pair of means is `class_sep` apart.
/// Features add unit-variance Gaussian noise. Split is 60/20/20.
pub fn synth_sbm(params: &SbmParams, seed: u64) -> Result<Graph> {
    check_probabilities(params.p_in, params.p_out)?;
    if params.n_classes == 0 || params.n_per_class == 0 {
        return Err(QgatError::Config(
            "SBM needs at least one class and one node per class".into(),
        ));
    }
    if params.feature_dim < params.n_classes {
        return Err(QgatError::Config(format!(
            "feature_dim {} must be at least n_classes {}",
            params.feature_dim, params.n_classes
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.n_per_class * params.n_classes;
    let y: Vec<usize> = (0..n).map(|i| i / params.n_per_class).collect();
    let pairs = sbm_pairs(&y, params.p_in, params.p_out, &mut rng);

    let scale = params.class_sep / std::f64::consts::SQRT_2;
    let mut features = Array2::<f64>::zeros((n, params.feature_dim));
    for (i, mut row) in features.rows_mut().into_iter().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            let noise: f64 = rng.sample(StandardNormal);
            *v = noise + if k == y[i] { scale } else { 0.0 };
        }
    }
    let masks = SplitMasks::random_with(n, 0.6, 0.2, &mut rng);
    Graph::from_undirected(
        features,
        &pairs,
        Labels::Classes {
            n_classes: params.n_classes,
            y,
        },
        masks,
    )
}

/// Multi-label SBM: every node draws each label bit with probability ½.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiLabelSbmParams {
    pub n_nodes: usize,
    pub n_labels: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    /// Distance between the "on" and "off" means along each label's axis.
    pub class_sep: f64,
}

impl Default for MultiLabelSbmParams {
    fn default() -> Self {
        Self {
            n_nodes: 48,
            n_labels: 2,
            p_in: 0.4,
            p_out: 0.02,
            feature_dim: 8,
            class_sep: 2.0,
        }
    }
}

/// Blocks are the distinct label patterns; label `c` shifts feature `c` by
/// `±class_sep/2`. All nodes land in the training mask; the collection
/// decides which graphs are held out.
pub fn synth_multilabel_sbm(params: &MultiLabelSbmParams, seed: u64) -> Result<Graph> {
    check_probabilities(params.p_in, params.p_out)?;
    if params.n_labels == 0 || params.n_labels > 16 || params.n_nodes == 0 {
        return Err(QgatError::Config(
            "multi-label SBM needs 1..=16 labels and at least one node".into(),
        ));
    }
    if params.feature_dim < params.n_labels {
        return Err(QgatError::Config(format!(
            "feature_dim {} must be at least n_labels {}",
            params.feature_dim, params.n_labels
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, k) = (params.n_nodes, params.n_labels);
    let mut y = vec![false; n * k];
    let mut block = vec![0usize; n];
    for i in 0..n {
        for c in 0..k {
            let on = rng.random::<f64>() < 0.5;
            y[i * k + c] = on;
            block[i] |= usize::from(on) << c;
        }
    }
    let pairs = sbm_pairs(&block, params.p_in, params.p_out, &mut rng);
    let half = params.class_sep / 2.0;
    let mut features = Array2::<f64>::zeros((n, params.feature_dim));
    for (i, mut row) in features.rows_mut().into_iter().enumerate() {
        for (f, v) in row.iter_mut().enumerate() {
            let noise: f64 = rng.sample(StandardNormal);
            let shift = if f < k {
                if y[i * k + f] {
                    half
                } else {
                    -half
                }
            } else {
                0.0
            };
            *v = noise + shift;
        }
    }
    Graph::from_undirected(
        features,
        &pairs,
        Labels::MultiLabel { n_labels: k, y },
        SplitMasks::all_train(n),
    )
}
