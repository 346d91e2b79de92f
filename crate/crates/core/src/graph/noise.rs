//! Feature and structural perturbations.
//!
//! Both protocols sample once per call from the given seed; callers apply
//! the perturbed graph for training and evaluation alike.

use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Graph;
use crate::error::{QgatError, Result};

pub const FEATURE_NOISE_GRID: [f64; 5] = [0.0, 0.01, 0.05, 0.1, 0.2];
pub const STRUCTURAL_NOISE_GRID: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];

/// `x ← x + ε·N(0, I)`, fresh per node and dimension.
pub fn add_feature_noise(g: &Graph, epsilon: f64, seed: u64) -> Result<Graph> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(QgatError::Input(format!(
            "noise level must be finite and >= 0, got {epsilon}"
        )));
    }
    if epsilon == 0.0 {
        return Ok(g.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = g.features().clone();
    for v in features.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v += epsilon * z;
    }
    g.with_features(features)
}

/// Adds `⌊η·E⌋` new undirected edges between distinct, unconnected nodes,
/// where `E` counts undirected edges.
pub fn add_structural_noise(g: &Graph, eta: f64, seed: u64) -> Result<Graph> {
    if !eta.is_finite() || eta < 0.0 {
        return Err(QgatError::Input(format!(
            "noise ratio must be finite and >= 0, got {eta}"
        )));
    }
    let pairs = g.undirected_pairs();
    let k = (eta * pairs.len() as f64).floor() as usize;
    if k == 0 {
        return Ok(g.clone());
    }
    let existing: HashSet<(usize, usize)> = pairs.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let added = sample_non_edges(g.n_nodes(), &existing, k, &mut rng)?;
    let mut edges = g.edges().to_vec();
    edges.extend(added.iter().flat_map(|&(u, v)| [(u, v), (v, u)]));
    g.with_edges(edges)
}

/// Draws `k` distinct unordered pairs `(u, v)`, `u < v`, uniformly from the
/// pairs not in `existing` (which must hold `(min, max)` pairs).
pub(crate) fn sample_non_edges<R: Rng + ?Sized>(
    n: usize,
    existing: &HashSet<(usize, usize)>,
    k: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let total = n * n.saturating_sub(1) / 2;
    let available = total - existing.len().min(total);
    if k > available {
        return Err(QgatError::Infeasible(format!(
            "requested {k} new edges but only {available} node pairs are unconnected"
        )));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    if 2 * k > available {
        // dense regime: enumerate candidates and pick a uniform subset
        let candidates: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|p| !existing.contains(p))
            .collect();
        let mut picked: Vec<usize> = index::sample(rng, candidates.len(), k).into_vec();
        picked.sort_unstable();
        return Ok(picked.into_iter().map(|i| candidates[i]).collect());
    }
    let mut chosen = HashSet::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v {
            continue;
        }
        let p = (u.min(v), u.max(v));
        if !existing.contains(&p) && chosen.insert(p) {
            out.push(p);
        }
    }
    Ok(out)
}
