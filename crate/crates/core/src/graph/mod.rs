//! Graph data model, dataset loaders and generators, and noise protocols.

mod io;
mod linksplit;
pub(crate) mod noise;
mod synth;

use std::collections::HashSet;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QgatError, Result};

pub use io::{load_graph, save_graph_csv, save_graph_json, GraphSource};
pub use linksplit::{split_link_prediction, LabeledEdges, LinkSplit};
pub use noise::{
    add_feature_noise, add_structural_noise, FEATURE_NOISE_GRID, STRUCTURAL_NOISE_GRID,
};
pub use synth::{synth_multilabel_sbm, synth_sbm, MultiLabelSbmParams, SbmParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Labels {
    None,
    Classes {
        n_classes: usize,
        y: Vec<usize>,
    },
    /// Row-major `n_nodes × n_labels` bit matrix.
    MultiLabel {
        n_labels: usize,
        y: Vec<bool>,
    },
}

impl Labels {
    fn validate(&self, n_nodes: usize) -> Result<()> {
        match self {
            Labels::None => Ok(()),
            Labels::Classes { n_classes, y } => {
                if y.len() != n_nodes {
                    return Err(QgatError::Dimension(format!(
                        "{} class labels for {n_nodes} nodes",
                        y.len()
                    )));
                }
                if let Some((i, c)) = y.iter().enumerate().find(|(_, c)| **c >= *n_classes) {
                    return Err(QgatError::Input(format!(
                        "node {i} has label {c}, but there are only {n_classes} classes"
                    )));
                }
                Ok(())
            }
            Labels::MultiLabel { n_labels, y } => {
                if *n_labels == 0 || y.len() != n_nodes * n_labels {
                    return Err(QgatError::Dimension(format!(
                        "multi-label matrix has {} entries, expected {n_nodes}×{n_labels}",
                        y.len()
                    )));
                }
                Ok(())
            }
        }
    }

    fn permute(&self, perm: &[usize]) -> Labels {
        match self {
            Labels::None => Labels::None,
            Labels::Classes { n_classes, y } => {
                let mut out = vec![0; y.len()];
                for (old, &new) in perm.iter().enumerate() {
                    out[new] = y[old];
                }
                Labels::Classes {
                    n_classes: *n_classes,
                    y: out,
                }
            }
            Labels::MultiLabel { n_labels, y } => {
                let mut out = vec![false; y.len()];
                for (old, &new) in perm.iter().enumerate() {
                    out[new * n_labels..(new + 1) * n_labels]
                        .copy_from_slice(&y[old * n_labels..(old + 1) * n_labels]);
                }
                Labels::MultiLabel {
                    n_labels: *n_labels,
                    y: out,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMasks {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

impl SplitMasks {
    pub fn empty(n: usize) -> Self {
        Self {
            train: vec![false; n],
            val: vec![false; n],
            test: vec![false; n],
        }
    }

    pub fn all_train(n: usize) -> Self {
        Self {
            train: vec![true; n],
            val: vec![false; n],
            test: vec![false; n],
        }
    }

    /// Random `frac_train / frac_val / rest` node split.
    pub fn random(n: usize, frac_train: f64, frac_val: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(n, frac_train, frac_val, &mut rng)
    }

    pub(crate) fn random_with<R: Rng + ?Sized>(
        n: usize,
        frac_train: f64,
        frac_val: f64,
        rng: &mut R,
    ) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let n_train = (frac_train * n as f64).floor() as usize;
        let n_val = (frac_val * n as f64).floor() as usize;
        let mut masks = Self::empty(n);
        for (rank, &node) in order.iter().enumerate() {
            if rank < n_train {
                masks.train[node] = true;
            } else if rank < n_train + n_val {
                masks.val[node] = true;
            } else {
                masks.test[node] = true;
            }
        }
        masks
    }

    pub fn is_empty(&self) -> bool {
        !self
            .train
            .iter()
            .chain(&self.val)
            .chain(&self.test)
            .any(|b| *b)
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.train.len() != n || self.val.len() != n || self.test.len() != n {
            return Err(QgatError::Dimension(format!(
                "split masks must have length {n}"
            )));
        }
        for i in 0..n {
            let hits = [self.train[i], self.val[i], self.test[i]]
                .iter()
                .filter(|b| **b)
                .count();
            if hits > 1 {
                return Err(QgatError::Input(format!(
                    "node {i} is in more than one split"
                )));
            }
        }
        Ok(())
    }

    fn permute(&self, perm: &[usize]) -> Self {
        let remap = |m: &Vec<bool>| {
            let mut out = vec![false; m.len()];
            for (old, &new) in perm.iter().enumerate() {
                out[new] = m[old];
            }
            out
        };
        Self {
            train: remap(&self.train),
            val: remap(&self.val),
            test: remap(&self.test),
        }
    }
}

/// Node-attributed graph with a directed edge list.
///
/// Edges are canonical: no self-loops (those are added when building a
/// [`Neighborhood`]) and no repeated `(src, dst)` pairs. Edge order is kept
/// as given, which keeps aggregation order stable under node relabeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    features: Array2<f64>,
    edges: Vec<(usize, usize)>,
    labels: Labels,
    masks: SplitMasks,
}

impl Graph {
    pub fn new(
        features: Array2<f64>,
        edges: Vec<(usize, usize)>,
        labels: Labels,
        masks: SplitMasks,
    ) -> Result<Self> {
        let n = features.nrows();
        if let Some((k, &(s, d))) = edges
            .iter()
            .enumerate()
            .find(|(_, (s, d))| *s >= n || *d >= n)
        {
            return Err(QgatError::Input(format!(
                "edge {k} ({s} -> {d}) references a node outside 0..{n}"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(QgatError::Input("non-finite node feature".into()));
        }
        labels.validate(n)?;
        masks.validate(n)?;
        Ok(Self {
            features,
            edges: canonicalize(edges),
            labels,
            masks,
        })
    }

    /// Builds a graph from unordered pairs, adding both directions.
    pub fn from_undirected(
        features: Array2<f64>,
        pairs: &[(usize, usize)],
        labels: Labels,
        masks: SplitMasks,
    ) -> Result<Self> {
        let edges = pairs.iter().flat_map(|&(u, v)| [(u, v), (v, u)]).collect();
        Self::new(features, edges, labels, masks)
    }

    pub fn n_nodes(&self) -> usize {
        self.features.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn masks(&self) -> &SplitMasks {
        &self.masks
    }

    pub fn with_features(&self, features: Array2<f64>) -> Result<Self> {
        if features.dim() != self.features.dim() {
            return Err(QgatError::Dimension(format!(
                "replacement features are {:?}, graph has {:?}",
                features.dim(),
                self.features.dim()
            )));
        }
        Ok(Self {
            features,
            ..self.clone()
        })
    }

    pub fn with_edges(&self, edges: Vec<(usize, usize)>) -> Result<Self> {
        Self::new(
            self.features.clone(),
            edges,
            self.labels.clone(),
            self.masks.clone(),
        )
    }

    pub fn with_masks(&self, masks: SplitMasks) -> Result<Self> {
        masks.validate(self.n_nodes())?;
        Ok(Self {
            masks,
            ..self.clone()
        })
    }

    /// Unordered `{u, v}` pairs present in either direction, as `(min, max)`.
    pub fn undirected_pairs(&self) -> Vec<(usize, usize)> {
        let mut seen = HashSet::new();
        self.edges
            .iter()
            .map(|&(s, d)| (s.min(d), s.max(d)))
            .filter(|p| seen.insert(*p))
            .collect()
    }

    /// Relabels nodes: node `i` becomes `perm[i]`. Edge order is preserved.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(QgatError::Input("not a permutation of the node set".into()));
        }
        let mut features = Array2::zeros(self.features.dim());
        for (old, &new) in perm.iter().enumerate() {
            features.row_mut(new).assign(&self.features.row(old));
        }
        Ok(Self {
            features,
            edges: self
                .edges
                .iter()
                .map(|&(s, d)| (perm[s], perm[d]))
                .collect(),
            labels: self.labels.permute(perm),
            masks: self.masks.permute(perm),
        })
    }

    /// Disjoint union; graph `k`'s nodes are shifted by the returned offset `k`.
    pub fn disjoint_union(graphs: &[&Graph]) -> Result<(Graph, Vec<usize>)> {
        let first = graphs
            .first()
            .ok_or_else(|| QgatError::EmptySplit("no graphs to batch".into()))?;
        let dim = first.feature_dim();
        let mut offsets = Vec::with_capacity(graphs.len());
        let mut total = 0;
        for g in graphs {
            if g.feature_dim() != dim {
                return Err(QgatError::Dimension(format!(
                    "cannot batch graphs with feature dims {dim} and {}",
                    g.feature_dim()
                )));
            }
            offsets.push(total);
            total += g.n_nodes();
        }
        let views: Vec<_> = graphs.iter().map(|g| g.features.view()).collect();
        let features = ndarray::concatenate(Axis(0), &views)
            .map_err(|e| QgatError::Dimension(e.to_string()))?;
        let edges = graphs
            .iter()
            .zip(&offsets)
            .flat_map(|(g, off)| g.edges.iter().map(move |&(s, d)| (s + off, d + off)))
            .collect();
        let labels = match &first.labels {
            Labels::None => Labels::None,
            Labels::Classes { n_classes, .. } => {
                let mut y = Vec::with_capacity(total);
                for g in graphs {
                    match &g.labels {
                        Labels::Classes { y: gy, .. } => y.extend_from_slice(gy),
                        _ => return Err(QgatError::Input("mixed label kinds in batch".into())),
                    }
                }
                let n_classes = graphs
                    .iter()
                    .filter_map(|g| match &g.labels {
                        Labels::Classes { n_classes, .. } => Some(*n_classes),
                        _ => None,
                    })
                    .max()
                    .unwrap_or(*n_classes);
                Labels::Classes { n_classes, y }
            }
            Labels::MultiLabel { n_labels, .. } => {
                let mut y = Vec::with_capacity(total * n_labels);
                for g in graphs {
                    match &g.labels {
                        Labels::MultiLabel { n_labels: k, y: gy } if k == n_labels => {
                            y.extend_from_slice(gy)
                        }
                        _ => return Err(QgatError::Input("mixed label kinds in batch".into())),
                    }
                }
                Labels::MultiLabel {
                    n_labels: *n_labels,
                    y,
                }
            }
        };
        let cat = |f: fn(&SplitMasks) -> &Vec<bool>| -> Vec<bool> {
            graphs
                .iter()
                .flat_map(|g| f(&g.masks).iter().copied())
                .collect()
        };
        let masks = SplitMasks {
            train: cat(|m| &m.train),
            val: cat(|m| &m.val),
            test: cat(|m| &m.test),
        };
        Ok((Graph::new(features, edges, labels, masks)?, offsets))
    }
}

fn canonicalize(edges: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    let mut seen = HashSet::with_capacity(edges.len());
    edges
        .into_iter()
        .filter(|&(s, d)| s != d && seen.insert((s, d)))
        .collect()
}

/// In-neighbor lists in CSR form, grouped by destination node.
///
/// With self-loops enabled each node's list starts with itself, followed by
/// its in-neighbors in edge-list order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    n_nodes: usize,
    offsets: Vec<usize>,
    sources: Vec<usize>,
    self_loops: bool,
}

impl Neighborhood {
    pub fn build(graph: &Graph, self_loops: bool) -> Self {
        Self::from_edges(graph.n_nodes(), graph.edges(), self_loops)
    }

    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)], self_loops: bool) -> Self {
        let mut counts = vec![usize::from(self_loops); n_nodes];
        for &(_, d) in edges {
            counts[d] += 1;
        }
        let mut offsets = Vec::with_capacity(n_nodes + 1);
        offsets.push(0);
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let mut cursor: Vec<usize> = offsets[..n_nodes].to_vec();
        let mut sources = vec![0; *offsets.last().unwrap()];
        if self_loops {
            for (i, c) in cursor.iter_mut().enumerate() {
                sources[*c] = i;
                *c += 1;
            }
        }
        for &(s, d) in edges {
            sources[cursor[d]] = s;
            cursor[d] += 1;
        }
        Self {
            n_nodes,
            offsets,
            sources,
            self_loops,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Total number of message edges, self-loops included.
    pub fn n_edges(&self) -> usize {
        self.sources.len()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.sources[self.offsets[node]..self.offsets[node + 1]]
    }

    /// Edge-index range of `node`'s incoming edges.
    pub fn edge_range(&self, node: usize) -> std::ops::Range<usize> {
        self.offsets[node]..self.offsets[node + 1]
    }

    /// `(src, dst)` for every message edge, in edge-index order.
    pub fn message_edges(&self) -> Vec<(usize, usize)> {
        (0..self.n_nodes)
            .flat_map(|d| self.neighbors(d).iter().map(move |&s| (s, d)))
            .collect()
    }

    /// Edge list without the added self-loops.
    pub fn to_edges(&self) -> Vec<(usize, usize)> {
        (0..self.n_nodes)
            .flat_map(|d| {
                let skip = usize::from(self.self_loops);
                self.neighbors(d)[skip..].iter().map(move |&s| (s, d))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn path3() -> Graph {
        Graph::from_undirected(
            array![[1.0], [2.0], [3.0]],
            &[(0, 1), (1, 2)],
            Labels::None,
            SplitMasks::empty(3),
        )
        .unwrap()
    }

    #[test]
    fn undirected_expansion_and_canonicalization() {
        let g = path3();
        assert_eq!(g.edges(), [(0, 1), (1, 0), (1, 2), (2, 1)]);
        let g = Graph::new(
            array![[0.0], [0.0]],
            vec![(0, 1), (0, 1), (1, 1), (1, 0)],
            Labels::None,
            SplitMasks::empty(2),
        )
        .unwrap();
        assert_eq!(g.edges(), [(0, 1), (1, 0)]);
    }

    #[test]
    fn dangling_edge_rejected() {
        let err = Graph::new(
            array![[0.0], [0.0]],
            vec![(0, 2)],
            Labels::None,
            SplitMasks::empty(2),
        );
        assert!(matches!(err, Err(QgatError::Input(m)) if m.contains("edge 0")));
    }

    #[test]
    fn overlapping_masks_rejected() {
        let mut m = SplitMasks::empty(2);
        m.train[0] = true;
        m.test[0] = true;
        assert!(Graph::new(array![[0.0], [0.0]], vec![], Labels::None, m).is_err());
    }

    #[test]
    fn neighborhood_starts_with_self_and_round_trips() {
        let g = path3();
        let nb = Neighborhood::build(&g, true);
        assert_eq!(nb.neighbors(1), [1, 0, 2]);
        assert_eq!(nb.neighbors(0), [0, 1]);
        assert_eq!(nb.n_edges(), 4 + 3);
        let mut back = nb.to_edges();
        let mut orig = g.edges().to_vec();
        back.sort();
        orig.sort();
        assert_eq!(back, orig);
    }

    #[test]
    fn isolated_nodes_only_see_themselves() {
        let g = Graph::new(
            Array2::zeros((3, 2)),
            vec![],
            Labels::None,
            SplitMasks::empty(3),
        )
        .unwrap();
        let nb = Neighborhood::build(&g, true);
        for i in 0..3 {
            assert_eq!(nb.neighbors(i), [i]);
        }
    }

    #[test]
    fn random_split_is_disjoint_and_sized() {
        let m = SplitMasks::random(60, 0.6, 0.2, 5);
        let count = |v: &Vec<bool>| v.iter().filter(|b| **b).count();
        assert_eq!(
            (count(&m.train), count(&m.val), count(&m.test)),
            (36, 12, 12)
        );
        m.validate(60).unwrap();
    }

    #[test]
    fn disjoint_union_offsets() {
        let a = path3();
        let b = path3();
        let (u, offsets) = Graph::disjoint_union(&[&a, &b]).unwrap();
        assert_eq!(offsets, [0, 3]);
        assert_eq!(u.n_nodes(), 6);
        assert!(u.edges().iter().skip(4).all(|&(s, d)| s >= 3 && d >= 3));
    }

    #[test]
    fn permute_relabels_everything() {
        let g = path3();
        let p = g.permute(&[2, 0, 1]).unwrap();
        assert_eq!(p.features()[[2, 0]], 1.0);
        assert_eq!(p.edges()[0], (2, 0));
        assert!(g.permute(&[0, 0, 1]).is_err());
    }
}
