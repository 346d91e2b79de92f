//! Inductive evaluation over collections of disjoint graphs: models train on
//! the train-tagged graphs and are scored on graphs never seen in training.
//!
//! Graphs in a split are batched as one disjoint union. Every read of a
//! member graph goes through a counted accessor, so tests can check that
//! no val/test graph feeds a training step.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QgatError, Result};
use crate::graph::{
    load_graph, save_graph_json, synth_multilabel_sbm, synth_sbm, Graph, GraphSource,
    MultiLabelSbmParams, Neighborhood, SbmParams,
};
use crate::training::{
    fit, GnnModel, ModelConfig, Objective, SplitEval, Task, TrainConfig, TrainOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitTag {
    Train,
    Val,
    Test,
}

impl SplitTag {
    pub const ALL: [SplitTag; 3] = [SplitTag::Train, SplitTag::Val, SplitTag::Test];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Access {
    Training,
    Evaluation,
}

/// Disjoint graphs, each tagged with the split it belongs to.
#[derive(Debug)]
pub struct GraphCollection {
    graphs: Vec<Graph>,
    tags: Vec<SplitTag>,
    training_reads: Vec<AtomicUsize>,
    eval_reads: Vec<AtomicUsize>,
}

impl Clone for GraphCollection {
    /// Clones start with fresh counters.
    fn clone(&self) -> Self {
        Self::new(self.graphs.clone(), self.tags.clone()).expect("already validated")
    }
}

/// A split's graphs batched into one disjoint union.
#[derive(Debug, Clone)]
pub struct Batch {
    pub graph: Graph,
    pub nb: Neighborhood,
    /// First node index of each member graph.
    pub offsets: Vec<usize>,
    pub members: Vec<usize>,
}

impl GraphCollection {
    pub fn new(graphs: Vec<Graph>, tags: Vec<SplitTag>) -> Result<Self> {
        if graphs.len() != tags.len() {
            return Err(QgatError::Input(format!(
                "{} graphs but {} split tags",
                graphs.len(),
                tags.len()
            )));
        }
        if let Some(first) = graphs.first() {
            if let Some(g) = graphs
                .iter()
                .find(|g| g.feature_dim() != first.feature_dim())
            {
                return Err(QgatError::Dimension(format!(
                    "collection mixes feature dims {} and {}",
                    first.feature_dim(),
                    g.feature_dim()
                )));
            }
        }
        let n = graphs.len();
        Ok(Self {
            graphs,
            tags,
            training_reads: (0..n).map(|_| AtomicUsize::new(0)).collect(),
            eval_reads: (0..n).map(|_| AtomicUsize::new(0)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn tag(&self, i: usize) -> SplitTag {
        self.tags[i]
    }

    pub fn members(&self, split: SplitTag) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.tags[i] == split).collect()
    }

    /// Uncounted access, for inspection and serialization.
    pub fn graph(&self, i: usize) -> &Graph {
        &self.graphs[i]
    }

    /// Times graph `i` was read to compute a training gradient.
    pub fn training_reads(&self, i: usize) -> usize {
        self.training_reads[i].load(Ordering::Relaxed)
    }

    /// Times graph `i` was read for evaluation.
    pub fn eval_reads(&self, i: usize) -> usize {
        self.eval_reads[i].load(Ordering::Relaxed)
    }

    pub fn feature_dim(&self) -> Result<usize> {
        self.graphs
            .first()
            .map(Graph::feature_dim)
            .ok_or_else(|| QgatError::EmptySplit("collection has no graphs".into()))
    }

    fn fetch(&self, i: usize, access: Access) -> &Graph {
        let counter = match access {
            Access::Training => &self.training_reads[i],
            Access::Evaluation => &self.eval_reads[i],
        };
        counter.fetch_add(1, Ordering::Relaxed);
        &self.graphs[i]
    }

    fn batch(&self, split: SplitTag, access: Access) -> Result<Batch> {
        let members = self.members(split);
        if members.is_empty() {
            return Err(QgatError::EmptySplit(format!(
                "no {split:?} graphs in collection"
            )));
        }
        let graphs: Vec<&Graph> = members.iter().map(|&i| self.fetch(i, access)).collect();
        let (graph, offsets) = Graph::disjoint_union(&graphs)?;
        let nb = Neighborhood::build(&graph, true);
        Ok(Batch {
            graph,
            nb,
            offsets,
            members,
        })
    }

    /// Batches a split for evaluation.
    pub fn eval_batch(&self, split: SplitTag) -> Result<Batch> {
        self.batch(split, Access::Evaluation)
    }

    /// Writes every member as a JSON bundle next to a manifest.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| QgatError::io(dir, e))?;
        let mut entries = Vec::with_capacity(self.len());
        for (i, (g, tag)) in self.graphs.iter().zip(&self.tags).enumerate() {
            let name = PathBuf::from(format!("graph_{i:03}.json"));
            save_graph_json(g, &dir.join(&name))?;
            entries.push(ManifestEntry {
                split: *tag,
                source: GraphSource::JsonBundle { path: name },
            });
        }
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&Manifest { graphs: entries })
            .map_err(|e| QgatError::Input(e.to_string()))?;
        std::fs::write(&path, text).map_err(|e| QgatError::io(&path, e))?;
        Ok(path)
    }

    /// Loads a manifest; relative member paths resolve against its directory.
    pub fn load(manifest: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(manifest).map_err(|e| QgatError::io(manifest, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| QgatError::Parse {
            path: manifest.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        let base = manifest.parent().unwrap_or(Path::new("."));
        let mut graphs = Vec::with_capacity(m.graphs.len());
        let mut tags = Vec::with_capacity(m.graphs.len());
        for entry in m.graphs {
            let source = match entry.source {
                GraphSource::JsonBundle { path } => GraphSource::JsonBundle {
                    path: base.join(path),
                },
                GraphSource::EdgeListCsv { features, edges } => GraphSource::EdgeListCsv {
                    features: base.join(features),
                    edges: base.join(edges),
                },
            };
            graphs.push(load_graph(&source)?);
            tags.push(entry.split);
        }
        Self::new(graphs, tags)
    }
}

/// Collection manifest: member graph files with their split tags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub graphs: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub split: SplitTag,
    pub source: GraphSource,
}

/// Generator for every member of a synthetic collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CollectionGenerator {
    Sbm(SbmParams),
    MultiLabel(MultiLabelSbmParams),
}

impl Default for CollectionGenerator {
    fn default() -> Self {
        CollectionGenerator::MultiLabel(MultiLabelSbmParams::default())
    }
}

/// Independent draws: `counts = [train, val, test]` graphs, in that order.
pub fn synth_collection(
    counts: [usize; 3],
    generator: &CollectionGenerator,
    seed: u64,
) -> Result<GraphCollection> {
    if counts.contains(&0) {
        return Err(QgatError::Input(format!(
            "every split needs at least one graph, got {counts:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::new();
    let mut tags = Vec::new();
    for (tag, &count) in SplitTag::ALL.iter().zip(&counts) {
        for _ in 0..count {
            let graph_seed: u64 = rng.random();
            let g = match generator {
                CollectionGenerator::Sbm(p) => synth_sbm(p, graph_seed)?,
                CollectionGenerator::MultiLabel(p) => synth_multilabel_sbm(p, graph_seed)?,
            };
            graphs.push(g);
            tags.push(*tag);
        }
    }
    GraphCollection::new(graphs, tags)
}

fn all_rows(batch: &Batch) -> Vec<usize> {
    (0..batch.graph.n_nodes()).collect()
}

/// Scores `model` on every node of the split's graphs, pooled.
pub fn eval_inductive(
    model: &GnnModel,
    collection: &GraphCollection,
    split: SplitTag,
) -> Result<SplitEval> {
    let batch = collection.eval_batch(split)?;
    eval_batch(model, &batch)
}

fn eval_batch(model: &GnnModel, batch: &Batch) -> Result<SplitEval> {
    let out = model.predict(&batch.nb, batch.graph.features())?;
    crate::training::node_eval(&out, batch.graph.labels(), &all_rows(batch))
}

/// Trains on train-tagged graphs, selecting on val-tagged graphs.
pub struct InductiveObjective<'a> {
    collection: &'a GraphCollection,
    val: Batch,
    test: Batch,
}

impl<'a> InductiveObjective<'a> {
    pub fn new(collection: &'a GraphCollection) -> Result<Self> {
        if collection.members(SplitTag::Train).is_empty() {
            return Err(QgatError::EmptySplit(
                "no training graphs in collection".into(),
            ));
        }
        Ok(Self {
            collection,
            val: collection.eval_batch(SplitTag::Val)?,
            test: collection.eval_batch(SplitTag::Test)?,
        })
    }
}

impl Objective for InductiveObjective<'_> {
    fn train_step(
        &mut self,
        model: &GnnModel,
        rng: &mut ChaCha8Rng,
    ) -> Result<(f64, Vec<Vec<f64>>)> {
        let batch = self.collection.batch(SplitTag::Train, Access::Training)?;
        let (out, tape) = model.forward(&batch.nb, batch.graph.features(), Some(rng))?;
        let (loss, g_out) =
            crate::training::node_loss(&out, batch.graph.labels(), &all_rows(&batch))?;
        let (grads, _) = model.backward(&batch.nb, &tape, &g_out)?;
        Ok((loss, grads))
    }

    fn evaluate(&self, model: &GnnModel) -> Result<[SplitEval; 3]> {
        let train = self.collection.eval_batch(SplitTag::Train)?;
        Ok([
            eval_batch(model, &train)?,
            eval_batch(model, &self.val)?,
            eval_batch(model, &self.test)?,
        ])
    }
}

/// Trains a fresh model on the collection's train graphs.
pub fn train_inductive(
    collection: &GraphCollection,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if cfg.task == Task::LinkPred {
        return Err(QgatError::Config(
            "inductive training supports node tasks only".into(),
        ));
    }
    let first = collection
        .members(SplitTag::Train)
        .first()
        .map(|&i| collection.graph(i).labels().clone())
        .ok_or_else(|| QgatError::EmptySplit("no training graphs in collection".into()))?;
    let out_dim = crate::training::output_dim(cfg.task, &first)?;
    let model = GnnModel::new(
        model_cfg,
        collection.feature_dim()?,
        out_dim,
        &mut cfg.init_rng(),
    )?;
    let mut objective = InductiveObjective::new(collection)?;
    fit(model, &mut objective, cfg)
}
