//! Link prediction: inner-product decoder over final node embeddings.

use std::collections::HashSet;

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

use super::loss::{link_bce, link_scores};
use super::metrics::{hits_at_k, mrr};
use super::{fit, GnnModel, ModelConfig, Objective, SplitEval, TrainConfig, TrainOutcome};
use crate::error::{QgatError, Result};
use crate::graph::noise::sample_non_edges;
use crate::graph::{split_link_prediction, Graph, LabeledEdges, LinkSplit, Neighborhood};

/// Trains on the message-passing graph of a [`LinkSplit`] with fresh
/// training negatives every step.
pub struct LinkObjective {
    features: Array2<f64>,
    nb: Neighborhood,
    n_nodes: usize,
    known: HashSet<(usize, usize)>,
    splits: [LabeledEdges; 3],
    neg_ratio: usize,
    hits_k: usize,
}

impl LinkObjective {
    pub fn new(split: &LinkSplit, neg_ratio: usize, hits_k: usize) -> Result<Self> {
        let splits = [split.train.clone(), split.val.clone(), split.test.clone()];
        for (name, s) in ["train", "val", "test"].iter().zip(&splits) {
            if s.pos.is_empty() || s.neg.is_empty() {
                return Err(QgatError::EmptySplit(format!(
                    "{name} split needs positive and negative pairs"
                )));
            }
        }
        let g = &split.train_graph;
        Ok(Self {
            features: g.features().clone(),
            nb: Neighborhood::build(g, true),
            n_nodes: g.n_nodes(),
            known: g.undirected_pairs().into_iter().collect(),
            splits,
            neg_ratio,
            hits_k,
        })
    }

    fn eval_split(&self, emb: &Array2<f64>, s: &LabeledEdges) -> Result<SplitEval> {
        let (loss, _) = link_bce(emb, &s.pos, &s.neg)?;
        let pos = link_scores(emb, &s.pos);
        let neg = link_scores(emb, &s.neg);
        Ok(SplitEval {
            loss,
            metric: hits_at_k(&pos, &neg, self.hits_k),
            secondary: Some(mrr(&pos, &neg)),
        })
    }
}

impl Objective for LinkObjective {
    fn train_step(
        &mut self,
        model: &GnnModel,
        rng: &mut ChaCha8Rng,
    ) -> Result<(f64, Vec<Vec<f64>>)> {
        let pos = &self.splits[0].pos;
        let total = self.n_nodes * self.n_nodes.saturating_sub(1) / 2;
        let k = (pos.len() * self.neg_ratio).min(total - self.known.len().min(total));
        let neg = sample_non_edges(self.n_nodes, &self.known, k, rng)?;
        let (emb, tape) = model.forward(&self.nb, &self.features, Some(rng))?;
        let (loss, g_emb) = link_bce(&emb, pos, &neg)?;
        let (grads, _) = model.backward(&self.nb, &tape, &g_emb)?;
        Ok((loss, grads))
    }

    fn evaluate(&self, model: &GnnModel) -> Result<[SplitEval; 3]> {
        let emb = model.predict(&self.nb, &self.features)?;
        Ok([
            self.eval_split(&emb, &self.splits[0])?,
            self.eval_split(&emb, &self.splits[1])?,
            self.eval_split(&emb, &self.splits[2])?,
        ])
    }
}

/// Splits the edges of `g`, then trains an embedding model on the remainder.
pub fn train_link_prediction(
    g: &Graph,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let l = &cfg.link;
    let split = split_link_prediction(g, l.frac_val, l.frac_test, l.neg_ratio, cfg.seed)?;
    let mut rng = cfg.init_rng();
    let model = GnnModel::new(
        model_cfg,
        g.feature_dim(),
        model_cfg.embedding_dim,
        &mut rng,
    )?;
    let mut objective = LinkObjective::new(&split, l.neg_ratio, l.hits_k)?;
    fit(model, &mut objective, cfg)
}
