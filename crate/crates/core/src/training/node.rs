//! Transductive node-level objectives: single-label and multi-label.

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

use super::loss::{bce_with_logits, softmax_cross_entropy};
use super::metrics::{accuracy, micro_f1, roc_auc};
use super::{fit, GnnModel, ModelConfig, Objective, SplitEval, Task, TrainConfig, TrainOutcome};
use crate::error::{QgatError, Result};
use crate::graph::{Graph, Labels, Neighborhood};

/// Output width a node task needs for `labels`.
pub(crate) fn output_dim(task: Task, labels: &Labels) -> Result<usize> {
    match (task, labels) {
        (Task::NodeClass, Labels::Classes { n_classes, .. }) => Ok(*n_classes),
        (Task::MultiLabel, Labels::MultiLabel { n_labels, .. }) => Ok(*n_labels),
        (Task::LinkPred, _) => Err(QgatError::Config(
            "link prediction is not a node task".into(),
        )),
        (task, _) => Err(QgatError::Config(format!(
            "graph labels do not fit the {task:?} task"
        ))),
    }
}

/// Loss and its gradient over `rows`.
pub(crate) fn node_loss(
    out: &Array2<f64>,
    labels: &Labels,
    rows: &[usize],
) -> Result<(f64, Array2<f64>)> {
    match labels {
        Labels::Classes { y, .. } => softmax_cross_entropy(out, y, rows),
        Labels::MultiLabel { y, .. } => bce_with_logits(out, y, rows),
        Labels::None => Err(QgatError::Config("graph has no labels".into())),
    }
}

/// Loss, headline metric and secondary metric over `rows`.
pub(crate) fn node_eval(out: &Array2<f64>, labels: &Labels, rows: &[usize]) -> Result<SplitEval> {
    let (loss, _) = node_loss(out, labels, rows)?;
    Ok(match labels {
        Labels::Classes { y, .. } => SplitEval {
            loss,
            metric: accuracy(out, y, rows),
            secondary: None,
        },
        Labels::MultiLabel { n_labels, y } => {
            let mut scores = Vec::with_capacity(rows.len() * n_labels);
            let mut truth = Vec::with_capacity(rows.len() * n_labels);
            for &r in rows {
                for k in 0..*n_labels {
                    scores.push(out[[r, k]]);
                    truth.push(y[r * n_labels + k]);
                }
            }
            SplitEval {
                loss,
                metric: micro_f1(out, y, rows),
                secondary: roc_auc(&scores, &truth),
            }
        }
        Labels::None => unreachable!("node_loss rejects unlabeled graphs"),
    })
}

fn mask_rows(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| i)
        .collect()
}

/// Full-batch node objective on one graph with train/val/test node masks.
pub struct NodeObjective {
    features: Array2<f64>,
    nb: Neighborhood,
    labels: Labels,
    rows: [Vec<usize>; 3],
}

impl NodeObjective {
    pub fn new(g: &Graph) -> Result<Self> {
        let m = g.masks();
        let rows = [mask_rows(&m.train), mask_rows(&m.val), mask_rows(&m.test)];
        for (name, r) in ["train", "val", "test"].iter().zip(&rows) {
            if r.is_empty() {
                return Err(QgatError::EmptySplit(format!(
                    "{name} mask selects no nodes"
                )));
            }
        }
        Ok(Self {
            features: g.features().clone(),
            nb: Neighborhood::build(g, true),
            labels: g.labels().clone(),
            rows,
        })
    }
}

impl Objective for NodeObjective {
    fn train_step(
        &mut self,
        model: &GnnModel,
        rng: &mut ChaCha8Rng,
    ) -> Result<(f64, Vec<Vec<f64>>)> {
        let (out, tape) = model.forward(&self.nb, &self.features, Some(rng))?;
        let (loss, g_out) = node_loss(&out, &self.labels, &self.rows[0])?;
        let (grads, _) = model.backward(&self.nb, &tape, &g_out)?;
        Ok((loss, grads))
    }

    fn evaluate(&self, model: &GnnModel) -> Result<[SplitEval; 3]> {
        let out = model.predict(&self.nb, &self.features)?;
        Ok([
            node_eval(&out, &self.labels, &self.rows[0])?,
            node_eval(&out, &self.labels, &self.rows[1])?,
            node_eval(&out, &self.labels, &self.rows[2])?,
        ])
    }
}

/// Trains a freshly initialized model on a node task of `g`.
pub fn train_node_task(
    g: &Graph,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let out_dim = output_dim(cfg.task, g.labels())?;
    let model = GnnModel::new(model_cfg, g.feature_dim(), out_dim, &mut cfg.init_rng())?;
    let mut objective = NodeObjective::new(g)?;
    fit(model, &mut objective, cfg)
}
