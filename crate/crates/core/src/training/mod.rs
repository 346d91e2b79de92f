//! Losses, metrics, optimizer, model assembly and the training loop.
//!
//! Training is full-batch. Each task supplies an [`Objective`] that computes
//! a training-mode loss with gradients and evaluates all three splits;
//! [`fit`] drives the optimizer, the schedule and early stopping.

mod link;
pub mod loss;
pub mod metrics;
mod model;
mod node;
pub mod optim;

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QgatError, Result};

pub use link::{train_link_prediction, LinkObjective};
pub use model::{count_params, GnnModel, LayerParamCount, ModelConfig, ModelTape, ParamBreakdown};
pub(crate) use node::{node_eval, node_loss, output_dim};
pub use node::{train_node_task, NodeObjective};
pub use optim::{cosine_lr, AdamW, AdamWConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    #[default]
    NodeClass,
    MultiLabel,
    LinkPred,
}

impl Task {
    /// Name of the headline metric.
    pub fn metric_name(self, hits_k: usize) -> String {
        match self {
            Task::NodeClass => "accuracy".into(),
            Task::MultiLabel => "micro_f1".into(),
            Task::LinkPred => format!("hits@{hits_k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    pub frac_val: f64,
    pub frac_test: f64,
    /// Negatives per positive, for held-out splits and for each epoch's
    /// freshly sampled training negatives.
    pub neg_ratio: usize,
    pub hits_k: usize,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            frac_val: 0.1,
            frac_test: 0.1,
            neg_ratio: 5,
            hits_k: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub task: Task,
    pub lr: f64,
    /// Floor of the cosine schedule.
    pub lr_min: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    pub seed: u64,
    pub link: LinkConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            task: Task::NodeClass,
            lr: 2e-3,
            lr_min: 0.0,
            weight_decay: 5e-4,
            epochs: 200,
            patience: 100,
            seed: 0,
            link: LinkConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(QgatError::Config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if !(self.lr_min >= 0.0 && self.lr_min <= self.lr) {
            return Err(QgatError::Config(format!(
                "lr_min must lie in [0, lr], got {}",
                self.lr_min
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(QgatError::Config(format!(
                "weight decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if self.task == Task::LinkPred && self.link.hits_k == 0 {
            return Err(QgatError::Config("hits_k must be positive".into()));
        }
        Ok(())
    }

    /// Stream for weight initialization and data sampling done up front.
    pub fn init_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Independent stream consumed during training (dropout, negatives).
    pub fn step_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        rng
    }
}

/// Loss and metrics on one split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitEval {
    pub loss: f64,
    pub metric: f64,
    /// ROC-AUC for multi-label tasks, MRR for link prediction.
    pub secondary: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub lr: f64,
    /// Wall-clock seconds since training started.
    pub seconds: f64,
    pub train: SplitEval,
    pub val: SplitEval,
    pub test: SplitEval,
}

impl MetricsRecord {
    pub fn splits(&self) -> [(&'static str, &SplitEval); 3] {
        [
            ("train", &self.train),
            ("val", &self.val),
            ("test", &self.test),
        ]
    }
}

/// A task-specific source of gradients and evaluations.
pub trait Objective {
    /// Training-mode loss and gradients aligned with [`GnnModel::params`].
    fn train_step(
        &mut self,
        model: &GnnModel,
        rng: &mut ChaCha8Rng,
    ) -> Result<(f64, Vec<Vec<f64>>)>;

    /// Inference-mode train/val/test evaluation.
    fn evaluate(&self, model: &GnnModel) -> Result<[SplitEval; 3]>;
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub history: Vec<MetricsRecord>,
    pub best_epoch: usize,
    /// Weights at the best validation epoch.
    pub model: GnnModel,
}

impl TrainOutcome {
    pub fn best(&self) -> &MetricsRecord {
        &self.history[self.best_epoch]
    }
}

fn improves(candidate: &SplitEval, best: &SplitEval) -> bool {
    candidate.metric > best.metric
        || (candidate.metric == best.metric && candidate.loss < best.loss)
}

fn check_finite(epoch: usize, evals: &[SplitEval; 3]) -> Result<()> {
    for (name, e) in ["train", "val", "test"].iter().zip(evals) {
        if !e.loss.is_finite() {
            return Err(QgatError::Divergence {
                epoch,
                detail: format!("{name} loss is {}", e.loss),
            });
        }
    }
    Ok(())
}

/// Runs the optimizer for up to `cfg.epochs` epochs. Epoch 0 evaluates the
/// initial weights; the returned model is the best-validation checkpoint.
pub fn fit(
    mut model: GnnModel,
    objective: &mut dyn Objective,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rng = cfg.step_rng();
    let shapes: Vec<usize> = model.params().iter().map(|(_, p)| p.len()).collect();
    let names: Vec<String> = model.params().into_iter().map(|(n, _)| n).collect();
    let mut opt = AdamW::new(
        AdamWConfig {
            weight_decay: cfg.weight_decay,
            ..AdamWConfig::default()
        },
        &shapes,
    );

    let evals = objective.evaluate(&model)?;
    check_finite(0, &evals)?;
    let record = |epoch, lr, [train, val, test]: [SplitEval; 3]| MetricsRecord {
        epoch,
        lr,
        seconds: start.elapsed().as_secs_f64(),
        train,
        val,
        test,
    };
    let mut history = vec![record(
        0,
        cosine_lr(0, cfg.epochs, cfg.lr, cfg.lr_min),
        evals,
    )];
    let mut best_epoch = 0;
    let mut best_model = model.clone();
    let mut stale = 0;

    for epoch in 1..=cfg.epochs {
        let lr = cosine_lr(epoch - 1, cfg.epochs, cfg.lr, cfg.lr_min);
        let (loss, grads) = objective.train_step(&model, &mut rng)?;
        if !loss.is_finite() {
            return Err(QgatError::Divergence {
                epoch,
                detail: format!("training loss is {loss}"),
            });
        }
        {
            let mut params: Vec<&mut [f64]> =
                model.params_mut().into_iter().map(|(_, p)| p).collect();
            opt.step(&mut params, &grads, &names, lr)?;
        }
        let evals = objective.evaluate(&model)?;
        check_finite(epoch, &evals)?;
        history.push(record(epoch, lr, evals));
        log::debug!(
            "epoch {epoch}: train loss {:.4}, val metric {:.4}",
            history[epoch].train.loss,
            history[epoch].val.metric
        );
        if improves(&history[epoch].val, &history[best_epoch].val) {
            best_epoch = epoch;
            best_model = model.clone();
            stale = 0;
        } else {
            stale += 1;
            if cfg.patience > 0 && stale >= cfg.patience {
                log::info!("early stop at epoch {epoch}, best epoch {best_epoch}");
                break;
            }
        }
    }
    Ok(TrainOutcome {
        history,
        best_epoch,
        model: best_model,
    })
}

/// Serialized weights with the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub train: TrainConfig,
    pub epoch: usize,
    pub model: GnnModel,
}

impl Checkpoint {
    pub const FORMAT_VERSION: u32 = 1;

    pub fn new(train: &TrainConfig, outcome: &TrainOutcome) -> Self {
        Self {
            format_version: Self::FORMAT_VERSION,
            train: train.clone(),
            epoch: outcome.best_epoch,
            model: outcome.model.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| QgatError::Input(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| QgatError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QgatError::io(path, e))?;
        let ck: Self = serde_json::from_str(&text).map_err(|e| QgatError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        if ck.format_version != Self::FORMAT_VERSION {
            return Err(QgatError::Input(format!(
                "checkpoint format {} is not supported (expected {})",
                ck.format_version,
                Self::FORMAT_VERSION
            )));
        }
        Ok(ck)
    }
}

/// Writes the history in long format: one row per epoch and split.
pub fn write_metrics_csv<W: std::io::Write>(history: &[MetricsRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "split", "loss", "metric", "lr", "seconds"])?;
    for r in history {
        for (name, e) in r.splits() {
            w.write_record([
                r.epoch.to_string(),
                name.to_string(),
                e.loss.to_string(),
                e.metric.to_string(),
                r.lr.to_string(),
                r.seconds.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
