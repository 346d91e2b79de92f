pub mod gradcheck;
pub mod linkpred;
pub mod params;
pub mod sweep;
pub mod synth;
pub mod train;

use std::path::Path;

use qgat_core::graph::Graph;
use qgat_core::inductive::{train_inductive, GraphCollection};
use qgat_core::training::{
    train_link_prediction, train_node_task, write_metrics_csv, Checkpoint, ModelConfig, Task,
    TrainConfig, TrainOutcome,
};
use rayon::prelude::*;

use crate::config::{DataSource, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::ExperimentSpec;

pub enum Dataset {
    Single(Graph),
    Collection(GraphCollection),
}

impl Dataset {
    pub fn load(cfg: &ExperimentConfig) -> CliResult<Self> {
        Ok(match cfg.data.source {
            DataSource::Collection => Dataset::Collection(cfg.data.collection()?),
            _ => Dataset::Single(cfg.data.graph()?),
        })
    }
}

pub fn train_once(
    data: &Dataset,
    model: &ModelConfig,
    tc: &TrainConfig,
) -> CliResult<TrainOutcome> {
    Ok(match data {
        Dataset::Single(g) if tc.task == Task::LinkPred => train_link_prediction(g, model, tc)?,
        Dataset::Single(g) => train_node_task(g, model, tc)?,
        Dataset::Collection(c) => train_inductive(c, model, tc)?,
    })
}

pub struct SeedRun {
    pub seed: u64,
    pub train: TrainConfig,
    pub outcome: TrainOutcome,
}

/// One run per configured seed on the worker pool, returned in seed order.
pub fn run_seeds(spec: &ExperimentSpec, data: &Dataset) -> CliResult<Vec<SeedRun>> {
    let cfg = &spec.config;
    let results: Vec<CliResult<SeedRun>> = spec.pool()?.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| {
                let train = cfg.train_for(seed);
                let outcome = train_once(data, &cfg.model, &train)?;
                let best = outcome.best();
                log::info!(
                    "{} seed {seed}: best epoch {}, val {:.4}, test {:.4}",
                    cfg.model.kind,
                    outcome.best_epoch,
                    best.val.metric,
                    best.test.metric
                );
                Ok(SeedRun {
                    seed,
                    train,
                    outcome,
                })
            })
            .collect()
    });
    results.into_iter().collect()
}

/// `seed_<s>/metrics.csv` and `seed_<s>/checkpoint.json`.
pub fn write_seed_artifacts(out: &Path, run: &SeedRun) -> CliResult<()> {
    let dir = out.join(format!("seed_{}", run.seed));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let path = dir.join("metrics.csv");
    let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    write_metrics_csv(&run.outcome.history, file)
        .map_err(|e| CliError::Failed(format!("cannot write {}: {e}", path.display())))?;
    Checkpoint::new(&run.train, &run.outcome).save(&dir.join("checkpoint.json"))?;
    Ok(())
}

pub fn csv_writer(path: &Path) -> CliResult<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path)
        .map_err(|e| CliError::Failed(format!("cannot write {}: {e}", path.display())))
}

pub fn csv_error(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Failed(format!("cannot write {}: {e}", path.display()))
}
