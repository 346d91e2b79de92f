use qgat_core::training::Task;

use super::{csv_error, csv_writer, run_seeds, write_seed_artifacts, Dataset};
use crate::error::CliResult;
use crate::report::format_mean_std;
use crate::ExperimentSpec;

/// Columns of `summary.csv`, one row per seed at its best validation epoch.
pub const SUMMARY_COLUMNS: [&str; 8] = [
    "seed",
    "best_epoch",
    "metric",
    "val_loss",
    "val_metric",
    "test_loss",
    "test_metric",
    "test_secondary",
];

pub fn cmd_train(spec: &ExperimentSpec) -> CliResult<()> {
    let cfg = &spec.config;
    spec.prepare_out()?;
    let data = Dataset::load(cfg)?;
    let runs = run_seeds(spec, &data)?;
    let metric = cfg.training.task.metric_name(cfg.training.link.hits_k);

    let path = spec.out.join("summary.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(SUMMARY_COLUMNS).map_err(csv_error(&path))?;
    for run in &runs {
        write_seed_artifacts(&spec.out, run)?;
        let best = run.outcome.best();
        w.write_record([
            run.seed.to_string(),
            run.outcome.best_epoch.to_string(),
            metric.clone(),
            best.val.loss.to_string(),
            best.val.metric.to_string(),
            best.test.loss.to_string(),
            best.test.metric.to_string(),
            best.test
                .secondary
                .map(|s| s.to_string())
                .unwrap_or_default(),
        ])
        .map_err(csv_error(&path))?;
    }
    w.flush().map_err(|e| crate::CliError::io(&path, e))?;

    let tests: Vec<f64> = runs.iter().map(|r| r.outcome.best().test.metric).collect();
    println!(
        "{} test {metric}: {} (mean ± std over {} seeds)",
        cfg.model.kind,
        format_mean_std(&tests),
        runs.len()
    );
    let secondary: Option<Vec<f64>> = runs
        .iter()
        .map(|r| r.outcome.best().test.secondary)
        .collect();
    if let Some(values) = secondary {
        let name = match cfg.training.task {
            Task::LinkPred => "mrr",
            _ => "roc_auc",
        };
        println!(
            "{} test {name}: {}",
            cfg.model.kind,
            format_mean_std(&values)
        );
    }
    Ok(())
}
