use qgat_core::training::Task;

use super::{csv_error, csv_writer, run_seeds, write_seed_artifacts, Dataset};
use crate::error::{CliError, CliResult};
use crate::report::format_mean_std;
use crate::ExperimentSpec;

/// Columns of `linkpred.csv`; `k` is the Hits@K cutoff.
pub const LINKPRED_COLUMNS: [&str; 9] = [
    "seed",
    "best_epoch",
    "k",
    "train_hits",
    "val_hits",
    "test_hits",
    "train_mrr",
    "val_mrr",
    "test_mrr",
];

pub fn cmd_linkpred(spec: &ExperimentSpec) -> CliResult<()> {
    let mut spec = spec.clone();
    spec.config.training.task = Task::LinkPred;
    spec.config.validate()?;
    let cfg = &spec.config;
    spec.prepare_out()?;
    let data = Dataset::load(cfg)?;
    if matches!(data, Dataset::Collection(_)) {
        return Err(CliError::Usage(
            "link prediction needs a single graph".into(),
        ));
    }
    let runs = run_seeds(&spec, &data)?;
    let k = cfg.training.link.hits_k;

    let path = spec.out.join("linkpred.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(LINKPRED_COLUMNS).map_err(csv_error(&path))?;
    for run in &runs {
        write_seed_artifacts(&spec.out, run)?;
        let best = run.outcome.best();
        let mrr = |s: Option<f64>| s.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            run.seed.to_string(),
            run.outcome.best_epoch.to_string(),
            k.to_string(),
            best.train.metric.to_string(),
            best.val.metric.to_string(),
            best.test.metric.to_string(),
            mrr(best.train.secondary),
            mrr(best.val.secondary),
            mrr(best.test.secondary),
        ])
        .map_err(csv_error(&path))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    let hits: Vec<f64> = runs.iter().map(|r| r.outcome.best().test.metric).collect();
    let mrr: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.outcome.best().test.secondary)
        .collect();
    let n = runs.len();
    println!(
        "{} test hits@{k}: {} (mean ± std over {n} seeds)",
        cfg.model.kind,
        format_mean_std(&hits)
    );
    println!(
        "{} test mrr: {} (mean ± std over {n} seeds)",
        cfg.model.kind,
        format_mean_std(&mrr)
    );
    Ok(())
}
