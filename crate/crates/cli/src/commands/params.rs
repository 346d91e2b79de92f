use qgat_core::attention::LayerKind;
use qgat_core::graph::{Graph, Labels};
use qgat_core::inductive::SplitTag;
use qgat_core::training::{count_params, ModelConfig, ParamBreakdown, Task};

use super::{csv_error, csv_writer, Dataset};
use crate::error::{CliError, CliResult};
use crate::ExperimentSpec;

pub const PARAMS_COLUMNS: [&str; 6] = [
    "model",
    "layer",
    "classical",
    "quantum",
    "residual",
    "total",
];

fn dims_of(g: &Graph, task: Task, model: &ModelConfig) -> (usize, usize) {
    let out = match (task, g.labels()) {
        (Task::LinkPred, _) | (_, Labels::None) => model.embedding_dim,
        (_, Labels::Classes { n_classes, .. }) => *n_classes,
        (_, Labels::MultiLabel { n_labels, .. }) => *n_labels,
    };
    (g.feature_dim(), out)
}

/// Counts for every layer kind at the configured sizes.
pub fn breakdowns(
    model: &ModelConfig,
    in_dim: usize,
    out_dim: usize,
) -> CliResult<Vec<ParamBreakdown>> {
    [LayerKind::Gat, LayerKind::Gatv2, LayerKind::Qgat]
        .into_iter()
        .map(|kind| {
            let cfg = ModelConfig {
                kind,
                ..model.clone()
            };
            Ok(count_params(&cfg, in_dim, out_dim)?)
        })
        .collect()
}

pub fn cmd_params(
    spec: &ExperimentSpec,
    in_dim: Option<usize>,
    out_dim: Option<usize>,
) -> CliResult<()> {
    let cfg = &spec.config;
    spec.prepare_out()?;
    let (in_dim, out_dim) = match (in_dim, out_dim) {
        (Some(i), Some(o)) => (i, o),
        (i, o) => {
            let (di, dout) = match Dataset::load(cfg)? {
                Dataset::Single(g) => dims_of(&g, cfg.training.task, &cfg.model),
                Dataset::Collection(c) => {
                    let first = *c.members(SplitTag::Train).first().ok_or_else(|| {
                        CliError::Usage("collection has no training graphs".into())
                    })?;
                    dims_of(c.graph(first), cfg.training.task, &cfg.model)
                }
            };
            (i.unwrap_or(di), o.unwrap_or(dout))
        }
    };

    let path = spec.out.join("params.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(PARAMS_COLUMNS).map_err(csv_error(&path))?;
    println!(
        "in_dim {in_dim}, out_dim {out_dim}, heads {:?}, n_qubits {}, entangling layers {}",
        cfg.model.heads_per_layer, cfg.model.n_qubits, cfg.model.entangling_layers
    );
    println!(
        "{:<6} {:>5} {:>10} {:>8} {:>9} {:>10}",
        "model", "layer", "classical", "quantum", "residual", "total"
    );
    for b in breakdowns(&cfg.model, in_dim, out_dim)? {
        for l in &b.layers {
            let total = l.classical + l.quantum + l.residual;
            println!(
                "{:<6} {:>5} {:>10} {:>8} {:>9} {:>10}",
                b.kind.to_string(),
                l.layer,
                l.classical,
                l.quantum,
                l.residual,
                total
            );
            w.write_record([
                b.kind.to_string(),
                l.layer.to_string(),
                l.classical.to_string(),
                l.quantum.to_string(),
                l.residual.to_string(),
                total.to_string(),
            ])
            .map_err(csv_error(&path))?;
        }
        println!(
            "{:<6} {:>5} {:>10} {:>8} {:>9} {:>10}",
            b.kind.to_string(),
            "all",
            b.classical(),
            b.quantum(),
            "",
            b.total()
        );
        w.write_record([
            b.kind.to_string(),
            "all".into(),
            b.classical().to_string(),
            b.quantum().to_string(),
            String::new(),
            b.total().to_string(),
        ])
        .map_err(csv_error(&path))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(())
}
