use std::path::{Path, PathBuf};

use qgat_core::attention::LayerKind;
use qgat_core::graph::{add_feature_noise, add_structural_noise, Graph};
use qgat_core::training::{train_link_prediction, train_node_task, ModelConfig, Task};
use rayon::prelude::*;

use super::Dataset;
use crate::config::NoiseKind;
use crate::error::{CliError, CliResult};
use crate::plot::{aggregate, read_sweep_csv, render_svg, write_sweep_csv, Panel, SweepRow};
use crate::report::format_mean_std;
use crate::ExperimentSpec;

/// Perturbation seed of a run; decorrelated from its weight-init stream.
pub fn noise_seed(seed: u64) -> u64 {
    seed ^ 0x6e6f_6973_655f_7365
}

pub fn perturb(g: &Graph, kind: NoiseKind, level: f64, seed: u64) -> CliResult<Graph> {
    Ok(match kind {
        NoiseKind::Feature => add_feature_noise(g, level, noise_seed(seed))?,
        NoiseKind::Structural => add_structural_noise(g, level, noise_seed(seed))?,
    })
}

pub fn csv_path(out: &Path, kind: NoiseKind) -> PathBuf {
    out.join(format!("sweep_{}.csv", kind.name()))
}

pub fn panel_for(kind: NoiseKind, metric: &str, rows: Vec<SweepRow>) -> Panel {
    let (title, x_label) = match kind {
        NoiseKind::Feature => ("Feature noise", "noise level ε"),
        NoiseKind::Structural => ("Structural noise", "added-edge ratio η"),
    };
    Panel {
        title: title.into(),
        x_label: x_label.into(),
        y_label: format!("test {metric}"),
        rows,
    }
}

pub fn cmd_noise_sweep(spec: &ExperimentSpec) -> CliResult<()> {
    let cfg = &spec.config;
    spec.prepare_out()?;
    let Dataset::Single(graph) = Dataset::load(cfg)? else {
        return Err(CliError::Usage("noise sweeps need a single graph".into()));
    };
    if cfg.sweep.models.is_empty() || cfg.sweep.noise.is_empty() {
        return Err(CliError::Usage(
            "sweep.models and sweep.noise must be non-empty".into(),
        ));
    }
    let metric = cfg.training.task.metric_name(cfg.training.link.hits_k);
    let pool = spec.pool()?;
    let mut panels = Vec::new();
    for &kind in &cfg.sweep.noise {
        let grid = cfg.sweep.grid(kind);
        let cells: Vec<(LayerKind, f64, u64)> = cfg
            .sweep
            .models
            .iter()
            .flat_map(|&m| {
                grid.iter()
                    .flat_map(move |&l| cfg.seeds.iter().map(move |&s| (m, l, s)))
            })
            .collect();
        log::info!("{} noise: {} runs", kind.name(), cells.len());
        let rows: Vec<CliResult<SweepRow>> = pool.install(|| {
            cells
                .par_iter()
                .map(|&(model, level, seed)| {
                    let g = perturb(&graph, kind, level, seed)?;
                    let model_cfg = ModelConfig {
                        kind: model,
                        ..cfg.model.clone()
                    };
                    let tc = cfg.train_for(seed);
                    let outcome = match tc.task {
                        Task::LinkPred => train_link_prediction(&g, &model_cfg, &tc)?,
                        _ => train_node_task(&g, &model_cfg, &tc)?,
                    };
                    let value = outcome.best().test.metric;
                    log::info!(
                        "{} {model} level {level} seed {seed}: {value:.4}",
                        kind.name()
                    );
                    Ok(SweepRow {
                        model: model.to_string(),
                        level,
                        seed,
                        metric: value,
                    })
                })
                .collect()
        });
        let rows = rows.into_iter().collect::<CliResult<Vec<_>>>()?;
        let path = csv_path(&spec.out, kind);
        write_sweep_csv(&path, &rows)?;

        // the figure is drawn from the file, not from memory
        let rows = read_sweep_csv(&path)?;
        print_table(kind, &metric, &rows);
        panels.push(panel_for(kind, &metric, rows));
    }
    let svg = spec.out.join("sweep.svg");
    crate::write_file(&svg, render_svg(&panels).as_bytes())?;
    println!("wrote {}", svg.display());
    Ok(())
}

fn print_table(kind: NoiseKind, metric: &str, rows: &[SweepRow]) {
    println!(
        "{} noise, test {metric} (mean ± std over seeds)",
        kind.name()
    );
    let series = aggregate(rows);
    let Some(levels) = series
        .first()
        .map(|s| s.points.iter().map(|p| p.level).collect::<Vec<_>>())
    else {
        return;
    };
    for (i, level) in levels.iter().enumerate() {
        let mut cells: Vec<(String, f64)> = Vec::new();
        let mut line = format!("  {level:<6}");
        for s in &series {
            if let Some(p) = s.points.get(i) {
                line.push_str(&format!("  {} {}", s.model, format_mean_std(&p.values)));
                cells.push((s.model.clone(), p.mean));
            }
        }
        cells.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut ranking = String::new();
        for (i, (model, mean)) in cells.iter().enumerate() {
            if i > 0 {
                ranking.push_str(if *mean < cells[i - 1].1 { " > " } else { " = " });
            }
            ranking.push_str(model);
        }
        println!("{line}  | ranking: {ranking}");
    }
}

/// Redraws `sweep.svg` from existing sweep CSV files.
pub fn cmd_plot(spec: &ExperimentSpec, csvs: &[PathBuf]) -> CliResult<()> {
    std::fs::create_dir_all(&spec.out).map_err(|e| CliError::io(&spec.out, e))?;
    let metric = spec
        .config
        .training
        .task
        .metric_name(spec.config.training.link.hits_k);
    let mut panels = Vec::new();
    for path in csvs {
        let rows = read_sweep_csv(path)?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        let panel = match stem.strip_prefix("sweep_") {
            Some("feature") => panel_for(NoiseKind::Feature, &metric, rows),
            Some("structural") => panel_for(NoiseKind::Structural, &metric, rows),
            _ => Panel {
                title: stem.to_string(),
                x_label: "noise level".into(),
                y_label: format!("test {metric}"),
                rows,
            },
        };
        panels.push(panel);
    }
    let svg = spec.out.join("sweep.svg");
    crate::write_file(&svg, render_svg(&panels).as_bytes())?;
    println!("wrote {}", svg.display());
    Ok(())
}
