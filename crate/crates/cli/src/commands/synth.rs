use qgat_core::graph::{save_graph_csv, save_graph_json, Labels};

use super::Dataset;
use crate::error::CliResult;
use crate::ExperimentSpec;

/// Writes `graph.json` (plus `features.csv`/`edges.csv` when labels are
/// single-class) or, for collections, `collection/manifest.json`.
pub fn cmd_synth(spec: &ExperimentSpec) -> CliResult<()> {
    spec.prepare_out()?;
    match Dataset::load(&spec.config)? {
        Dataset::Single(g) => {
            let json = spec.out.join("graph.json");
            save_graph_json(&g, &json)?;
            println!(
                "wrote {} ({} nodes, {} directed edges)",
                json.display(),
                g.n_nodes(),
                g.edges().len()
            );
            if !matches!(g.labels(), Labels::MultiLabel { .. }) {
                let (f, e) = (spec.out.join("features.csv"), spec.out.join("edges.csv"));
                save_graph_csv(&g, &f, &e)?;
                println!("wrote {} and {}", f.display(), e.display());
            }
        }
        Dataset::Collection(c) => {
            let manifest = c.save(&spec.out.join("collection"))?;
            println!("wrote {} ({} graphs)", manifest.display(), c.len());
        }
    }
    Ok(())
}
