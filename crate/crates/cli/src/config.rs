//! Experiment configuration: one strictly parsed TOML file plus dotted
//! `key=value` overrides, resolved into a single echoable value.

use std::path::{Path, PathBuf};

use qgat_core::attention::LayerKind;
use qgat_core::gradcheck::GradcheckConfig;
use qgat_core::graph::{
    load_graph, synth_multilabel_sbm, synth_sbm, Graph, GraphSource, MultiLabelSbmParams,
    SbmParams, SplitMasks, FEATURE_NOISE_GRID, STRUCTURAL_NOISE_GRID,
};
use qgat_core::inductive::{synth_collection, CollectionGenerator, GraphCollection};
use qgat_core::training::{ModelConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// One independent run per seed; `training.seed` is replaced by each.
    pub seeds: Vec<u64>,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub training: TrainConfig,
    pub sweep: SweepConfig,
    pub gradcheck: GradcheckConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seeds: vec![0],
            data: DataConfig::default(),
            model: ModelConfig::default(),
            training: TrainConfig::default(),
            sweep: SweepConfig::default(),
            gradcheck: GradcheckConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    #[default]
    Sbm,
    MultilabelSbm,
    File,
    /// Several graphs tagged train/val/test, for inductive runs.
    Collection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub source: DataSource,
    /// Seed of the synthetic generators and of the multi-label split; fixed
    /// across training seeds so every run sees the same graph.
    pub seed: u64,
    pub sbm: SbmParams,
    pub multilabel: MultiLabelSbmParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<GraphSource>,
    pub collection: CollectionConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Sbm,
            seed: 0,
            sbm: SbmParams::default(),
            multilabel: MultiLabelSbmParams::default(),
            file: None,
            collection: CollectionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollectionConfig {
    /// Synthetic graphs per split: `[train, val, test]`.
    pub counts: [usize; 3],
    pub generator: CollectionGenerator,
    /// Load this manifest instead of generating.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
}

impl Default for CollectionConfig {
    fn default() -> Self {
        Self {
            counts: [4, 2, 2],
            generator: CollectionGenerator::default(),
            manifest: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Feature,
    Structural,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Feature => "feature",
            NoiseKind::Structural => "structural",
        }
    }

    pub fn default_grid(self) -> Vec<f64> {
        match self {
            NoiseKind::Feature => FEATURE_NOISE_GRID.to_vec(),
            NoiseKind::Structural => STRUCTURAL_NOISE_GRID.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub models: Vec<LayerKind>,
    pub noise: Vec<NoiseKind>,
    /// Replaces the default grid of every noise kind when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            models: vec![LayerKind::Qgat, LayerKind::Gatv2, LayerKind::Gat],
            noise: vec![NoiseKind::Feature, NoiseKind::Structural],
            levels: None,
        }
    }
}

impl SweepConfig {
    pub fn grid(&self, kind: NoiseKind) -> Vec<f64> {
        self.levels.clone().unwrap_or_else(|| kind.default_grid())
    }
}

impl ExperimentConfig {
    /// Reads `path` (defaults when `None`), applies overrides, and parses
    /// strictly. Relative data paths resolve against the config's directory.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let (mut table, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Usage(format!("cannot read config file {}: {e}", p.display()))
                })?;
                let table: toml::Table = toml::from_str(&text).map_err(|e| {
                    CliError::Usage(format!("invalid config file {}: {e}", p.display()))
                })?;
                (table, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (toml::Table::new(), PathBuf::new()),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: Self =
            toml::Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| {
                    CliError::Usage(format!("invalid configuration: {}", e.message()))
                })?;
        cfg.resolve_paths(&base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.seeds.is_empty() {
            return Err(CliError::Usage("at least one seed is required".into()));
        }
        self.model.validate()?;
        self.training.validate()?;
        if self.data.source == DataSource::File && self.data.file.is_none() {
            return Err(CliError::Usage(
                "data.source = \"file\" needs a [data.file] table".into(),
            ));
        }
        Ok(())
    }

    /// Fully resolved TOML; loading it reproduces this configuration.
    pub fn to_toml(&self) -> CliResult<String> {
        let body = toml::to_string(self)
            .map_err(|e| CliError::Failed(format!("cannot serialize config: {e}")))?;
        Ok(format!(
            "# Effective configuration, written by qgat.\n{body}"
        ))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let abs = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.data.file {
            Some(GraphSource::JsonBundle { path }) => abs(path),
            Some(GraphSource::EdgeListCsv { features, edges }) => {
                abs(features);
                abs(edges);
            }
            None => {}
        }
        if let Some(m) = &mut self.data.collection.manifest {
            abs(m);
        }
    }

    /// A copy for one seed.
    pub fn train_for(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.training.clone()
        }
    }
}

impl DataConfig {
    /// The single graph of a transductive run.
    pub fn graph(&self) -> CliResult<Graph> {
        Ok(match self.source {
            DataSource::Sbm => synth_sbm(&self.sbm, self.seed)?,
            DataSource::MultilabelSbm => {
                let g = synth_multilabel_sbm(&self.multilabel, self.seed)?;
                g.with_masks(SplitMasks::random(g.n_nodes(), 0.6, 0.2, self.seed))?
            }
            DataSource::File => load_graph(self.file.as_ref().expect("validated"))?,
            DataSource::Collection => {
                return Err(CliError::Usage(
                    "this command needs a single graph; data.source = \"collection\" is for inductive training".into(),
                ))
            }
        })
    }

    pub fn collection(&self) -> CliResult<GraphCollection> {
        let c = &self.collection;
        Ok(match &c.manifest {
            Some(m) => GraphCollection::load(m)?,
            None => synth_collection(c.counts, &c.generator, self.seed)?,
        })
    }
}

/// Sets `a.b.c = value`; the value is parsed as TOML, else taken as a string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> CliResult<()> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| {
        CliError::Usage(format!("override `{spec}` is not of the form key=value"))
    })?;
    let value = parse_value(raw.trim());
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Usage(format!(
            "override key `{key}` has an empty segment"
        )));
    }
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut cursor = table;
    for p in path {
        cursor = cursor
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Usage(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// `"0,1,2"` or `"0..5"` (half-open).
pub fn parse_seeds(s: &str) -> CliResult<Vec<u64>> {
    let bad = || CliError::Usage(format!("invalid seed list `{s}`; use `0,1,2` or `0..5`"));
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        (a..b).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<CliResult<_>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_echo() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml().unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn overrides_are_typed() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "training.lr=1e-3").unwrap();
        apply_override(&mut t, "model.kind=gat").unwrap();
        apply_override(&mut t, "model.hidden_dims=[4, 4]").unwrap();
        let cfg: ExperimentConfig = toml::Value::Table(t).try_into().unwrap();
        assert_eq!(cfg.training.lr, 1e-3);
        assert_eq!(cfg.model.kind, LayerKind::Gat);
        assert_eq!(cfg.model.hidden_dims, vec![4, 4]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "training.learning_rate=0.1").unwrap();
        assert!(toml::Value::Table(t)
            .try_into::<ExperimentConfig>()
            .is_err());
        assert!(toml::from_str::<ExperimentConfig>("[data.sbm]\nnodes = 3\n").is_err());
        assert!(toml::from_str::<ExperimentConfig>("colour = 1\n").is_err());
    }

    #[test]
    fn override_into_scalar_fails() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "seeds=[1]").unwrap();
        assert!(apply_override(&mut t, "seeds.x=1").is_err());
        assert!(apply_override(&mut t, "noequals").is_err());
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..5").unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(parse_seeds("3, 7").unwrap(), vec![3, 7]);
        assert!(parse_seeds("2..2").is_err());
        assert!(parse_seeds("a").is_err());
    }

    #[test]
    fn collection_generator_parses_from_toml() {
        let cfg: ExperimentConfig = toml::from_str(
            "[data]\nsource = \"collection\"\n[data.collection.generator]\nkind = \"sbm\"\nn_per_class = 5\n",
        )
        .unwrap();
        assert!(
            matches!(cfg.data.collection.generator, CollectionGenerator::Sbm(ref p) if p.n_per_class == 5)
        );
    }
}
