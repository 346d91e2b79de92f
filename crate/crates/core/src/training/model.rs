//! Stacked attention layers forming a node-level model.

use ndarray::Array2;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attention::{
    circuit_input_width, n_executions, Activation, GraphAttentionLayer, LayerConfig, LayerKind,
    LayerTape, Merge, QuantumConfig, ValueProjection,
};
use crate::error::{QgatError, Result};
use crate::graph::Neighborhood;
use crate::statevector::MAX_QUBITS;

/// Architecture of a stacked model. Hidden layers use `merge` and
/// `activation`; the output layer always averages its heads with no
/// activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kind: LayerKind,
    /// Per-head output width of each hidden layer.
    pub hidden_dims: Vec<usize>,
    /// Heads of every layer, the output layer last.
    pub heads_per_layer: Vec<usize>,
    pub n_qubits: usize,
    pub entangling_layers: usize,
    pub value_projection: ValueProjection,
    pub dropout: f64,
    pub merge: Merge,
    pub activation: Activation,
    pub residual: bool,
    /// Output width for link prediction, where no label count fixes it.
    pub embedding_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: LayerKind::Qgat,
            hidden_dims: vec![8, 8],
            heads_per_layer: vec![4, 4, 4],
            n_qubits: 4,
            entangling_layers: 2,
            value_projection: ValueProjection::SharedSlice,
            dropout: 0.5,
            merge: Merge::Concat,
            activation: Activation::Elu,
            residual: true,
            embedding_dim: 16,
        }
    }
}

impl ModelConfig {
    pub fn n_layers(&self) -> usize {
        self.heads_per_layer.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.heads_per_layer.len() != self.hidden_dims.len() + 1 {
            return Err(QgatError::Config(format!(
                "heads_per_layer has {} entries but {} hidden layers plus one output layer need {}",
                self.heads_per_layer.len(),
                self.hidden_dims.len(),
                self.hidden_dims.len() + 1
            )));
        }
        if self.heads_per_layer.contains(&0) || self.hidden_dims.contains(&0) {
            return Err(QgatError::Config(
                "heads and hidden dims must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(QgatError::Config(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if self.kind == LayerKind::Qgat && (self.n_qubits == 0 || self.n_qubits > MAX_QUBITS) {
            return Err(QgatError::Config(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {}",
                self.n_qubits
            )));
        }
        Ok(())
    }

    fn layer_configs(&self, in_dim: usize, out_dim: usize) -> Vec<LayerConfig> {
        let mut d = in_dim;
        let mut out = Vec::with_capacity(self.n_layers());
        for (i, &heads) in self.heads_per_layer.iter().enumerate() {
            let last = i + 1 == self.n_layers();
            let cfg = LayerConfig {
                in_dim: d,
                heads,
                out_per_head: if last { out_dim } else { self.hidden_dims[i] },
                merge: if last { Merge::Mean } else { self.merge },
                activation: if last {
                    Activation::Identity
                } else {
                    self.activation
                },
                dropout: self.dropout,
                residual: self.residual,
            };
            d = cfg.out_width();
            out.push(cfg);
        }
        out
    }
}

/// Trainable parameter counts of one layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerParamCount {
    pub layer: usize,
    pub classical: usize,
    pub quantum: usize,
    pub residual: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParamBreakdown {
    pub kind: LayerKind,
    pub layers: Vec<LayerParamCount>,
}

impl ParamBreakdown {
    pub fn classical(&self) -> usize {
        self.layers.iter().map(|l| l.classical + l.residual).sum()
    }

    pub fn quantum(&self) -> usize {
        self.layers.iter().map(|l| l.quantum).sum()
    }

    pub fn total(&self) -> usize {
        self.classical() + self.quantum()
    }
}

/// Closed-form parameter counts for a model. Works for configurations that
/// cannot be instantiated, such as a circuit with zero entangling layers.
pub fn count_params(cfg: &ModelConfig, in_dim: usize, out_dim: usize) -> Result<ParamBreakdown> {
    cfg.validate()?;
    let layers = cfg
        .layer_configs(in_dim, out_dim)
        .iter()
        .enumerate()
        .map(|(i, lc)| {
            let (d, h, dout) = (lc.in_dim, lc.heads, lc.out_per_head);
            let hd = h * dout;
            let (classical, quantum) = match cfg.kind {
                LayerKind::Qgat => {
                    let value = match cfg.value_projection {
                        ValueProjection::SharedSlice => 0,
                        ValueProjection::Independent => d * hd,
                    };
                    let p = (2 * hd + 2 * d) * circuit_input_width(h, cfg.n_qubits);
                    debug_assert_eq!(
                        circuit_input_width(h, cfg.n_qubits),
                        (1 << cfg.n_qubits) * n_executions(h, cfg.n_qubits)
                    );
                    (
                        d * hd + p + value,
                        crate::vqc::param_count(cfg.entangling_layers, cfg.n_qubits),
                    )
                }
                LayerKind::Gat => (d * hd + 2 * hd, 0),
                LayerKind::Gatv2 => (2 * d * hd + hd, 0),
            };
            let residual = if lc.residual && d != lc.out_width() {
                d * lc.out_width()
            } else {
                0
            };
            LayerParamCount {
                layer: i,
                classical,
                quantum,
                residual,
            }
        })
        .collect();
    Ok(ParamBreakdown {
        kind: cfg.kind,
        layers,
    })
}

/// Forward intermediates of every layer, first layer first.
#[derive(Debug, Clone)]
pub struct ModelTape {
    layers: Vec<LayerTape>,
}

impl ModelTape {
    pub fn layer(&self, i: usize) -> &LayerTape {
        &self.layers[i]
    }

    pub fn circuit_executions(&self) -> usize {
        self.layers.iter().map(LayerTape::circuit_executions).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnModel {
    config: ModelConfig,
    in_dim: usize,
    out_dim: usize,
    layers: Vec<GraphAttentionLayer>,
}

impl GnnModel {
    /// Builds a model with weights drawn from `rng`.
    pub fn new<R: rand::Rng + ?Sized>(
        config: &ModelConfig,
        in_dim: usize,
        out_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        if in_dim == 0 || out_dim == 0 {
            return Err(QgatError::Config(format!(
                "model dims must be positive (in={in_dim}, out={out_dim})"
            )));
        }
        let quantum = QuantumConfig {
            n_qubits: config.n_qubits,
            circuit_layers: config.entangling_layers,
            value_projection: config.value_projection,
        };
        let layers = config
            .layer_configs(in_dim, out_dim)
            .into_iter()
            .map(|lc| match config.kind {
                LayerKind::Qgat => GraphAttentionLayer::qgat(lc, &quantum, rng),
                LayerKind::Gat => GraphAttentionLayer::gat(lc, rng),
                LayerKind::Gatv2 => GraphAttentionLayer::gatv2(lc, rng),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: config.clone(),
            in_dim,
            out_dim,
            layers,
        })
    }

    /// Builds a model from a seed alone.
    pub fn seeded(config: &ModelConfig, in_dim: usize, out_dim: usize, seed: u64) -> Result<Self> {
        Self::new(
            config,
            in_dim,
            out_dim,
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn layers(&self) -> &[GraphAttentionLayer] {
        &self.layers
    }

    /// Passing an RNG enables dropout.
    pub fn forward(
        &self,
        nb: &Neighborhood,
        x: &Array2<f64>,
        mut rng: Option<&mut dyn RngCore>,
    ) -> Result<(Array2<f64>, ModelTape)> {
        let mut h = x.clone();
        let mut tapes = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let layer_rng: Option<&mut dyn RngCore> = match rng {
                Some(ref mut r) => Some(&mut **r),
                None => None,
            };
            let (out, tape) = layer.forward(nb, &h, layer_rng)?;
            h = out;
            tapes.push(tape);
        }
        Ok((h, ModelTape { layers: tapes }))
    }

    /// Inference-mode output.
    pub fn predict(&self, nb: &Neighborhood, x: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward(nb, x, None)?.0)
    }

    /// Gradients aligned with [`Self::params`], and `∂L/∂x`.
    pub fn backward(
        &self,
        nb: &Neighborhood,
        tape: &ModelTape,
        upstream: &Array2<f64>,
    ) -> Result<(Vec<Vec<f64>>, Array2<f64>)> {
        let mut g = upstream.clone();
        let mut per_layer = Vec::with_capacity(self.layers.len());
        for (layer, t) in self.layers.iter().zip(&tape.layers).rev() {
            let (grads, g_in) = layer.backward(nb, t, &g)?;
            per_layer.push(grads);
            g = g_in;
        }
        per_layer.reverse();
        Ok((per_layer.into_iter().flatten().collect(), g))
    }

    /// Parameter tensors named `layer{i}.{tensor}`.
    pub fn params(&self) -> Vec<(String, &[f64])> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                l.params()
                    .into_iter()
                    .map(move |(n, p)| (format!("layer{i}.{n}"), p))
            })
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<(String, &mut [f64])> {
        self.layers
            .iter_mut()
            .enumerate()
            .flat_map(|(i, l)| {
                l.params_mut()
                    .into_iter()
                    .map(move |(n, p)| (format!("layer{i}.{n}"), p))
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(GraphAttentionLayer::param_count)
            .sum()
    }
}
