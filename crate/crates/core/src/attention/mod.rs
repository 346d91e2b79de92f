//! Graph attention layers: the quantum-scored QGAT layer and the GAT/GATv2
//! baselines, sharing one message-passing and aggregation path.
//!
//! A layer runs, in order: input dropout, edge scoring (layer specific),
//! neighborhood softmax, attention dropout, weighted sum of per-head values,
//! head merge (concat or mean), activation, and a residual connection.
//! Forward returns a [`LayerTape`] holding every intermediate needed by
//! [`GraphAttentionLayer::backward`].

mod aggregate;
mod gat;
mod qgat;

use ndarray::Array2;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{QgatError, Result};
use crate::graph::Neighborhood;

pub use aggregate::neighborhood_softmax;
pub use gat::{GatState, Gatv2State, LEAKY_SLOPE};
pub use qgat::{circuit_input_width, n_executions, QgatLayerState, ValueProjection};

use aggregate::{
    aggregate_backward, aggregate_forward, dropout_scale, AggregateSpec, AggregateTape,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Merge {
    #[default]
    Concat,
    Mean,
}

impl Merge {
    pub fn width(self, heads: usize, out_per_head: usize) -> usize {
        match self {
            Merge::Concat => heads * out_per_head,
            Merge::Mean => out_per_head,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    #[default]
    Elu,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative at pre-activation `x`.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerKind {
    Qgat,
    Gat,
    Gatv2,
}

impl std::fmt::Display for LayerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LayerKind::Qgat => "qgat",
            LayerKind::Gat => "gat",
            LayerKind::Gatv2 => "gatv2",
        })
    }
}

impl std::str::FromStr for LayerKind {
    type Err = QgatError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qgat" => Ok(LayerKind::Qgat),
            "gat" => Ok(LayerKind::Gat),
            "gatv2" => Ok(LayerKind::Gatv2),
            other => Err(QgatError::Config(format!(
                "unknown model `{other}` (expected qgat, gat or gatv2)"
            ))),
        }
    }
}

/// Shape and regularization settings common to every layer kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerConfig {
    pub in_dim: usize,
    pub heads: usize,
    pub out_per_head: usize,
    pub merge: Merge,
    pub activation: Activation,
    /// Applied to layer inputs and to attention coefficients while training.
    pub dropout: f64,
    pub residual: bool,
}

impl LayerConfig {
    pub fn out_width(&self) -> usize {
        self.merge.width(self.heads, self.out_per_head)
    }

    fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.heads == 0 || self.out_per_head == 0 {
            return Err(QgatError::Config(format!(
                "layer dims must be positive (d={}, h={}, d_out={})",
                self.in_dim, self.heads, self.out_per_head
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(QgatError::Config(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// Settings for the quantum scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumConfig {
    pub n_qubits: usize,
    pub circuit_layers: usize,
    pub value_projection: ValueProjection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Scorer {
    Qgat(QgatLayerState),
    Gat(GatState),
    Gatv2(Gatv2State),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Residual {
    None,
    Identity,
    /// Learned `d_in × width` shortcut.
    Linear(Array2<f64>),
}

#[derive(Debug, Clone)]
enum ScoreTape {
    Qgat(qgat::QgatTape),
    Gat(gat::GatTape),
    Gatv2(gat::Gatv2Tape),
}

/// Intermediates of one layer's forward pass.
#[derive(Debug, Clone)]
pub struct LayerTape {
    version: u64,
    input_scale: Option<Array2<f64>>,
    dropped_input: Array2<f64>,
    logits: Array2<f64>,
    values: Array2<f64>,
    score: ScoreTape,
    agg: AggregateTape,
}

impl LayerTape {
    /// Raw attention logits, `E × h`, in message-edge order.
    pub fn logits(&self) -> &Array2<f64> {
        &self.logits
    }

    /// Softmax-normalized coefficients before attention dropout, `E × h`.
    pub fn attention(&self) -> &Array2<f64> {
        &self.agg.alpha
    }

    /// Circuit executions in this pass (zero for classical layers).
    pub fn circuit_executions(&self) -> usize {
        match &self.score {
            ScoreTape::Qgat(t) => t.executions,
            _ => 0,
        }
    }
}

/// Gradients aligned with [`GraphAttentionLayer::params`].
pub type ParamGrads = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphAttentionLayer {
    config: LayerConfig,
    scorer: Scorer,
    residual: Residual,
    #[serde(skip)]
    version: u64,
}

/// Weights and shape only; the tape version is bookkeeping.
impl PartialEq for GraphAttentionLayer {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.scorer == other.scorer
            && self.residual == other.residual
    }
}

/// Glorot-uniform `rows × cols` matrix.
pub fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
}

impl GraphAttentionLayer {
    pub fn qgat<R: Rng + ?Sized>(
        config: LayerConfig,
        quantum: &QuantumConfig,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let state = QgatLayerState::new(
            config.in_dim,
            config.heads,
            config.out_per_head,
            quantum.n_qubits,
            quantum.circuit_layers,
            quantum.value_projection,
            rng,
        )?;
        Self::from_scorer(config, Scorer::Qgat(state), rng)
    }

    pub fn gat<R: Rng + ?Sized>(config: LayerConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let state = GatState::new(config.in_dim, config.heads, config.out_per_head, rng);
        Self::from_scorer(config, Scorer::Gat(state), rng)
    }

    pub fn gatv2<R: Rng + ?Sized>(config: LayerConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let state = Gatv2State::new(config.in_dim, config.heads, config.out_per_head, rng);
        Self::from_scorer(config, Scorer::Gatv2(state), rng)
    }

    /// Wraps an explicit scorer; a linear shortcut, if needed, is Glorot-initialized.
    pub fn from_scorer<R: Rng + ?Sized>(
        config: LayerConfig,
        scorer: Scorer,
        rng: &mut R,
    ) -> Result<Self> {
        let residual = if !config.residual {
            Residual::None
        } else if config.in_dim == config.out_width() {
            Residual::Identity
        } else {
            Residual::Linear(glorot(config.in_dim, config.out_width(), rng))
        };
        Self::with_residual(config, scorer, residual)
    }

    pub fn with_residual(config: LayerConfig, scorer: Scorer, residual: Residual) -> Result<Self> {
        config.validate()?;
        let (heads, dout, in_dim) = match &scorer {
            Scorer::Qgat(s) => (s.heads, s.out_per_head, s.in_dim()),
            Scorer::Gat(s) => (s.heads, s.out_per_head, s.in_dim()),
            Scorer::Gatv2(s) => (s.heads, s.out_per_head, s.in_dim()),
        };
        if (heads, dout, in_dim) != (config.heads, config.out_per_head, config.in_dim) {
            return Err(QgatError::Config(format!(
                "scorer shape (h={heads}, d_out={dout}, d={in_dim}) disagrees with layer config"
            )));
        }
        match &residual {
            Residual::Identity if config.in_dim != config.out_width() => {
                return Err(QgatError::Config(
                    "identity residual needs in_dim == output width".into(),
                ))
            }
            Residual::Linear(m) if m.dim() != (config.in_dim, config.out_width()) => {
                return Err(QgatError::Config(
                    "residual shortcut has the wrong shape".into(),
                ))
            }
            _ => {}
        }
        Ok(Self {
            config,
            scorer,
            residual,
            version: 0,
        })
    }

    pub fn config(&self) -> &LayerConfig {
        &self.config
    }

    pub fn kind(&self) -> LayerKind {
        match self.scorer {
            Scorer::Qgat(_) => LayerKind::Qgat,
            Scorer::Gat(_) => LayerKind::Gat,
            Scorer::Gatv2(_) => LayerKind::Gatv2,
        }
    }

    pub fn scorer(&self) -> &Scorer {
        &self.scorer
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    fn spec(&self) -> AggregateSpec {
        AggregateSpec {
            heads: self.config.heads,
            out_per_head: self.config.out_per_head,
            merge: self.config.merge,
            activation: self.config.activation,
            dropout: self.config.dropout,
        }
    }

    /// Runs the layer. Passing an RNG turns on dropout (training mode).
    pub fn forward(
        &self,
        nb: &Neighborhood,
        h: &Array2<f64>,
        mut rng: Option<&mut dyn RngCore>,
    ) -> Result<(Array2<f64>, LayerTape)> {
        if h.dim() != (nb.n_nodes(), self.config.in_dim) {
            return Err(QgatError::Dimension(format!(
                "layer input is {:?}, expected ({}, {})",
                h.dim(),
                nb.n_nodes(),
                self.config.in_dim
            )));
        }
        let input_scale = match rng.as_deref_mut() {
            Some(r) if self.config.dropout > 0.0 => {
                Some(dropout_scale(r, h.dim(), self.config.dropout))
            }
            _ => None,
        };
        let dropped = match &input_scale {
            Some(scale) => h * scale,
            None => h.clone(),
        };
        let (logits, values, score) = match &self.scorer {
            Scorer::Qgat(s) => {
                let (l, v, t) = s.forward(nb, &dropped)?;
                (l, v, ScoreTape::Qgat(t))
            }
            Scorer::Gat(s) => {
                let (l, v, t) = s.forward(nb, &dropped)?;
                (l, v, ScoreTape::Gat(t))
            }
            Scorer::Gatv2(s) => {
                let (l, v, t) = s.forward(nb, &dropped)?;
                (l, v, ScoreTape::Gatv2(t))
            }
        };
        let (mut out, agg) = aggregate_forward(nb, &logits, &values, &self.spec(), rng);
        match &self.residual {
            Residual::None => {}
            Residual::Identity => out += &dropped,
            Residual::Linear(m) => out += &dropped.dot(m),
        }
        Ok((
            out,
            LayerTape {
                version: self.version,
                input_scale,
                dropped_input: dropped,
                logits,
                values,
                score,
                agg,
            },
        ))
    }

    /// Parameter gradients and `∂L/∂h` for the pass recorded on `tape`.
    pub fn backward(
        &self,
        nb: &Neighborhood,
        tape: &LayerTape,
        upstream: &Array2<f64>,
    ) -> Result<(ParamGrads, Array2<f64>)> {
        if tape.version != self.version {
            return Err(QgatError::StaleTape {
                recorded: tape.version,
                current: self.version,
            });
        }
        if upstream.dim() != (nb.n_nodes(), self.config.out_width()) {
            return Err(QgatError::Dimension(format!(
                "upstream gradient is {:?}, layer output is ({}, {})",
                upstream.dim(),
                nb.n_nodes(),
                self.config.out_width()
            )));
        }
        let (g_logits, g_values) =
            aggregate_backward(nb, &tape.values, &tape.agg, &self.spec(), upstream);
        let h = &tape.dropped_input;
        let (mut grads, mut g_h) = match (&self.scorer, &tape.score) {
            (Scorer::Qgat(s), ScoreTape::Qgat(t)) => s.backward(nb, h, t, &g_logits, &g_values)?,
            (Scorer::Gat(s), ScoreTape::Gat(t)) => s.backward(nb, h, t, &g_logits, &g_values),
            (Scorer::Gatv2(s), ScoreTape::Gatv2(t)) => s.backward(nb, h, t, &g_logits, &g_values),
            _ => {
                return Err(QgatError::Config(
                    "tape was recorded by a different layer kind".into(),
                ))
            }
        };
        match &self.residual {
            Residual::None => {}
            Residual::Identity => g_h += upstream,
            Residual::Linear(m) => {
                g_h += &upstream.dot(&m.t());
                grads.push(qgat::into_vec(h.t().dot(upstream)));
            }
        }
        if let Some(scale) = &tape.input_scale {
            g_h *= scale;
        }
        Ok((grads, g_h))
    }

    /// Named parameter tensors, flattened row-major.
    pub fn params(&self) -> Vec<(&'static str, &[f64])> {
        let mut out = match &self.scorer {
            Scorer::Qgat(s) => s.params(),
            Scorer::Gat(s) => s.params(),
            Scorer::Gatv2(s) => s.params(),
        };
        if let Residual::Linear(m) = &self.residual {
            out.push(("W_res", m.as_slice().expect("standard layout")));
        }
        out
    }

    /// Mutable parameter access; invalidates outstanding tapes.
    pub fn params_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        self.version += 1;
        let mut out = match &mut self.scorer {
            Scorer::Qgat(s) => s.params_mut(),
            Scorer::Gat(s) => s.params_mut(),
            Scorer::Gatv2(s) => s.params_mut(),
        };
        if let Residual::Linear(m) = &mut self.residual {
            out.push(("W_res", m.as_slice_mut().expect("standard layout")));
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|(_, p)| p.len()).sum()
    }
}
