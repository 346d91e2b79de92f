//! Finite-difference verification of every analytic gradient: the circuit
//! (angles and encoded input), each attention layer kind, and a stacked
//! model. Reports the worst relative error per parameter tensor.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attention::{
    Activation, GraphAttentionLayer, LayerConfig, LayerKind, Merge, QuantumConfig, ValueProjection,
};
use crate::error::{QgatError, Result};
use crate::graph::Neighborhood;
use crate::training::{GnnModel, ModelConfig};
use crate::vqc::{build_layout, circuit_backward, circuit_forward, CircuitParams};

/// Absolute differences at or below this count as exact agreement.
pub const ABS_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradcheckConfig {
    /// Random circuit configurations, cycling over the qubit and layer grids.
    pub circuit_configs: usize,
    pub circuit_qubits: Vec<usize>,
    pub circuit_layers: Vec<usize>,
    pub circuit_step: f64,
    pub circuit_tolerance: f64,
    pub graph_nodes: usize,
    pub heads: usize,
    pub n_qubits: usize,
    pub layer_step: f64,
    pub layer_tolerance: f64,
    pub seed: u64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            circuit_configs: 50,
            circuit_qubits: vec![2, 3, 4],
            circuit_layers: vec![1, 2, 3],
            circuit_step: 1e-6,
            circuit_tolerance: 1e-5,
            graph_nodes: 4,
            heads: 2,
            n_qubits: 2,
            layer_step: 1e-4,
            layer_tolerance: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorReport {
    pub component: String,
    pub tensor: String,
    pub entries: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl TensorReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub tensors: Vec<TensorReport>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.tensors.iter().all(TensorReport::passed)
    }

    /// Worst error per component.
    pub fn by_component(&self) -> Vec<(String, f64, bool)> {
        let mut out: Vec<(String, f64, bool)> = Vec::new();
        for t in &self.tensors {
            match out.iter_mut().find(|(c, _, _)| *c == t.component) {
                Some(entry) => {
                    entry.1 = entry.1.max(t.max_rel_error);
                    entry.2 &= t.passed();
                }
                None => out.push((t.component.clone(), t.max_rel_error, t.passed())),
            }
        }
        out
    }
}

/// Test hook: adds `offset` to the first analytic entry of every tensor
/// whose qualified name `component/tensor` contains `pattern`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corruption {
    pub pattern: String,
    pub offset: f64,
}

/// `|a − n| / max(|a|, |n|)`, or zero when `|a − n| ≤ ABS_FLOOR`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff <= ABS_FLOOR {
        0.0
    } else {
        diff / analytic.abs().max(numeric.abs())
    }
}

struct Probe<'a> {
    component: String,
    tolerance: f64,
    step: f64,
    corruption: Option<&'a Corruption>,
}

impl Probe<'_> {
    /// Compares `analytic` with central differences of `eval` under
    /// `perturb(state, entry, delta)`.
    fn tensor<T: Clone>(
        &self,
        name: &str,
        base: &T,
        mut analytic: Vec<f64>,
        eval: &dyn Fn(&T) -> Result<f64>,
        perturb: &dyn Fn(&mut T, usize, f64),
    ) -> Result<TensorReport> {
        if let Some(c) = self.corruption {
            if format!("{}/{name}", self.component).contains(&c.pattern) && !analytic.is_empty() {
                analytic[0] += c.offset;
            }
        }
        let mut worst: f64 = 0.0;
        for (i, &a) in analytic.iter().enumerate() {
            let mut plus = base.clone();
            perturb(&mut plus, i, self.step);
            let mut minus = base.clone();
            perturb(&mut minus, i, -self.step);
            let numeric = (eval(&plus)? - eval(&minus)?) / (2.0 * self.step);
            worst = worst.max(relative_error(a, numeric));
        }
        Ok(TensorReport {
            component: self.component.clone(),
            tensor: name.to_string(),
            entries: analytic.len(),
            max_rel_error: worst,
            tolerance: self.tolerance,
        })
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Adjoint circuit gradients against finite differences on random inputs.
pub fn check_circuits(
    cfg: &GradcheckConfig,
    corruption: Option<&Corruption>,
) -> Result<Vec<TensorReport>> {
    if cfg.circuit_qubits.is_empty() || cfg.circuit_layers.is_empty() {
        return Err(QgatError::Config(
            "circuit size grids must be non-empty".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let grid: Vec<(usize, usize)> = cfg
        .circuit_qubits
        .iter()
        .flat_map(|&q| cfg.circuit_layers.iter().map(move |&l| (q, l)))
        .collect();
    let mut reports = Vec::new();
    for c in 0..cfg.circuit_configs {
        let (nq, nl) = grid[c % grid.len()];
        let layout = build_layout(nq, nl)?;
        let params = CircuitParams::random(nl, nq, &mut rng);
        let input = uniform(&mut rng, 1 << nq, -1.0, 1.0);
        let upstream = uniform(&mut rng, nq, -1.0, 1.0);
        let grads = circuit_backward(&input, &params, &layout, &upstream)?;
        let probe = Probe {
            component: format!("circuit#{c}[n_q={nq},L={nl}]"),
            tolerance: cfg.circuit_tolerance,
            step: cfg.circuit_step,
            corruption,
        };
        let objective = |p: &CircuitParams, x: &[f64]| -> Result<f64> {
            let z = circuit_forward(x, p, &layout)?;
            Ok(z.iter().zip(&upstream).map(|(a, b)| a * b).sum())
        };
        let state = (params, input);
        reports.push(probe.tensor(
            "theta",
            &state,
            grads.params,
            &|s| objective(&s.0, &s.1),
            &|s, i, d| s.0.as_mut_slice()[i] += d,
        )?);
        reports.push(probe.tensor(
            "input",
            &state,
            grads.input,
            &|s| objective(&s.0, &s.1),
            &|s, i, d| s.1[i] += d,
        )?);
    }
    Ok(reports)
}

/// Fixed small graph: a path plus one chord, every node with a self-loop.
fn test_graph(n: usize) -> Neighborhood {
    let mut edges = Vec::new();
    for i in 0..n.saturating_sub(1) {
        edges.push((i, i + 1));
        edges.push((i + 1, i));
    }
    if n > 3 {
        edges.push((0, n - 1));
    }
    Neighborhood::from_edges(n, &edges, true)
}

fn weighted_sum(out: &Array2<f64>, weights: &Array2<f64>) -> f64 {
    (out * weights).sum()
}

/// Scalar-loss gradients of one layer of each kind, and of a two-layer
/// QGAT model, against finite differences.
pub fn check_layers(
    cfg: &GradcheckConfig,
    corruption: Option<&Corruption>,
) -> Result<Vec<TensorReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let n = cfg.graph_nodes.max(2);
    let nb = test_graph(n);
    let in_dim = 3;
    let x = Array2::from_shape_vec((n, in_dim), uniform(&mut rng, n * in_dim, -1.0, 1.0))
        .expect("shape");
    let mut reports = Vec::new();

    for kind in [LayerKind::Qgat, LayerKind::Gat, LayerKind::Gatv2] {
        for (vp, suffix) in [
            (ValueProjection::SharedSlice, ""),
            (ValueProjection::Independent, "+W_value"),
        ] {
            if kind != LayerKind::Qgat && vp == ValueProjection::Independent {
                continue;
            }
            let lc = LayerConfig {
                in_dim,
                heads: cfg.heads,
                out_per_head: 2,
                merge: Merge::Concat,
                activation: Activation::Elu,
                dropout: 0.0,
                residual: true,
            };
            let quantum = QuantumConfig {
                n_qubits: cfg.n_qubits,
                circuit_layers: 2,
                value_projection: vp,
            };
            let layer = match kind {
                LayerKind::Qgat => GraphAttentionLayer::qgat(lc, &quantum, &mut rng)?,
                LayerKind::Gat => GraphAttentionLayer::gat(lc, &mut rng)?,
                LayerKind::Gatv2 => GraphAttentionLayer::gatv2(lc, &mut rng)?,
            };
            let width = layer.config().out_width();
            let weights =
                Array2::from_shape_vec((n, width), uniform(&mut rng, n * width, -1.0, 1.0))
                    .expect("shape");
            let (_, tape) = layer.forward(&nb, &x, None)?;
            let (grads, g_x) = layer.backward(&nb, &tape, &weights)?;
            let probe = Probe {
                component: format!("layer[{kind}{suffix}]"),
                tolerance: cfg.layer_tolerance,
                step: cfg.layer_step,
                corruption,
            };
            let eval = |s: &(GraphAttentionLayer, Array2<f64>)| -> Result<f64> {
                Ok(weighted_sum(&s.0.forward(&nb, &s.1, None)?.0, &weights))
            };
            let state = (layer.clone(), x.clone());
            let names: Vec<&'static str> = layer.params().into_iter().map(|(n, _)| n).collect();
            for (t, (name, g)) in names.into_iter().zip(grads).enumerate() {
                reports.push(probe.tensor(name, &state, g, &eval, &|s, i, d| {
                    s.0.params_mut()[t].1[i] += d
                })?);
            }
            let gx: Vec<f64> = g_x.iter().copied().collect();
            reports.push(probe.tensor("x", &state, gx, &eval, &|s, i, d| {
                s.1.as_slice_mut().expect("standard layout")[i] += d
            })?);
        }
    }

    let model_cfg = ModelConfig {
        kind: LayerKind::Qgat,
        hidden_dims: vec![2],
        heads_per_layer: vec![cfg.heads, cfg.heads],
        n_qubits: cfg.n_qubits,
        entangling_layers: 1,
        dropout: 0.0,
        ..ModelConfig::default()
    };
    let model = GnnModel::new(&model_cfg, in_dim, 2, &mut rng)?;
    let weights =
        Array2::from_shape_vec((n, 2), uniform(&mut rng, n * 2, -1.0, 1.0)).expect("shape");
    let (_, tape) = model.forward(&nb, &x, None)?;
    let (grads, _) = model.backward(&nb, &tape, &weights)?;
    let probe = Probe {
        component: "model[qgat x2]".into(),
        tolerance: cfg.layer_tolerance,
        step: cfg.layer_step,
        corruption,
    };
    let eval = |m: &GnnModel| -> Result<f64> { Ok(weighted_sum(&m.predict(&nb, &x)?, &weights)) };
    let names: Vec<String> = model.params().into_iter().map(|(n, _)| n).collect();
    for (t, (name, g)) in names.iter().zip(grads).enumerate() {
        reports.push(probe.tensor(name, &model, g, &eval, &|m, i, d| {
            m.params_mut()[t].1[i] += d
        })?);
    }
    Ok(reports)
}

/// Runs both suites.
pub fn run_gradcheck(
    cfg: &GradcheckConfig,
    corruption: Option<&Corruption>,
) -> Result<GradcheckReport> {
    let mut tensors = check_circuits(cfg, corruption)?;
    tensors.extend(check_layers(cfg, corruption)?);
    Ok(GradcheckReport { tensors })
}
