//! Quantum graph attention: a differentiable statevector simulator, the
//! QGAT layer with GAT/GATv2 baselines, and the training harness around them.

pub mod attention;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod inductive;
pub mod statevector;
pub mod training;
pub mod vqc;

pub use error::{QgatError, Result};
