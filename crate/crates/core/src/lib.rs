//! Zero-noise extrapolation for gate-level quantum circuits.
//!
//! The pipeline has three independent pieces:
//!
//! - [`scaling`] turns a circuit into noise-amplified but logically
//!   equivalent circuits by unitary folding;
//! - an [`Executor`](zne::Executor) evaluates a circuit to an expectation
//!   value (the [`sim`] module provides a noisy density-matrix executor);
//! - a [`Factory`](inference::Factory) from [`inference`] fits the
//!   `(scale factor, value)` pairs and extrapolates to zero noise.
//!
//! [`zne::execute_with_zne`] ties them together.

pub mod circuit;
pub mod inference;
pub mod scaling;
pub mod seed;
pub mod sim;
pub mod zne;

pub use circuit::{Circuit, Gate, GateKind};
pub use inference::{Factory, FactoryKind, FitDiagnostics};
pub use scaling::{fold_global, fold_local, FoldStrategy, GateFidelities};
pub use sim::{ExecutionMode, NoiseModel, Observable};
pub use zne::{execute_with_zne, mitigate_executor, Executor, ScaleMethod, ZneConfig, ZneResult};
