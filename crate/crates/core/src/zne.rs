//! The extrapolation pipeline: scale noise, execute, fit, extrapolate.

use std::error::Error;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::Circuit;
use crate::inference::{build_factory, Factory, FactoryKind, FitDiagnostics, InferenceError};
use crate::scaling::{fold_global, fold_local, FoldStrategy, GateFidelities, ScalingError};
use crate::seed;

pub type ExecutorError = Box<dyn Error + Send + Sync>;

/// Evaluates a circuit to one real expectation value.
///
/// Any `Fn(&Circuit) -> Result<f64, ExecutorError> + Sync` closure is an
/// executor. Implementations report [`Executor::is_reentrant`] only when
/// concurrent calls return exactly what the same calls made sequentially would.
pub trait Executor: Sync {
    fn execute(&self, circuit: &Circuit) -> Result<f64, ExecutorError>;

    fn is_reentrant(&self) -> bool {
        false
    }
}

impl<F> Executor for F
where
    F: Fn(&Circuit) -> Result<f64, ExecutorError> + Sync,
{
    fn execute(&self, circuit: &Circuit) -> Result<f64, ExecutorError> {
        self(circuit)
    }
}

/// Executor from a pure function of the circuit; reentrant by construction.
#[derive(Debug, Clone, Copy)]
pub struct PureExecutor<F>(pub F);

impl<F> Executor for PureExecutor<F>
where
    F: Fn(&Circuit) -> f64 + Sync,
{
    fn execute(&self, circuit: &Circuit) -> Result<f64, ExecutorError> {
        Ok((self.0)(circuit))
    }

    fn is_reentrant(&self) -> bool {
        true
    }
}

/// Gate selection order for local folding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldOrder {
    Left,
    Right,
    /// Reshuffled for every scale factor and repetition from the run seed.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScaleMethod {
    Local { order: FoldOrder, fidelities: Option<GateFidelities> },
    Global,
}

impl ScaleMethod {
    pub fn local(order: FoldOrder) -> ScaleMethod {
        ScaleMethod::Local { order, fidelities: None }
    }

    fn is_stochastic(&self) -> bool {
        matches!(self, ScaleMethod::Local { order: FoldOrder::Random, .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZneConfig {
    pub factory: FactoryKind,
    /// Used by static factories; adaptive ones schedule their own.
    pub scale_factors: Vec<f64>,
    pub scaling: ScaleMethod,
    pub num_to_average: usize,
    pub seed: u64,
    /// Runs the repetitions of one scale factor concurrently when the executor
    /// is reentrant. Results are identical to sequential runs.
    pub parallel: bool,
}

impl Default for ZneConfig {
    fn default() -> ZneConfig {
        ZneConfig {
            factory: FactoryKind::RICHARDSON,
            scale_factors: vec![1.0, 2.0, 3.0],
            scaling: ScaleMethod::local(FoldOrder::Random),
            num_to_average: 1,
            seed: 0,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZneResult {
    pub scale_factors: Vec<f64>,
    /// `num_to_average` executor outputs per scale factor.
    pub raw_values: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub zne_value: f64,
    pub diagnostics: FitDiagnostics,
    /// Gate count of each executed circuit, aligned with `raw_values`.
    pub gate_counts: Vec<Vec<usize>>,
}

#[derive(Debug, Error)]
pub enum ZneError {
    #[error(transparent)]
    Scaling(#[from] ScalingError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("executor failed at scale factor {scale}: {source}")]
    Executor { scale: f64, source: ExecutorError },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

fn scaled_circuit(
    circuit: &Circuit,
    scale: f64,
    method: &ScaleMethod,
    seed: u64,
    path: [u64; 2],
) -> Result<Circuit, ScalingError> {
    if scale == 1.0 {
        return Ok(circuit.clone());
    }
    match method {
        ScaleMethod::Global => fold_global(circuit, scale),
        ScaleMethod::Local { order, fidelities } => {
            let strategy = match order {
                FoldOrder::Left => FoldStrategy::FromLeft,
                FoldOrder::Right => FoldStrategy::FromRight,
                FoldOrder::Random => FoldStrategy::AtRandom { seed: seed::derive(seed, &path) },
            };
            fold_local(circuit, scale, strategy, fidelities.as_ref())
        }
    }
}

/// Runs `factory` to completion, then reduces it.
///
/// Use this for factories outside [`FactoryKind`]; `config.factory` and
/// `config.scale_factors` are ignored.
pub fn execute_with_factory<E: Executor + ?Sized>(
    circuit: &Circuit,
    executor: &E,
    factory: &mut dyn Factory,
    config: &ZneConfig,
) -> Result<ZneResult, ZneError> {
    if config.num_to_average == 0 {
        return Err(ZneError::InvalidConfig("num_to_average must be at least 1".into()));
    }
    let concurrent = config.parallel && executor.is_reentrant();
    let mut raw_values = Vec::new();
    let mut gate_counts = Vec::new();
    let mut means = Vec::new();
    while !factory.is_done() {
        let scale = factory.next_scale()?;
        let idx = factory.history().len() as u64;
        let reps = config.num_to_average;
        let circuits: Vec<Circuit> = if config.scaling.is_stochastic() {
            (0..reps as u64)
                .map(|rep| scaled_circuit(circuit, scale, &config.scaling, config.seed, [idx, rep]))
                .collect::<Result<_, _>>()?
        } else {
            vec![scaled_circuit(circuit, scale, &config.scaling, config.seed, [idx, 0])?; reps]
        };
        let run = |c: &Circuit| executor.execute(c).map_err(|source| ZneError::Executor { scale, source });
        let values: Vec<f64> = if concurrent {
            circuits.par_iter().map(run).collect::<Result<_, _>>()?
        } else {
            circuits.iter().map(run).collect::<Result<_, _>>()?
        };
        let mean = values.iter().sum::<f64>() / reps as f64;
        factory.push(scale, mean)?;
        gate_counts.push(circuits.iter().map(Circuit::len).collect());
        raw_values.push(values);
        means.push(mean);
    }
    let (zne_value, diagnostics) = factory.reduce()?;
    Ok(ZneResult {
        scale_factors: factory.history().scale_factors().to_vec(),
        raw_values,
        means,
        zne_value,
        diagnostics,
        gate_counts,
    })
}

/// Zero-noise estimate of `executor` on `circuit`.
///
/// For each scale factor the factory schedules, `num_to_average` scaled
/// circuits are executed and their mean is pushed. Scale factor 1 always runs
/// the original circuit. Random folding for scale index `i` and repetition `r`
/// is seeded from `(config.seed, i, r)`. Any executor error aborts the run.
pub fn execute_with_zne<E: Executor + ?Sized>(
    circuit: &Circuit,
    executor: &E,
    config: &ZneConfig,
) -> Result<ZneResult, ZneError> {
    let mut factory = build_factory(&config.factory, &config.scale_factors)?;
    execute_with_factory(circuit, executor, factory.as_mut(), config)
}

/// Executor whose output is the zero-noise estimate of the wrapped executor.
#[derive(Debug, Clone)]
pub struct MitigatedExecutor<E> {
    inner: E,
    config: ZneConfig,
}

impl<E: Executor> MitigatedExecutor<E> {
    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn config(&self) -> &ZneConfig {
        &self.config
    }
}

impl<E: Executor> Executor for MitigatedExecutor<E> {
    fn execute(&self, circuit: &Circuit) -> Result<f64, ExecutorError> {
        Ok(execute_with_zne(circuit, &self.inner, &self.config)?.zne_value)
    }

    fn is_reentrant(&self) -> bool {
        self.inner.is_reentrant()
    }
}

pub fn mitigate_executor<E: Executor>(executor: E, config: ZneConfig) -> MitigatedExecutor<E> {
    MitigatedExecutor { inner: executor, config }
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::circuit::Gate;
    use crate::inference::{extrapolate, FactoryHistory, StaticFactory};
    use crate::sim::{make_executor, ExecutionMode, NoiseModel, Observable};

    fn bell() -> Circuit {
        Circuit::from_gates(2, [Gate::h(0), Gate::cnot(0, 1)]).unwrap()
    }

    fn ten_gates() -> Circuit {
        Circuit::from_gates(1, (0..10).map(|i| if i % 2 == 0 { Gate::h(0) } else { Gate::x(0) })).unwrap()
    }

    fn noiseless_projector() -> crate::sim::SimExecutor {
        make_executor(NoiseModel::none(), Observable::all_zeros_projector(2), ExecutionMode::Exact).unwrap()
    }

    #[test]
    fn noiseless_bell_default_config() {
        let r = execute_with_zne(&bell(), &noiseless_projector(), &ZneConfig::default()).unwrap();
        assert!((r.zne_value - 0.5).abs() < 1e-9);
        assert_eq!(r.scale_factors, vec![1.0, 2.0, 3.0]);
        assert_eq!(r.gate_counts, vec![vec![2], vec![4], vec![6]]);
    }

    #[test]
    fn synthetic_linear_executor() {
        let exec = PureExecutor(|c: &Circuit| 1.0 - 0.1 * c.len() as f64 / 10.0);
        let config = ZneConfig {
            factory: FactoryKind::Linear,
            scale_factors: vec![1.0, 2.0],
            scaling: ScaleMethod::local(FoldOrder::Left),
            ..ZneConfig::default()
        };
        let r = execute_with_zne(&ten_gates(), &exec, &config).unwrap();
        assert_eq!(r.means.len(), 2);
        assert!((r.means[0] - 0.9).abs() < 1e-12 && (r.means[1] - 0.8).abs() < 1e-12);
        assert!((r.zne_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn averages_exactly_num_to_average_calls() {
        let rng = Mutex::new(ChaCha8Rng::seed_from_u64(5));
        let calls = AtomicUsize::new(0);
        let exec = |_: &Circuit| -> Result<f64, ExecutorError> {
            calls.fetch_add(1, Ordering::SeqCst);
            Ok(rng.lock().unwrap().random::<f64>())
        };
        let config = ZneConfig { num_to_average: 3, ..ZneConfig::default() };
        let r = execute_with_zne(&bell(), &exec, &config).unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 9);
        for (raw, mean) in r.raw_values.iter().zip(&r.means) {
            assert_eq!(raw.len(), 3);
            assert_eq!(*mean, (raw[0] + raw[1] + raw[2]) / 3.0);
        }
        let hist = FactoryHistory::from_pairs(r.scale_factors.clone(), r.means.clone()).unwrap();
        assert_eq!(extrapolate(&FactoryKind::RICHARDSON, &hist).unwrap().0, r.zne_value);
    }

    #[test]
    fn executor_errors_carry_scale() {
        let exec = |c: &Circuit| -> Result<f64, ExecutorError> {
            if c.len() > 2 {
                Err("device offline".into())
            } else {
                Ok(1.0)
            }
        };
        match execute_with_zne(&bell(), &exec, &ZneConfig::default()) {
            Err(ZneError::Executor { scale, .. }) => assert_eq!(scale, 2.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mitigated_executor_matches_pipeline() {
        let config = ZneConfig::default();
        let direct = execute_with_zne(&bell(), &noiseless_projector(), &config).unwrap().zne_value;
        let wrapped = mitigate_executor(noiseless_projector(), config.clone());
        assert_eq!(wrapped.execute(&bell()).unwrap(), direct);
        assert!((direct - 0.5).abs() < 1e-9);
    }

    #[test]
    fn double_wrap_matches_nested_pipeline() {
        let noise = NoiseModel::depolarizing(0.02).unwrap();
        let base = || make_executor(noise, Observable::all_zeros_projector(2), ExecutionMode::Exact).unwrap();
        let config = ZneConfig { factory: FactoryKind::Linear, ..ZneConfig::default() };
        let twice = mitigate_executor(mitigate_executor(base(), config.clone()), config.clone());
        let got = twice.execute(&bell()).unwrap();

        // oracle: outer pipeline whose executor runs the inner pipeline by hand
        let inner =
            |c: &Circuit| -> Result<f64, ExecutorError> { Ok(execute_with_zne(c, &base(), &config)?.zne_value) };
        let want = execute_with_zne(&bell(), &inner, &config).unwrap().zne_value;
        assert_eq!(got, want);
        assert!(got.is_finite());
    }

    #[test]
    fn parallel_matches_sequential() {
        let noise = NoiseModel::depolarizing(0.01).unwrap();
        let exec = make_executor(noise, Observable::all_zeros_projector(2), ExecutionMode::Exact).unwrap();
        let seq = ZneConfig { num_to_average: 4, seed: 11, ..ZneConfig::default() };
        let par = ZneConfig { parallel: true, ..seq.clone() };
        let a = execute_with_zne(&bell(), &exec, &seq).unwrap();
        let b = execute_with_zne(&bell(), &exec, &par).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn custom_factory() {
        // clamps the linear estimate to the physical range of a probability
        struct Clipped(StaticFactory);
        impl Factory for Clipped {
            fn next_scale(&self) -> Result<f64, InferenceError> {
                self.0.next_scale()
            }
            fn is_done(&self) -> bool {
                self.0.is_done()
            }
            fn push(&mut self, scale: f64, value: f64) -> Result<(), InferenceError> {
                self.0.push(scale, value)
            }
            fn reduce(&self) -> Result<(f64, FitDiagnostics), InferenceError> {
                self.0.reduce().map(|(v, d)| (v.clamp(0.0, 1.0), d))
            }
            fn history(&self) -> &FactoryHistory {
                self.0.history()
            }
        }
        let exec = PureExecutor(|c: &Circuit| 1.05 - 0.1 * c.len() as f64 / 10.0);
        let mut factory = Clipped(StaticFactory::linear(vec![1.0, 3.0]).unwrap());
        let config = ZneConfig { scaling: ScaleMethod::Global, ..ZneConfig::default() };
        let r = execute_with_factory(&ten_gates(), &exec, &mut factory, &config).unwrap();
        assert_eq!(r.zne_value, 1.0);
    }

    #[test]
    fn rejects_zero_repetitions() {
        let config = ZneConfig { num_to_average: 0, ..ZneConfig::default() };
        assert!(matches!(execute_with_zne(&bell(), &noiseless_projector(), &config), Err(ZneError::InvalidConfig(_))));
    }
}
