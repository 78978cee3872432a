//! Mirror-circuit benchmark. Every circuit composes to the identity, so the
//! ideal survival probability of `|0...0>` is exactly 1.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use zne_core::circuit::{identity_deviation, mirror_circuit};
use zne_core::seed::derive;
use zne_core::sim::make_executor;
use zne_core::{execute_with_zne, Circuit, FactoryKind, Observable};

use super::{mean_std, zne_config};
use crate::{emit, BenchRbArgs, CliError};

const DEFAULT_SCALES: [f64; 5] = [1.0, 1.5, 2.0, 2.5, 3.0];
const IDENTITY_TOL: f64 = 1e-10;
pub const HEADER: &str =
    "record,trial,factory,unmitigated,mitigated,abs_err_unmitigated,abs_err_mitigated,fit_stderr,identity_ok";

pub fn default_factories() -> Vec<FactoryKind> {
    vec![
        FactoryKind::Linear,
        FactoryKind::RICHARDSON,
        FactoryKind::Richardson { first_middle_last: true },
        FactoryKind::Poly { order: 2 },
        FactoryKind::Exp { asymptote: Some(0.25) },
    ]
}

#[derive(Debug, Clone)]
struct Row {
    unmitigated: f64,
    mitigated: f64,
    fit_stderr: Option<f64>,
    identity_ok: bool,
}

fn is_identity(circuit: &Circuit) -> bool {
    identity_deviation(circuit).is_ok_and(|d| d < IDENTITY_TOL)
}

/// One row per factory for one trial.
fn run_trial(args: &BenchRbArgs, factories: &[FactoryKind], trial: u64) -> Result<Vec<Row>, CliError> {
    let common = &args.common;
    let circuit =
        mirror_circuit(&mut ChaCha8Rng::seed_from_u64(derive(common.seed, &[trial, 0])), args.qubits, args.depth);
    let identity_ok = is_identity(&circuit);
    let obs = Observable::all_zeros_projector(args.qubits);
    let executor = |path: &[u64]| {
        let mode = common.shots.mode(common.sampling, derive(common.seed, path));
        make_executor(args.noise, obs.clone(), mode).map_err(|e| CliError::input(e.to_string()))
    };
    let unmitigated = executor(&[trial, 1])?.evaluate(&circuit).map_err(|e| CliError::input(e.to_string()))?;
    factories
        .iter()
        .enumerate()
        .map(|(k, kind)| {
            let config = zne_config(kind.clone(), common, &DEFAULT_SCALES, derive(common.seed, &[trial, 2, k as u64]));
            let result = execute_with_zne(&circuit, &executor(&[trial, 3, k as u64])?, &config)?;
            Ok(Row {
                unmitigated,
                mitigated: result.zne_value,
                fit_stderr: result.diagnostics.intercept_stderr,
                identity_ok,
            })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn execute(args: &BenchRbArgs) -> Result<(), CliError> {
    if args.depth == 0 || !args.depth.is_multiple_of(2) {
        return Err(CliError::input(format!("depth must be even and positive, got {}", args.depth)));
    }
    if args.trials == 0 {
        return Err(CliError::input("trials must be at least 1"));
    }
    if args.qubits == 0 || args.qubits > zne_core::circuit::MAX_DENSE_QUBITS {
        return Err(CliError::input(format!("qubits must lie in 1..={}", zne_core::circuit::MAX_DENSE_QUBITS)));
    }
    let factories = if args.factory.is_empty() { default_factories() } else { args.factory.clone() };
    let rows: Vec<Vec<Row>> =
        (0..args.trials as u64).into_par_iter().map(|t| run_trial(args, &factories, t)).collect::<Result<_, _>>()?;

    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for (t, trial_rows) in rows.iter().enumerate() {
        for (kind, r) in factories.iter().zip(trial_rows) {
            let _ = writeln!(
                out,
                "trial,{t},{},{},{},{},{},{},{}",
                kind.label(),
                r.unmitigated,
                r.mitigated,
                (r.unmitigated - 1.0).abs(),
                (r.mitigated - 1.0).abs(),
                opt(r.fit_stderr),
                r.identity_ok
            );
        }
    }
    for (k, kind) in factories.iter().enumerate() {
        let column = |f: &dyn Fn(&Row) -> f64| rows.iter().map(|tr| f(&tr[k])).collect::<Vec<f64>>();
        let stats = [
            mean_std(&column(&|r| r.unmitigated)),
            mean_std(&column(&|r| r.mitigated)),
            mean_std(&column(&|r| (r.unmitigated - 1.0).abs())),
            mean_std(&column(&|r| (r.mitigated - 1.0).abs())),
        ];
        let stderrs: Vec<f64> = rows.iter().filter_map(|tr| tr[k].fit_stderr).collect();
        let stderr_stats = (!stderrs.is_empty()).then(|| mean_std(&stderrs));
        let all_ok = rows.iter().all(|tr| tr[k].identity_ok);
        for (record, pick) in [("mean", 0usize), ("std", 1)] {
            let get = |s: (f64, f64)| if pick == 0 { s.0 } else { s.1 };
            let _ = writeln!(
                out,
                "{record},,{},{},{},{},{},{},{all_ok}",
                kind.label(),
                get(stats[0]),
                get(stats[1]),
                get(stats[2]),
                get(stats[3]),
                opt(stderr_stats.map(get)),
            );
        }
    }
    emit(args.common.output.as_deref(), &out)
}
