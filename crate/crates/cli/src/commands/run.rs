use serde::Serialize;
use zne_core::inference::FitDiagnostics;
use zne_core::sim::make_executor;
use zne_core::{execute_with_zne, Circuit, Observable};

use super::zne_config;
use crate::{emit, read_input, CliError, RunArgs};

const DEFAULT_SCALES: [f64; 3] = [1.0, 2.0, 3.0];

#[derive(Serialize)]
struct Report {
    scale_factors: Vec<f64>,
    raw_values: Vec<Vec<f64>>,
    means: Vec<f64>,
    zne_value: f64,
    diagnostics: FitDiagnostics,
}

pub fn execute(args: &RunArgs) -> Result<(), CliError> {
    let circuit = Circuit::from_json(&read_input(&args.circuit, "circuit")?)
        .map_err(|e| CliError::input(format!("invalid circuit {}: {e}", args.circuit.display())))?;
    let observable = Observable::from_json(&read_input(&args.observable, "observable")?)
        .map_err(|e| CliError::input(format!("invalid observable {}: {e}", args.observable.display())))?;
    let common = &args.common;
    let mode = common.shots.mode(common.sampling, zne_core::seed::derive(common.seed, &[1]));
    let executor = make_executor(args.noise, observable, mode).map_err(|e| CliError::input(e.to_string()))?;
    let config = zne_config(args.factory.clone(), common, &DEFAULT_SCALES, common.seed);
    let result = execute_with_zne(&circuit, &executor, &config)?;
    let report = Report {
        scale_factors: result.scale_factors,
        raw_values: result.raw_values,
        means: result.means,
        zne_value: result.zne_value,
        diagnostics: result.diagnostics,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serialization is infallible");
    text.push('\n');
    emit(common.output.as_deref(), &text)
}
