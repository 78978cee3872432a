//! H2 energy surface with the one-parameter ansatz `exp(-i theta X0 Y1) |01>`,
//! minimized over a uniform angle grid for every bond length.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Deserialize;
use zne_core::seed::derive;
use zne_core::sim::{expectation, make_executor, simulate};
use zne_core::{execute_with_zne, Circuit, Gate, NoiseModel, Observable};

use super::zne_config;
use crate::{emit, read_input, BenchH2Args, CliError};

const DEFAULT_SCALES: [f64; 3] = [1.0, 2.0, 3.0];
const DEFAULT_NUM_TO_AVERAGE: usize = 5;
pub const HEADER: &str = "record,noise,r,noiseless,unmitigated,mitigated";

/// One bond length and the coefficients of
/// `g0 I + g1 Z0 + g2 Z1 + g3 Z0 Z1 + g4 X0 X1 + g5 Y0 Y1`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientRow {
    pub r: f64,
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    pub g5: f64,
}

impl CoefficientRow {
    pub fn hamiltonian(&self) -> Observable {
        Observable::from_terms(&[
            (self.g0, "II"),
            (self.g1, "ZI"),
            (self.g2, "IZ"),
            (self.g3, "ZZ"),
            (self.g4, "XX"),
            (self.g5, "YY"),
        ])
        .expect("fixed two-qubit terms")
    }
}

/// Parses the coefficient file: header `r,g0,...,g5`, `#` comment lines,
/// strictly increasing `r`.
pub fn read_coefficients(text: &str) -> Result<Vec<CoefficientRow>, CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CliError::input(format!("bad coefficient CSV: {e}")))?.clone();
    let expected = ["r", "g0", "g1", "g2", "g3", "g4", "g5"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(CliError::input(format!("coefficient header must be `{}`", expected.join(","))));
    }
    let rows: Vec<CoefficientRow> = reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| CliError::input(format!("coefficient row {}: {e}", i + 1))))
        .collect::<Result<_, _>>()?;
    if rows.is_empty() {
        return Err(CliError::input("coefficient file has no rows"));
    }
    if rows.windows(2).any(|w| !(w[1].r > w[0].r)) {
        return Err(CliError::input("bond lengths must be strictly increasing"));
    }
    Ok(rows)
}

/// `|01>` followed by `exp(-i theta X0 Y1)`: basis change to `Z0 Z1`,
/// `exp(-i theta Z0 Z1)` as CNOT-RZ-CNOT, basis change back.
pub fn ansatz(theta: f64) -> Circuit {
    Circuit::from_gates(
        2,
        [
            Gate::x(1),
            Gate::h(0),
            Gate::rx(1, FRAC_PI_2),
            Gate::cnot(0, 1),
            Gate::rz(1, 2.0 * theta),
            Gate::cnot(0, 1),
            Gate::h(0),
            Gate::rx(1, -FRAC_PI_2),
        ],
    )
    .expect("fixed two-qubit ansatz")
}

/// `points` evenly spaced angles over `[-pi/2, pi/2]`; a single point is 0.
pub fn theta_grid(points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.0];
    }
    (0..points).map(|k| -FRAC_PI_2 + k as f64 * 2.0 * FRAC_PI_2 / (points - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy)]
struct Energies {
    noiseless: f64,
    unmitigated: f64,
    mitigated: f64,
}

fn minimum(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::INFINITY, f64::min)
}

fn surface_point(
    args: &BenchH2Args,
    row: &CoefficientRow,
    noise: NoiseModel,
    grid: &[f64],
    path: [u64; 2],
) -> Result<Energies, CliError> {
    let common = &args.common;
    let h = row.hamiltonian();
    let sim_err = |e: zne_core::sim::SimError| CliError::input(e.to_string());
    let mut noiseless = Vec::with_capacity(grid.len());
    let mut unmitigated = Vec::with_capacity(grid.len());
    let mut mitigated = Vec::with_capacity(grid.len());
    for (k, &theta) in grid.iter().enumerate() {
        let k = k as u64;
        let circuit = ansatz(theta);
        noiseless.push(expectation(&simulate(&circuit, &NoiseModel::none()).map_err(sim_err)?, &h).map_err(sim_err)?);
        let executor = |tag: u64| {
            let mode = common.shots.mode(common.sampling, derive(common.seed, &[path[0], path[1], k, tag]));
            make_executor(noise, h.clone(), mode).map_err(sim_err)
        };
        unmitigated.push(executor(0)?.evaluate(&circuit).map_err(sim_err)?);
        let mut config =
            zne_config(args.factory.clone(), common, &DEFAULT_SCALES, derive(common.seed, &[path[0], path[1], k, 2]));
        config.num_to_average = common.num_to_average.unwrap_or(DEFAULT_NUM_TO_AVERAGE);
        mitigated.push(execute_with_zne(&circuit, &executor(1)?, &config)?.zne_value);
    }
    Ok(Energies {
        noiseless: minimum(noiseless.into_iter()),
        unmitigated: minimum(unmitigated.into_iter()),
        mitigated: minimum(mitigated.into_iter()),
    })
}

/// `||e - e0||_2 / ||e0||_2`.
pub fn relative_l2(e: &[f64], e0: &[f64]) -> f64 {
    let num: f64 = e.iter().zip(e0).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = e0.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

pub fn execute(args: &BenchH2Args) -> Result<(), CliError> {
    if args.theta_points == 0 {
        return Err(CliError::input("theta grid needs at least one point"));
    }
    let rows = read_coefficients(&read_input(&args.coeffs, "coefficient file")?)?;
    let noises = if args.noise.is_empty() {
        vec![NoiseModel::depolarizing(0.005).expect("valid"), NoiseModel::depolarizing(0.02).expect("valid")]
    } else {
        args.noise.clone()
    };
    let grid = theta_grid(args.theta_points);

    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    let mut summaries = Vec::with_capacity(noises.len());
    for (n, &noise) in noises.iter().enumerate() {
        let surface: Vec<Energies> = rows
            .par_iter()
            .enumerate()
            .map(|(i, row)| surface_point(args, row, noise, &grid, [n as u64, i as u64]))
            .collect::<Result<_, _>>()?;
        for (row, e) in rows.iter().zip(&surface) {
            let _ = writeln!(out, "energy,{noise},{},{},{},{}", row.r, e.noiseless, e.unmitigated, e.mitigated);
        }
        let e0: Vec<f64> = surface.iter().map(|e| e.noiseless).collect();
        let raw: Vec<f64> = surface.iter().map(|e| e.unmitigated).collect();
        let zne: Vec<f64> = surface.iter().map(|e| e.mitigated).collect();
        summaries.push((noise, relative_l2(&raw, &e0), relative_l2(&zne, &e0)));
    }
    for (noise, raw, zne) in summaries {
        let _ = writeln!(out, "rel_l2_error,{noise},,,{raw},{zne}");
    }
    emit(args.common.output.as_deref(), &out)
}
