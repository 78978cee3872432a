//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Every tolerance and time budget is pinned
//! below.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zne_core::circuit::{circuit_unitary, max_abs_diff, random_circuit};
use zne_core::inference::build_factory;
use zne_core::scaling::fold_plan;
use zne_core::sim::{expectation, make_executor, simulate, ExecutionMode};
use zne_core::{
    execute_with_zne, fold_global, fold_local, Circuit, FactoryKind, FoldStrategy, Gate, NoiseModel, Observable,
    ScaleMethod, ZneConfig,
};

const FOLD_CIRCUITS: usize = 200;
const FOLD_SCALES: [f64; 5] = [1.0, 1.5, 2.0, 3.0, 4.5];
const FOLD_TOL: f64 = 1e-10;
const FOLD_BUDGET: Duration = Duration::from_secs(30);

const RICHARDSON_CASES: usize = 100;
const RICHARDSON_TOL: f64 = 1e-8;

const EXP_CASES: usize = 100;
const EXP_SCALES: [f64; 5] = [1.0, 1.5, 2.0, 2.5, 3.0];
const EXP_KNOWN_TOL: f64 = 1e-6;
const EXP_FREE_TOL: f64 = 1e-4;
const EXP_BUDGET: Duration = Duration::from_secs(10);

const RB_SURVIVAL_CEILING: f64 = 1.0 - 0.02;
const RB_ERROR_RATIO: f64 = 0.5;
const RB_BUDGET: Duration = Duration::from_secs(120);

const H2_NOISE: [&str; 2] = ["depolarizing:0.005", "depolarizing:0.02"];
const H2_BUDGET: Duration = Duration::from_secs(300);

const FIXED_POINT_CIRCUITS: u64 = 20;
const FIXED_POINT_TOL: f64 = 1e-9;

const PHYSICALITY_CASES: u64 = 100;
const PHYSICALITY_TOL: f64 = 1e-9;

fn zne(args: &[&str], threads: usize) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zne"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .env("RAYON_NUM_THREADS", threads.to_string())
        .output()
        .expect("binary runs")
}

fn coeffs_path() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/h2_sto6g_bk.csv").to_string_lossy().into_owned()
}

fn stdout_rows(out: &Output) -> Vec<Vec<String>> {
    String::from_utf8_lossy(&out.stdout).lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

/// Folded circuits keep their unitary, and their gate count is `d + 2(m d + s)`.
fn folding_correctness() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst, mut count_errors) = (0.0f64, 0);
    for i in 0..FOLD_CIRCUITS {
        let n = rng.random_range(1..=4);
        let d = rng.random_range(1..=20);
        let c = random_circuit(&mut rng, n, d);
        let u = circuit_unitary(&c).unwrap();
        for &scale in &FOLD_SCALES {
            let (m, s) = fold_plan(d, scale);
            let folded = [
                fold_local(&c, scale, FoldStrategy::FromLeft, None).unwrap(),
                fold_local(&c, scale, FoldStrategy::FromRight, None).unwrap(),
                fold_local(&c, scale, FoldStrategy::AtRandom { seed: i as u64 }, None).unwrap(),
                fold_global(&c, scale).unwrap(),
            ];
            for f in &folded {
                worst = worst.max(max_abs_diff(&circuit_unitary(f).unwrap(), &u));
                count_errors += usize::from(f.len() != d + 2 * (m * d + s));
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst < FOLD_TOL && count_errors == 0 && elapsed < FOLD_BUDGET,
        format!("max deviation {worst:.2e}, count mismatches {count_errors}, {:.1?}", elapsed),
    )
}

/// Bell circuit: left and right folding at 2, global folding at 3.
fn bell_folding_examples() -> Verdict {
    let bell = Circuit::from_gates(2, [Gate::h(0), Gate::cnot(0, 1)]).unwrap();
    let (h, cx) = (Gate::h(0), Gate::cnot(0, 1));
    let cases = [
        (
            fold_local(&bell, 2.0, FoldStrategy::FromLeft, None).unwrap(),
            vec![h.clone(), h.clone(), h.clone(), cx.clone()],
        ),
        (
            fold_local(&bell, 2.0, FoldStrategy::FromRight, None).unwrap(),
            vec![h.clone(), cx.clone(), cx.clone(), cx.clone()],
        ),
        (fold_global(&bell, 3.0).unwrap(), vec![h.clone(), cx.clone(), cx.clone(), h.clone(), h, cx]),
    ];
    let matched = cases.iter().filter(|(got, want)| got.gates() == want.as_slice()).count();
    verdict(matched == cases.len(), format!("{matched}/{} gate sequences match", cases.len()))
}

fn reduce(kind: &FactoryKind, xs: &[f64], ys: &[f64]) -> Result<f64, String> {
    let mut f = build_factory(kind, xs).map_err(|e| e.to_string())?;
    for (&x, &y) in xs.iter().zip(ys) {
        f.push(x, y).map_err(|e| e.to_string())?;
    }
    f.reduce().map(|(v, _)| v).map_err(|e| e.to_string())
}

/// Richardson through `degree + 1` distinct points recovers `q(0)` of a random polynomial.
fn richardson_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..RICHARDSON_CASES {
        let degree = rng.random_range(1..=5);
        let coeffs: Vec<f64> = (0..=degree).map(|_| rng.random_range(-2.0..=2.0)).collect();
        let mut xs = vec![1.0];
        for _ in 0..degree {
            xs.push(xs.last().unwrap() + rng.random_range(0.25..1.0));
        }
        let ys: Vec<f64> = xs.iter().map(|&x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)).collect();
        match reduce(&FactoryKind::RICHARDSON, &xs, &ys) {
            Ok(v) => worst = worst.max((v - coeffs[0]).abs()),
            Err(e) => return verdict(false, e),
        }
    }
    verdict(worst < RICHARDSON_TOL, format!("max error {worst:.2e} over {RICHARDSON_CASES} polynomials"))
}

/// Noiseless `a + b exp(-c x)` samples reduce to `a + b`.
fn exponential_recovery() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_known, mut worst_free) = (0.0f64, 0.0f64);
    for _ in 0..EXP_CASES {
        let a = rng.random_range(-1.0..=1.0);
        let b = 1.0 - rng.random::<f64>(); // (0, 1]
        let c = rng.random_range(0.1..=2.0);
        let ys: Vec<f64> = EXP_SCALES.iter().map(|&x| a + b * (-c * x).exp()).collect();
        let known = reduce(&FactoryKind::Exp { asymptote: Some(a) }, &EXP_SCALES, &ys);
        let free = reduce(&FactoryKind::Exp { asymptote: None }, &EXP_SCALES, &ys);
        match (known, free) {
            (Ok(k), Ok(f)) => {
                worst_known = worst_known.max((k - (a + b)).abs());
                worst_free = worst_free.max((f - (a + b)).abs());
            }
            (Err(e), _) | (_, Err(e)) => return verdict(false, format!("a={a} b={b} c={c}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst_known < EXP_KNOWN_TOL && worst_free < EXP_FREE_TOL && elapsed < EXP_BUDGET,
        format!("max error {worst_known:.2e} known / {worst_free:.2e} free asymptote, {elapsed:.1?}"),
    )
}

/// Mirror-circuit benchmark through the binary.
fn mirror_benchmark() -> Verdict {
    let start = Instant::now();
    let args =
        ["bench-rb", "--qubits", "2", "--depth", "20", "--trials", "50", "--noise", "depolarizing:0.01", "--seed", "7"];
    let out = zne(&args, 0);
    let elapsed = start.elapsed();
    if out.status.code() != Some(0) {
        return verdict(false, String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let rows = stdout_rows(&out);
    let mean = |factory: &str, col: usize| {
        rows.iter().find(|r| r[0] == "mean" && r[2] == factory).map(|r| r[col].parse::<f64>().unwrap())
    };
    let (Some(survival), Some(err_raw), Some(err_exp)) =
        (mean("exp:0.25", 3), mean("exp:0.25", 5), mean("exp:0.25", 6))
    else {
        return verdict(false, "missing exp:0.25 aggregate row");
    };
    let comparisons = ["linear", "richardson"].iter().all(|f| mean(f, 6).is_some());
    let identity_ok = rows.iter().all(|r| r[8] == "true");
    verdict(
        survival < RB_SURVIVAL_CEILING
            && err_exp < RB_ERROR_RATIO * err_raw
            && comparisons
            && identity_ok
            && elapsed < RB_BUDGET,
        format!(
            "survival {survival:.4}, |mitigated-1| {err_exp:.4} vs |raw-1| {err_raw:.4}, comparison rows {comparisons}, {elapsed:.1?}"
        ),
    )
}

/// H2 surface: mitigation lowers the relative L2 error at both noise levels,
/// and the raw error grows with noise.
fn h2_surface() -> Verdict {
    let start = Instant::now();
    let coeffs = coeffs_path();
    let row_count = fs::read_to_string(&coeffs)
        .map(|t| t.lines().filter(|l| !l.starts_with('#')).count().saturating_sub(1))
        .unwrap_or(0);
    let mut args = vec!["bench-h2", "--coeffs", coeffs.as_str(), "--theta-points", "41", "--factory", "poly:2"];
    for n in H2_NOISE {
        args.extend(["--noise", n]);
    }
    let out = zne(&args, 0);
    let elapsed = start.elapsed();
    if out.status.code() != Some(0) {
        return verdict(false, String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let errors: Vec<(f64, f64)> = stdout_rows(&out)
        .iter()
        .filter(|r| r[0] == "rel_l2_error")
        .map(|r| (r[4].parse().unwrap(), r[5].parse().unwrap()))
        .collect();
    if errors.len() != H2_NOISE.len() {
        return verdict(false, "missing rel_l2_error rows");
    }
    let mitigated_better = errors.iter().all(|(raw, zne)| zne < raw);
    let raw_increasing = errors.windows(2).all(|w| w[1].0 > w[0].0);
    verdict(
        mitigated_better && raw_increasing && row_count <= 20 && elapsed < H2_BUDGET,
        format!(
            "raw/mitigated error {:.4}/{:.4} at p=0.005, {:.4}/{:.4} at p=0.02, {row_count} rows, {elapsed:.1?}",
            errors[0].0, errors[0].1, errors[1].0, errors[1].1
        ),
    )
}

/// Without noise every factory returns the unmitigated value.
fn zero_noise_fixed_point() -> Verdict {
    let obs = Observable::from_terms(&[(0.6, "ZI"), (-0.4, "XX"), (0.25, "IY"), (0.1, "II")]).unwrap();
    let exec = make_executor(NoiseModel::none(), obs.clone(), ExecutionMode::Exact).unwrap();
    let kinds = [
        FactoryKind::Linear,
        FactoryKind::RICHARDSON,
        FactoryKind::Richardson { first_middle_last: true },
        FactoryKind::Poly { order: 2 },
        FactoryKind::Exp { asymptote: None },
        FactoryKind::Exp { asymptote: Some(0.25) },
        FactoryKind::PolyExp { order: 1, asymptote: None },
        FactoryKind::PolyExp { order: 2, asymptote: Some(0.0) },
        FactoryKind::AdaExp { scale_factor: 2.0, steps: 5, asymptote: None },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for seed in 0..FIXED_POINT_CIRCUITS {
        let circuit = random_circuit(&mut rng, 2, 15);
        let raw = expectation(&simulate(&circuit, &NoiseModel::none()).unwrap(), &obs).unwrap();
        for kind in &kinds {
            let config = ZneConfig {
                factory: kind.clone(),
                scale_factors: vec![1.0, 1.5, 2.0, 2.5, 3.0],
                scaling: if seed % 2 == 0 { ScaleMethod::Global } else { ZneConfig::default().scaling },
                seed,
                ..ZneConfig::default()
            };
            match execute_with_zne(&circuit, &exec, &config) {
                Ok(r) => worst = worst.max((r.zne_value - raw).abs()),
                Err(e) => return verdict(false, format!("{}: {e}", kind.label())),
            }
        }
    }
    verdict(
        worst < FIXED_POINT_TOL,
        format!("max |zne - raw| {worst:.2e} over {FIXED_POINT_CIRCUITS} circuits x {} factories", kinds.len()),
    )
}

/// Identical command lines give byte-identical output, independent of thread count.
fn cli_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("points.csv");
    fs::write(&data, "scale,value\n1,0.9\n1.5,0.86\n2,0.81\n3,0.74\n").unwrap();
    let coeffs = coeffs_path();
    let commands: Vec<Vec<&str>> = vec![
        vec![
            "run",
            "--circuit",
            "tests/data/bell.json",
            "--observable",
            "tests/data/projector_00.json",
            "--noise",
            "depolarizing:0.02",
            "--shots",
            "500",
            "--num-to-average",
            "3",
            "--seed",
            "11",
        ],
        vec!["fit", "--data", data.to_str().unwrap(), "--factory", "exp"],
        vec!["bench-rb", "--trials", "8", "--depth", "12", "--shots", "300", "--seed", "2"],
        vec!["bench-h2", "--coeffs", coeffs.as_str(), "--theta-points", "5", "--shots", "200", "--seed", "9"],
    ];
    let mut identical = 0;
    for args in &commands {
        let a = zne(args, 1);
        let b = zne(args, 4);
        if a.status.success() && a.stdout == b.stdout && !a.stdout.is_empty() {
            identical += 1;
        }
    }
    verdict(identical == commands.len(), format!("{identical}/{} commands byte-identical", commands.len()))
}

/// Trace, Hermiticity and positivity after random noisy simulations.
fn density_matrix_physicality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut trace, mut herm, mut min_eig) = (0.0f64, 0.0f64, f64::INFINITY);
    for i in 0..PHYSICALITY_CASES {
        let n = rng.random_range(1..=4);
        let len = rng.random_range(1..=60);
        let p = rng.random::<f64>();
        let noise = match i % 3 {
            0 => NoiseModel::depolarizing(p).unwrap(),
            1 => NoiseModel::amplitude_damping(p).unwrap(),
            _ => NoiseModel::depolarizing(p / 10.0).unwrap(),
        };
        let rho = simulate(&random_circuit(&mut rng, n, len), &noise).unwrap();
        trace = trace.max((rho.trace() - 1.0).norm());
        herm = herm.max(rho.hermiticity_error());
        min_eig = min_eig.min(rho.min_eigenvalue());
    }
    verdict(
        trace < PHYSICALITY_TOL && herm < PHYSICALITY_TOL && min_eig >= -PHYSICALITY_TOL,
        format!("trace drift {trace:.2e}, hermiticity {herm:.2e}, min eigenvalue {min_eig:.2e}"),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 9] = [
        ("folding correctness", folding_correctness),
        ("Bell folding examples", bell_folding_examples),
        ("Richardson exactness", richardson_exactness),
        ("exponential recovery", exponential_recovery),
        ("mirror-circuit benchmark", mirror_benchmark),
        ("H2 energy surface", h2_surface),
        ("zero-noise fixed point", zero_noise_fixed_point),
        ("CLI determinism", cli_determinism),
        ("density-matrix physicality", density_matrix_physicality),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        failed += usize::from(!v.passed);
        println!("{} criterion {}: {name}: {}", if v.passed { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
