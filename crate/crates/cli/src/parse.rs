//! Flag value parsers shared by the subcommands.

use std::str::FromStr;

use clap::ValueEnum;
use zne_core::sim::ExecutionMode;
use zne_core::zne::FoldOrder;
use zne_core::{FactoryKind, ScaleMethod};

/// Parses `linear`, `richardson[:fml]`, `poly:<d>`, `exp[:<a>]`,
/// `polyexp:<d>[:<a>]` or `adaexp:<scale>,<steps>[:<a>]`.
///
/// The inverse of [`FactoryKind::label`].
pub fn parse_factory(s: &str) -> Result<FactoryKind, String> {
    let (name, rest) = match s.split_once(':') {
        Some((n, r)) => (n, Some(r)),
        None => (s, None),
    };
    let float = |v: &str| v.parse::<f64>().map_err(|_| format!("factory {s:?}: bad number {v:?}"));
    let int = |v: &str| v.parse::<usize>().map_err(|_| format!("factory {s:?}: bad integer {v:?}"));
    let asymptote = |v: Option<&str>| v.map(float).transpose();
    match (name, rest) {
        ("linear", None) => Ok(FactoryKind::Linear),
        ("richardson", None) => Ok(FactoryKind::RICHARDSON),
        ("richardson", Some("fml")) => Ok(FactoryKind::Richardson { first_middle_last: true }),
        ("poly", Some(d)) => Ok(FactoryKind::Poly { order: int(d)? }),
        ("exp", a) => Ok(FactoryKind::Exp { asymptote: asymptote(a)? }),
        ("polyexp", Some(r)) => {
            let (d, a) = split_opt(r);
            Ok(FactoryKind::PolyExp { order: int(d)?, asymptote: asymptote(a)? })
        }
        ("adaexp", Some(r)) => {
            let (params, a) = split_opt(r);
            let (scale, steps) =
                params.split_once(',').ok_or_else(|| format!("factory {s:?}: expected adaexp:<scale>,<steps>"))?;
            Ok(FactoryKind::AdaExp { scale_factor: float(scale)?, steps: int(steps)?, asymptote: asymptote(a)? })
        }
        _ => Err(format!(
            "unknown factory {s:?}; expected linear, richardson[:fml], poly:<d>, exp[:<a>], polyexp:<d>[:<a>] or adaexp:<scale>,<steps>[:<a>]"
        )),
    }
}

fn split_opt(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    }
}

/// Comma-separated, non-decreasing scale factors, each at least 1.
pub fn parse_scale_factors(s: &str) -> Result<Vec<f64>, String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad scale factor {v:?}")))
        .collect::<Result<_, _>>()?;
    if let Some(v) = values.iter().find(|v| !(**v >= 1.0) || !v.is_finite()) {
        return Err(format!("scale factor {v} is not >= 1"));
    }
    if values.windows(2).any(|w| w[1] < w[0]) {
        return Err("scale factors must be ascending".into());
    }
    Ok(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Folding {
    Left,
    Right,
    Random,
    Global,
}

impl Folding {
    pub fn scale_method(self) -> ScaleMethod {
        match self {
            Folding::Left => ScaleMethod::local(FoldOrder::Left),
            Folding::Right => ScaleMethod::local(FoldOrder::Right),
            Folding::Random => ScaleMethod::local(FoldOrder::Random),
            Folding::Global => ScaleMethod::Global,
        }
    }
}

/// How sampled executions turn shots into an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sampling {
    /// Independent shots for every Pauli term.
    Pauli,
    /// Computational-basis shots; I/Z observables only.
    Bitstring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    Exact,
    Count(u64),
}

impl FromStr for Shots {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "exact" {
            return Ok(Shots::Exact);
        }
        match s.parse::<u64>() {
            Ok(0) => Err("shots must be at least 1".into()),
            Ok(n) => Ok(Shots::Count(n)),
            Err(_) => Err(format!("expected `exact` or a shot count, got {s:?}")),
        }
    }
}

impl Shots {
    pub fn mode(self, sampling: Sampling, seed: u64) -> ExecutionMode {
        match (self, sampling) {
            (Shots::Exact, _) => ExecutionMode::Exact,
            (Shots::Count(shots), Sampling::Pauli) => ExecutionMode::Sampled { shots, seed },
            (Shots::Count(shots), Sampling::Bitstring) => ExecutionMode::SampledBitstrings { shots, seed },
        }
    }
}
