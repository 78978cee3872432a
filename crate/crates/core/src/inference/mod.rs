//! Classical inference: factories that schedule noise scale factors, record
//! `(scale factor, expectation value)` pairs and extrapolate to zero noise.
//!
//! This module only sees numbers. It knows nothing about circuits or
//! simulators, so any back end producing expectation values can use it.

mod adaptive;
pub mod fit;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

pub use adaptive::AdaExpFactory;
pub use fit::{fit_exponential, fit_poly_exponential, fit_polynomial, interpolate_at_zero, ExpFit, PolyExpFit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("insufficient data: need at least 2 distinct scale factors")]
    SingleScaleFactor,
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("nonlinear fit did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("singular least-squares system")]
    SingularSystem,
    #[error("factory is exhausted")]
    Exhausted,
    #[error("factory still expects more data")]
    NotDone,
    #[error("pushed scale factor {got} but {expected} was scheduled")]
    ScaleMismatch { expected: f64, got: f64 },
    #[error("{scales} scale factors but {values} values")]
    LengthMismatch { scales: usize, values: usize },
    #[error("invalid factory configuration: {0}")]
    InvalidConfig(String),
    #[error("expectation value must be finite, got {0}")]
    NonFiniteValue(f64),
}

impl InferenceError {
    /// Whether the error is some flavor of "not enough data to fit".
    pub fn is_insufficient_data(&self) -> bool {
        matches!(self, InferenceError::InsufficientData { .. } | InferenceError::SingleScaleFactor)
    }
}

/// Recorded noise levels and their expectation values, in push order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FactoryHistory {
    scale_factors: Vec<f64>,
    values: Vec<f64>,
}

impl FactoryHistory {
    pub fn new() -> FactoryHistory {
        FactoryHistory::default()
    }

    pub fn from_pairs(scale_factors: Vec<f64>, values: Vec<f64>) -> Result<FactoryHistory, InferenceError> {
        if scale_factors.len() != values.len() {
            return Err(InferenceError::LengthMismatch { scales: scale_factors.len(), values: values.len() });
        }
        let mut h = FactoryHistory::new();
        for (s, v) in scale_factors.into_iter().zip(values) {
            h.record(s, v)?;
        }
        Ok(h)
    }

    fn record(&mut self, scale: f64, value: f64) -> Result<(), InferenceError> {
        if !(scale >= 1.0) || !scale.is_finite() {
            return Err(InferenceError::InvalidConfig(format!("scale factor {scale} is not >= 1")));
        }
        if !value.is_finite() {
            return Err(InferenceError::NonFiniteValue(value));
        }
        self.scale_factors.push(scale);
        self.values.push(value);
        Ok(())
    }

    pub fn scale_factors(&self) -> &[f64] {
        &self.scale_factors
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn distinct_scales(&self) -> usize {
        let mut s = self.scale_factors.clone();
        s.sort_by(f64::total_cmp);
        s.dedup();
        s.len()
    }
}

/// Fit quality report returned next to every zero-noise estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitDiagnostics {
    /// Model parameters, in the order documented on [`FactoryKind`].
    pub params: Vec<f64>,
    /// Euclidean norm of the residuals at the sampled scale factors.
    pub residual_norm: f64,
    /// Residual sum of squares over the degrees of freedom, when there are any.
    pub reduced_chi_square: Option<f64>,
    /// Propagated standard error of the intercept, assuming residual-estimated
    /// homoscedastic noise. Absent for exact (interpolating) fits.
    pub intercept_stderr: Option<f64>,
    /// The intercept at zero always lies outside the sampled range.
    pub extrapolation_only: bool,
}

/// Extrapolation model families.
///
/// Parameter layouts in [`FitDiagnostics::params`]:
/// `Linear`/`Poly`/`Richardson` report polynomial coefficients lowest power
/// first; `Exp`/`AdaExp` report `[a, b, c]` of `a + b exp(-c x)`; `PolyExp`
/// reports `[a, z0, ..., zd]` of `a + s exp(z0 + ... + zd x^d)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FactoryKind {
    Linear,
    /// Exact interpolation through every point, or only through the first,
    /// middle and last points when `first_middle_last` is set.
    Richardson {
        first_middle_last: bool,
    },
    Poly {
        order: usize,
    },
    Exp {
        asymptote: Option<f64>,
    },
    PolyExp {
        order: usize,
        asymptote: Option<f64>,
    },
    AdaExp {
        scale_factor: f64,
        steps: usize,
        asymptote: Option<f64>,
    },
}

impl FactoryKind {
    pub const RICHARDSON: FactoryKind = FactoryKind::Richardson { first_middle_last: false };

    /// Short identifier, e.g. `exp:0.25` or `poly:2`.
    pub fn label(&self) -> String {
        let asym = |a: &Option<f64>| a.map(|v| format!(":{v}")).unwrap_or_default();
        match self {
            FactoryKind::Linear => "linear".into(),
            FactoryKind::Richardson { first_middle_last: false } => "richardson".into(),
            FactoryKind::Richardson { first_middle_last: true } => "richardson:fml".into(),
            FactoryKind::Poly { order } => format!("poly:{order}"),
            FactoryKind::Exp { asymptote } => format!("exp{}", asym(asymptote)),
            FactoryKind::PolyExp { order, asymptote } => format!("polyexp:{order}{}", asym(asymptote)),
            FactoryKind::AdaExp { scale_factor, steps, asymptote } => {
                format!("adaexp:{scale_factor},{steps}{}", asym(asymptote))
            }
        }
    }

    /// Number of free model parameters.
    pub fn num_params(&self) -> usize {
        match self {
            FactoryKind::Linear => 2,
            FactoryKind::Richardson { .. } => 2,
            FactoryKind::Poly { order } => order + 1,
            FactoryKind::Exp { asymptote } | FactoryKind::AdaExp { asymptote, .. } => {
                if asymptote.is_some() {
                    2
                } else {
                    3
                }
            }
            FactoryKind::PolyExp { order, asymptote } => order + 1 + usize::from(asymptote.is_none()),
        }
    }
}

/// A stateful inference technique.
///
/// Static factories walk a fixed list of scale factors; adaptive ones choose
/// the next scale factor from the history collected so far.
pub trait Factory: Send {
    /// Scale factor at which the next expectation value should be measured.
    fn next_scale(&self) -> Result<f64, InferenceError>;
    fn is_done(&self) -> bool;
    /// Records the value measured at the most recently scheduled scale factor.
    fn push(&mut self, scale: f64, value: f64) -> Result<(), InferenceError>;
    /// Zero-noise estimate and fit diagnostics from the recorded history.
    fn reduce(&self) -> Result<(f64, FitDiagnostics), InferenceError>;
    fn history(&self) -> &FactoryHistory;
}

fn same_scale(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(1.0)
}

/// Non-adaptive factory over a fixed scale-factor list.
#[derive(Debug, Clone)]
pub struct StaticFactory {
    kind: FactoryKind,
    scale_factors: Vec<f64>,
    history: FactoryHistory,
}

impl StaticFactory {
    pub fn new(kind: FactoryKind, scale_factors: Vec<f64>) -> Result<StaticFactory, InferenceError> {
        if matches!(kind, FactoryKind::AdaExp { .. }) {
            return Err(InferenceError::InvalidConfig("AdaExp is adaptive; use AdaExpFactory".into()));
        }
        if scale_factors.is_empty() {
            return Err(InferenceError::InvalidConfig("no scale factors".into()));
        }
        if let Some(s) = scale_factors.iter().find(|s| !(**s >= 1.0) || !s.is_finite()) {
            return Err(InferenceError::InvalidConfig(format!("scale factor {s} is not >= 1")));
        }
        let points = scale_factors.len();
        match kind {
            FactoryKind::Poly { order } if order >= points => {
                return Err(InferenceError::InvalidConfig(format!(
                    "polynomial order {order} needs more than {points} scale factors"
                )));
            }
            FactoryKind::PolyExp { order, .. } if order + 2 > points => {
                return Err(InferenceError::InvalidConfig(format!(
                    "poly-exponential order {order} is capped at {} for {points} scale factors",
                    points.saturating_sub(2)
                )));
            }
            _ => {}
        }
        Ok(StaticFactory { kind, scale_factors, history: FactoryHistory::new() })
    }

    pub fn linear(scale_factors: Vec<f64>) -> Result<StaticFactory, InferenceError> {
        StaticFactory::new(FactoryKind::Linear, scale_factors)
    }

    pub fn richardson(scale_factors: Vec<f64>) -> Result<StaticFactory, InferenceError> {
        StaticFactory::new(FactoryKind::RICHARDSON, scale_factors)
    }

    pub fn poly(scale_factors: Vec<f64>, order: usize) -> Result<StaticFactory, InferenceError> {
        StaticFactory::new(FactoryKind::Poly { order }, scale_factors)
    }

    pub fn exp(scale_factors: Vec<f64>, asymptote: Option<f64>) -> Result<StaticFactory, InferenceError> {
        StaticFactory::new(FactoryKind::Exp { asymptote }, scale_factors)
    }

    pub fn kind(&self) -> &FactoryKind {
        &self.kind
    }
}

impl Factory for StaticFactory {
    fn next_scale(&self) -> Result<f64, InferenceError> {
        self.scale_factors.get(self.history.len()).copied().ok_or(InferenceError::Exhausted)
    }

    fn is_done(&self) -> bool {
        self.history.len() >= self.scale_factors.len()
    }

    fn push(&mut self, scale: f64, value: f64) -> Result<(), InferenceError> {
        let expected = self.next_scale()?;
        if !same_scale(expected, scale) {
            return Err(InferenceError::ScaleMismatch { expected, got: scale });
        }
        self.history.record(scale, value)
    }

    fn reduce(&self) -> Result<(f64, FitDiagnostics), InferenceError> {
        if !self.is_done() {
            return Err(InferenceError::NotDone);
        }
        extrapolate(&self.kind, &self.history)
    }

    fn history(&self) -> &FactoryHistory {
        &self.history
    }
}

/// Builds the factory described by `kind`. Static kinds use `scale_factors`;
/// `AdaExp` schedules its own.
pub fn build_factory(kind: &FactoryKind, scale_factors: &[f64]) -> Result<Box<dyn Factory>, InferenceError> {
    match *kind {
        FactoryKind::AdaExp { scale_factor, steps, asymptote } => {
            Ok(Box::new(AdaExpFactory::new(scale_factor, steps, asymptote)?))
        }
        _ => Ok(Box::new(StaticFactory::new(kind.clone(), scale_factors.to_vec())?)),
    }
}

fn residual_stats(xs: &[f64], ys: &[f64], model: impl Fn(f64) -> f64, num_params: usize) -> (f64, Option<f64>) {
    let rss: f64 = xs.iter().zip(ys).map(|(&x, &y)| (model(x) - y).powi(2)).sum();
    let dof = xs.len().saturating_sub(num_params);
    (rss.sqrt(), (dof > 0).then(|| rss / dof as f64))
}

/// `sqrt(sigma^2 g^T (J^T J)^-1 g)` for the intercept gradient `g`.
fn intercept_stderr(jacobian: &DMatrix<f64>, grad: &[f64], reduced_chi_square: Option<f64>) -> Option<f64> {
    let sigma2 = reduced_chi_square?;
    let info = jacobian.transpose() * jacobian;
    let inv = info.try_inverse()?;
    let g = DVector::from_column_slice(grad);
    let var = (g.transpose() * inv * &g)[(0, 0)] * sigma2;
    (var.is_finite() && var >= 0.0).then(|| var.sqrt())
}

fn constant_result(value: f64) -> (f64, FitDiagnostics) {
    (
        value,
        FitDiagnostics {
            params: vec![value],
            residual_norm: 0.0,
            reduced_chi_square: None,
            intercept_stderr: None,
            extrapolation_only: true,
        },
    )
}

/// Zero-noise estimate of `kind` over an arbitrary history.
///
/// This is what every built-in factory's `reduce` calls; it is public so stored
/// data can be refitted without replaying a factory schedule.
pub fn extrapolate(kind: &FactoryKind, history: &FactoryHistory) -> Result<(f64, FitDiagnostics), InferenceError> {
    let (mut xs, mut ys) = (history.scale_factors().to_vec(), history.values().to_vec());
    if history.distinct_scales() < 2 {
        return Err(InferenceError::SingleScaleFactor);
    }
    if let FactoryKind::Richardson { first_middle_last: true } = kind {
        if xs.len() > 3 {
            let idx = [0, (xs.len() - 1) / 2, xs.len() - 1];
            xs = idx.iter().map(|&i| xs[i]).collect();
            ys = idx.iter().map(|&i| ys[i]).collect();
        }
    }
    let needed = kind.num_params();
    if xs.len() < needed {
        return Err(InferenceError::InsufficientData { needed, got: xs.len() });
    }
    if let FactoryKind::Richardson { .. } = kind {
        // duplicates are fatal for interpolation even on constant data
        let value = interpolate_at_zero(&xs, &ys)?;
        if ys.iter().all(|&y| y == ys[0]) {
            return Ok(constant_result(ys[0]));
        }
        let coeffs = fit_polynomial(&xs, &ys, xs.len() - 1).unwrap_or_default();
        let diag = FitDiagnostics {
            params: coeffs,
            residual_norm: 0.0,
            reduced_chi_square: None,
            intercept_stderr: None,
            extrapolation_only: true,
        };
        return Ok((value, diag));
    }
    if ys.iter().all(|&y| y == ys[0]) {
        return Ok(constant_result(ys[0]));
    }

    match *kind {
        FactoryKind::Linear => reduce_poly(&xs, &ys, 1),
        FactoryKind::Poly { order } => reduce_poly(&xs, &ys, order),
        FactoryKind::Exp { asymptote } | FactoryKind::AdaExp { asymptote, .. } => reduce_exp(&xs, &ys, asymptote),
        FactoryKind::PolyExp { order, asymptote } => reduce_poly_exp(&xs, &ys, order, asymptote),
        FactoryKind::Richardson { .. } => unreachable!("handled above"),
    }
}

fn reduce_poly(xs: &[f64], ys: &[f64], order: usize) -> Result<(f64, FitDiagnostics), InferenceError> {
    let coeffs = fit_polynomial(xs, ys, order)?;
    let (residual_norm, chi2) = residual_stats(xs, ys, |x| fit::eval_polynomial(&coeffs, x), order + 1);
    let mut grad = vec![0.0; order + 1];
    grad[0] = 1.0;
    let stderr = intercept_stderr(&fit::vandermonde(xs, order), &grad, chi2);
    Ok((
        coeffs[0],
        FitDiagnostics {
            params: coeffs,
            residual_norm,
            reduced_chi_square: chi2,
            intercept_stderr: stderr,
            extrapolation_only: true,
        },
    ))
}

fn reduce_exp(xs: &[f64], ys: &[f64], asymptote: Option<f64>) -> Result<(f64, FitDiagnostics), InferenceError> {
    let f = fit_exponential(xs, ys, asymptote)?;
    let k = if asymptote.is_some() { 2 } else { 3 };
    let (residual_norm, chi2) = residual_stats(xs, ys, |x| f.eval(x), k);
    let jac = DMatrix::from_fn(xs.len(), k, |i, j| {
        let e = (-f.c * xs[i]).exp();
        let col = [1.0, e, -f.b * xs[i] * e];
        col[j + 3 - k]
    });
    let grad = if k == 3 { vec![1.0, 1.0, 0.0] } else { vec![1.0, 0.0] };
    let stderr = intercept_stderr(&jac, &grad, chi2);
    Ok((
        f.a + f.b,
        FitDiagnostics {
            params: vec![f.a, f.b, f.c],
            residual_norm,
            reduced_chi_square: chi2,
            intercept_stderr: stderr,
            extrapolation_only: true,
        },
    ))
}

fn reduce_poly_exp(
    xs: &[f64],
    ys: &[f64],
    order: usize,
    asymptote: Option<f64>,
) -> Result<(f64, FitDiagnostics), InferenceError> {
    let f = fit_poly_exponential(xs, ys, order, asymptote)?;
    let free = usize::from(asymptote.is_none());
    let k = order + 1 + free;
    let (residual_norm, chi2) = residual_stats(xs, ys, |x| f.eval(x), k);
    let jac = DMatrix::from_fn(xs.len(), k, |i, j| {
        let x = xs[i];
        if free == 1 && j == 0 {
            1.0
        } else {
            f.sign * fit::eval_polynomial(&f.exponent, x).exp() * x.powi((j - free) as i32)
        }
    });
    let mut grad = vec![0.0; k];
    if free == 1 {
        grad[0] = 1.0;
    }
    grad[free] = f.sign * f.exponent[0].exp();
    let stderr = intercept_stderr(&jac, &grad, chi2);
    let mut params = vec![f.a];
    params.extend(&f.exponent);
    Ok((
        f.eval(0.0),
        FitDiagnostics {
            params,
            residual_norm,
            reduced_chi_square: chi2,
            intercept_stderr: stderr,
            extrapolation_only: true,
        },
    ))
}
