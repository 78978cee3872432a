use nalgebra::{DMatrix, DVector};

use super::{
    extrapolate, fit_exponential, same_scale, Factory, FactoryHistory, FactoryKind, FitDiagnostics, InferenceError,
};

const GRID_STEP: f64 = 0.1;

/// Exponential extrapolation with adaptively chosen scale factors.
///
/// The first two scale factors are `1` and `scale_factor`. Each later one is
/// picked from the grid `1.0, 1.1, ..., 2 * scale_factor + 1` to minimize the
/// predicted variance of the intercept under the current exponential fit
/// (unit-variance observations). Until the history holds as many points as the
/// model has parameters, scale factors continue with spacing `scale_factor - 1`.
#[derive(Debug, Clone)]
pub struct AdaExpFactory {
    scale_factor: f64,
    steps: usize,
    asymptote: Option<f64>,
    history: FactoryHistory,
}

impl AdaExpFactory {
    pub fn new(scale_factor: f64, steps: usize, asymptote: Option<f64>) -> Result<AdaExpFactory, InferenceError> {
        if !(scale_factor > 1.0) || !scale_factor.is_finite() {
            return Err(InferenceError::InvalidConfig(format!("AdaExp scale factor must be > 1, got {scale_factor}")));
        }
        let kind = FactoryKind::AdaExp { scale_factor, steps, asymptote };
        if steps < 3 || steps < kind.num_params() {
            return Err(InferenceError::InvalidConfig(format!(
                "AdaExp needs at least {} steps, got {steps}",
                kind.num_params().max(3)
            )));
        }
        if let Some(a) = asymptote {
            if !a.is_finite() {
                return Err(InferenceError::InvalidConfig("asymptote must be finite".into()));
            }
        }
        Ok(AdaExpFactory { scale_factor, steps, asymptote, history: FactoryHistory::new() })
    }

    fn kind(&self) -> FactoryKind {
        FactoryKind::AdaExp { scale_factor: self.scale_factor, steps: self.steps, asymptote: self.asymptote }
    }

    fn max_scale(&self) -> f64 {
        2.0 * self.scale_factor + 1.0
    }

    fn evenly_spaced_next(&self) -> f64 {
        let last = *self.history.scale_factors().last().unwrap_or(&1.0);
        last + (self.scale_factor - 1.0)
    }

    /// Jacobian row of the exponential model with respect to its free parameters.
    fn jacobian_row(&self, b: f64, c: f64, x: f64) -> Vec<f64> {
        let e = (-c * x).exp();
        match self.asymptote {
            Some(_) => vec![e, -b * x * e],
            None => vec![1.0, e, -b * x * e],
        }
    }

    fn intercept_variance(&self, info: &DMatrix<f64>, grad: &DVector<f64>) -> Option<f64> {
        let inv = info.clone().try_inverse()?;
        let v = (grad.transpose() * inv * grad)[(0, 0)];
        (v.is_finite() && v > 0.0).then_some(v)
    }

    fn adaptive_next(&self) -> Option<f64> {
        let fit = fit_exponential(self.history.scale_factors(), self.history.values(), self.asymptote).ok()?;
        let k = if self.asymptote.is_some() { 2 } else { 3 };
        let grad = if k == 3 { DVector::from_vec(vec![1.0, 1.0, 0.0]) } else { DVector::from_vec(vec![1.0, 0.0]) };
        let mut base = DMatrix::<f64>::zeros(k, k);
        for &x in self.history.scale_factors() {
            let row = DVector::from_vec(self.jacobian_row(fit.b, fit.c, x));
            base += &row * row.transpose();
        }
        let points = ((self.max_scale() - 1.0) / GRID_STEP).round() as usize;
        let mut best: Option<(f64, f64)> = None;
        for i in 0..=points {
            let x = (10 + i) as f64 / 10.0;
            let row = DVector::from_vec(self.jacobian_row(fit.b, fit.c, x));
            let info = &base + &row * row.transpose();
            if let Some(v) = self.intercept_variance(&info, &grad) {
                // strict comparison keeps the smaller scale on ties
                if best.is_none_or(|(bv, _)| v < bv) {
                    best = Some((v, x));
                }
            }
        }
        best.map(|(_, x)| x)
    }
}

impl Factory for AdaExpFactory {
    fn next_scale(&self) -> Result<f64, InferenceError> {
        if self.is_done() {
            return Err(InferenceError::Exhausted);
        }
        Ok(match self.history.len() {
            0 => 1.0,
            1 => self.scale_factor,
            n if n < self.kind().num_params() => self.evenly_spaced_next(),
            _ => self.adaptive_next().unwrap_or_else(|| self.evenly_spaced_next()),
        })
    }

    fn is_done(&self) -> bool {
        self.history.len() >= self.steps
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
        extrapolate(&self.kind(), &self.history)
    }

    fn history(&self) -> &FactoryHistory {
        &self.history
    }
}
