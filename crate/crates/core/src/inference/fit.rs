//! Curve fitting used by the factories.
//!
//! Everything here works on plain `(x, y)` samples: polynomial least squares,
//! exact interpolation at zero, and exponential models fitted either by
//! log-linearization or by a damped Gauss-Newton (Levenberg-Marquardt) loop.

use nalgebra::{DMatrix, DVector};

use super::InferenceError;

/// Relative singular-value cutoff below which a design matrix is singular.
const RANK_TOL: f64 = 1e-12;
const LM_MAX_ITERS: usize = 200;
const LM_STEP_TOL: f64 = 1e-10;

/// Least-squares polynomial of degree `order`, coefficients lowest power first.
pub fn fit_polynomial(xs: &[f64], ys: &[f64], order: usize) -> Result<Vec<f64>, InferenceError> {
    check_lengths(xs, ys, order + 1)?;
    let design = vandermonde(xs, order);
    solve_least_squares(&design, &DVector::from_column_slice(ys)).map(|c| c.as_slice().to_vec())
}

pub(crate) fn vandermonde(xs: &[f64], order: usize) -> DMatrix<f64> {
    DMatrix::from_fn(xs.len(), order + 1, |i, j| xs[i].powi(j as i32))
}

pub(crate) fn eval_polynomial(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn check_lengths(xs: &[f64], ys: &[f64], needed: usize) -> Result<(), InferenceError> {
    if xs.len() != ys.len() {
        return Err(InferenceError::LengthMismatch { scales: xs.len(), values: ys.len() });
    }
    if xs.len() < needed {
        return Err(InferenceError::InsufficientData { needed, got: xs.len() });
    }
    Ok(())
}

fn solve_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, InferenceError> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= RANK_TOL * smax {
        return Err(InferenceError::SingularSystem);
    }
    svd.solve(b, 0.0).map_err(|_| InferenceError::SingularSystem)
}

/// Value at zero of the unique degree `n - 1` polynomial through all points,
/// computed in barycentric form.
pub fn interpolate_at_zero(xs: &[f64], ys: &[f64]) -> Result<f64, InferenceError> {
    check_lengths(xs, ys, 1)?;
    for i in 0..xs.len() {
        for j in 0..i {
            if xs[i] == xs[j] {
                return Err(InferenceError::DegenerateFit(format!("repeated scale factor {}", xs[i])));
            }
        }
    }
    if let Some(i) = xs.iter().position(|&x| x == 0.0) {
        return Ok(ys[i]);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        let w: f64 = xs.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &xj)| 1.0 / (xi - xj)).product();
        let t = w / (0.0 - xi);
        num += t * yi;
        den += t;
    }
    Ok(num / den)
}

/// Parameters of `y = a + b * exp(-c * x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ExpFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.a + self.b * (-self.c * x).exp()
    }
}

/// Exponential fit with the horizontal asymptote either fixed or free.
pub fn fit_exponential(xs: &[f64], ys: &[f64], asymptote: Option<f64>) -> Result<ExpFit, InferenceError> {
    match asymptote {
        Some(a) => fit_exponential_known(xs, ys, a),
        None => fit_exponential_free(xs, ys),
    }
}

/// Common sign of `y - a`, if every shifted value is nonzero with that sign.
fn shared_sign(ys: &[f64], a: f64) -> Option<f64> {
    if ys.iter().all(|&y| y - a > 0.0) {
        Some(1.0)
    } else if ys.iter().all(|&y| y - a < 0.0) {
        Some(-1.0)
    } else {
        None
    }
}

fn fit_exponential_known(xs: &[f64], ys: &[f64], a: f64) -> Result<ExpFit, InferenceError> {
    check_lengths(xs, ys, 2)?;
    if let Some(sign) = shared_sign(ys, a) {
        let logs: Vec<f64> = ys.iter().map(|&y| (sign * (y - a)).ln()).collect();
        let line = fit_polynomial(xs, &logs, 1)?;
        return Ok(ExpFit { a, b: sign * line[0].exp(), c: -line[1] });
    }
    // mixed signs: nonlinear fit of (b, c) from the best grid point
    let (b0, c0) = C_GRID
        .iter()
        .filter_map(|&c| {
            let e: Vec<f64> = xs.iter().map(|&x| (-c * x).exp()).collect();
            let den: f64 = e.iter().map(|v| v * v).sum();
            let b = e.iter().zip(ys).map(|(ei, y)| ei * (y - a)).sum::<f64>() / den;
            let rss: f64 = e.iter().zip(ys).map(|(ei, y)| (a + b * ei - y).powi(2)).sum();
            rss.is_finite().then_some((rss, b, c))
        })
        .min_by(|p, q| p.0.total_cmp(&q.0))
        .map(|(_, b, c)| (b, c))
        .ok_or(InferenceError::DegenerateFit("no usable starting point".into()))?;
    let model = |p: &[f64], x: f64| a + p[0] * (-p[1] * x).exp();
    let jac = |p: &[f64], x: f64| {
        let e = (-p[1] * x).exp();
        vec![e, -p[0] * x * e]
    };
    let sol = levenberg_marquardt(xs, ys, &[b0, c0], model, jac)?;
    Ok(ExpFit { a, b: sol.params[0], c: sol.params[1] })
}

/// Coarse decay-rate grid used to seed the nonlinear fits.
const C_GRID: [f64; 30] = {
    let mut g = [0.0; 30];
    let mut i = 0;
    while i < 30 {
        g[i] = 0.1 * (i + 1) as f64;
        i += 1;
    }
    g
};

fn exp_model(p: &[f64], x: f64) -> f64 {
    p[0] + p[1] * (-p[2] * x).exp()
}

fn exp_jacobian(p: &[f64], x: f64) -> Vec<f64> {
    let e = (-p[2] * x).exp();
    vec![1.0, e, -p[1] * x * e]
}

/// Best `(a, b)` for a fixed rate `c`, with its residual sum of squares.
fn linear_given_rate(xs: &[f64], ys: &[f64], c: f64) -> Option<(f64, [f64; 3])> {
    let design = DMatrix::from_fn(xs.len(), 2, |i, j| if j == 0 { 1.0 } else { (-c * xs[i]).exp() });
    let coef = solve_least_squares(&design, &DVector::from_column_slice(ys)).ok()?;
    let p = [coef[0], coef[1], c];
    let rss: f64 = xs.iter().zip(ys).map(|(&x, &y)| (exp_model(&p, x) - y).powi(2)).sum();
    rss.is_finite().then_some((rss, p))
}

fn fit_exponential_free(xs: &[f64], ys: &[f64]) -> Result<ExpFit, InferenceError> {
    check_lengths(xs, ys, 3)?;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let first = ys[order[0]];
    let last = ys[*order.last().unwrap()];
    let a0 = if first >= last {
        ys.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        ys.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    let grid_best =
        C_GRID.iter().filter_map(|&c| linear_given_rate(xs, ys, c)).min_by(|p, q| p.0.total_cmp(&q.0)).map(|(_, p)| p);
    let mut starts = vec![[a0, first - a0, 1.0]];
    starts.extend(grid_best);

    let mut best: Option<LmSolution> = None;
    let mut last_err = None;
    for start in &starts {
        match levenberg_marquardt(xs, ys, start, exp_model, exp_jacobian) {
            Ok(sol) => {
                if best.as_ref().is_none_or(|b| sol.rss < b.rss) {
                    best = Some(sol);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match (best, grid_best) {
        (Some(sol), _) => Ok(ExpFit { a: sol.params[0], b: sol.params[1], c: sol.params[2] }),
        // no LM convergence: best grid point
        (None, Some(p)) => Ok(ExpFit { a: p[0], b: p[1], c: p[2] }),
        (None, None) => Err(last_err.unwrap_or(InferenceError::NonConvergence { iterations: LM_MAX_ITERS })),
    }
}

/// Parameters of `y = a + sign * exp(z0 + z1 x + ... + zd x^d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyExpFit {
    pub a: f64,
    pub sign: f64,
    pub exponent: Vec<f64>,
}

impl PolyExpFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.a + self.sign * eval_polynomial(&self.exponent, x).exp()
    }
}

/// Exponential of a polynomial; the asymptote is fixed or fitted.
pub fn fit_poly_exponential(
    xs: &[f64],
    ys: &[f64],
    order: usize,
    asymptote: Option<f64>,
) -> Result<PolyExpFit, InferenceError> {
    let free = usize::from(asymptote.is_none());
    check_lengths(xs, ys, order + 1 + free)?;
    if let Some(a) = asymptote {
        if let Some(sign) = shared_sign(ys, a) {
            let logs: Vec<f64> = ys.iter().map(|&y| (sign * (y - a)).ln()).collect();
            let exponent = fit_polynomial(xs, &logs, order)?;
            return Ok(PolyExpFit { a, sign, exponent });
        }
    }

    let (lo, hi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &y| (l.min(y), h.max(y)));
    let pad = 0.1 * (hi - lo).max(1e-6);
    let candidates: Vec<(f64, f64)> = match asymptote {
        Some(a) => {
            let s = if ys.iter().map(|y| y - a).sum::<f64>() >= 0.0 { 1.0 } else { -1.0 };
            vec![(a, s)]
        }
        None => vec![(lo - pad, 1.0), (hi + pad, -1.0)],
    };

    let mut best: Option<(f64, PolyExpFit)> = None;
    let mut last_err = None;
    for (a0, sign) in candidates {
        let logs: Vec<f64> = ys.iter().map(|&y| (sign * (y - a0)).max(1e-12).ln()).collect();
        let z0 = match fit_polynomial(xs, &logs, order) {
            Ok(z) => z,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let result = if free == 1 {
            let mut start = vec![a0];
            start.extend(&z0);
            let model = |p: &[f64], x: f64| p[0] + sign * eval_polynomial(&p[1..], x).exp();
            let jac = |p: &[f64], x: f64| {
                let e = sign * eval_polynomial(&p[1..], x).exp();
                let mut row = vec![1.0];
                row.extend((0..p.len() - 1).map(|j| e * x.powi(j as i32)));
                row
            };
            levenberg_marquardt(xs, ys, &start, model, jac)
                .map(|s| (s.rss, PolyExpFit { a: s.params[0], sign, exponent: s.params[1..].to_vec() }))
        } else {
            let model = |p: &[f64], x: f64| a0 + sign * eval_polynomial(p, x).exp();
            let jac = |p: &[f64], x: f64| {
                let e = sign * eval_polynomial(p, x).exp();
                (0..p.len()).map(|j| e * x.powi(j as i32)).collect()
            };
            levenberg_marquardt(xs, ys, &z0, model, jac)
                .map(|s| (s.rss, PolyExpFit { a: a0, sign, exponent: s.params }))
        };
        match result {
            Ok((rss, fit)) => {
                if best.as_ref().is_none_or(|(b, _)| rss < *b) {
                    best = Some((rss, fit));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.map(|(_, f)| f).ok_or_else(|| last_err.unwrap_or(InferenceError::NonConvergence { iterations: LM_MAX_ITERS }))
}

#[derive(Debug, Clone)]
pub(crate) struct LmSolution {
    pub params: Vec<f64>,
    pub rss: f64,
}

/// Levenberg-Marquardt with Marquardt diagonal scaling.
///
/// Stops when an accepted step is below `1e-10 * (1 + |params|)`, when the
/// residual vanishes, or when no damping level can reduce the residual
/// (a stationary point). Exceeding the iteration budget is `NonConvergence`.
pub(crate) fn levenberg_marquardt<M, J>(
    xs: &[f64],
    ys: &[f64],
    start: &[f64],
    model: M,
    jacobian: J,
) -> Result<LmSolution, InferenceError>
where
    M: Fn(&[f64], f64) -> f64,
    J: Fn(&[f64], f64) -> Vec<f64>,
{
    let k = start.len();
    let rss_of = |p: &[f64]| -> f64 { xs.iter().zip(ys).map(|(&x, &y)| (model(p, x) - y).powi(2)).sum() };
    let mut params = start.to_vec();
    let mut rss = rss_of(&params);
    if !rss.is_finite() {
        return Err(InferenceError::DegenerateFit("non-finite residual at starting point".into()));
    }
    let scale: f64 = ys.iter().map(|y| y * y).sum::<f64>().max(1.0);
    let mut damping = 1e-3;

    for _ in 0..LM_MAX_ITERS {
        if rss <= 1e-30 * scale {
            return Ok(LmSolution { params, rss });
        }
        let mut jtj = DMatrix::<f64>::zeros(k, k);
        let mut jtr = DVector::<f64>::zeros(k);
        for (&x, &y) in xs.iter().zip(ys) {
            let row = jacobian(&params, x);
            let r = model(&params, x) - y;
            for a in 0..k {
                jtr[a] += row[a] * r;
                for b in 0..k {
                    jtj[(a, b)] += row[a] * row[b];
                }
            }
        }
        let mut accepted = false;
        while damping < 1e16 {
            let mut lhs = jtj.clone();
            for a in 0..k {
                lhs[(a, a)] += damping * jtj[(a, a)].max(1e-12);
            }
            let step = match lhs.lu().solve(&(-&jtr)) {
                Some(s) => s,
                None => {
                    damping *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            let trial_rss = rss_of(&trial);
            if trial_rss.is_finite() && trial_rss < rss {
                let step_norm = step.norm();
                let param_norm = params.iter().map(|p| p * p).sum::<f64>().sqrt();
                params = trial;
                rss = trial_rss;
                damping = (damping / 10.0).max(1e-15);
                accepted = true;
                if step_norm <= LM_STEP_TOL * (1.0 + param_norm) {
                    return Ok(LmSolution { params, rss });
                }
                break;
            }
            damping *= 10.0;
        }
        if !accepted {
            // no descent direction at any damping: stationary point
            return Ok(LmSolution { params, rss });
        }
    }
    Err(InferenceError::NonConvergence { iterations: LM_MAX_ITERS })
}
