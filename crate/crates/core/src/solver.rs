//! Weighted kernel ridge regression with an unpenalized intercept and the
//! iteratively re-weighted least squares (IRLS) loop built on it.
//!
//! The estimator minimizes
//!
//! ```text
//! (1/n) Σ L(y_i - f(x_i)) + λ αᵀKα,    f(x) = Σ α_i k(x, x_i) + b
//! ```
//!
//! Every loss here is a concave function of the squared residual, so
//! `(1/n) Σ (ω_i / 2) r_i² + λ αᵀKα` with `ω_i = |L'(r_i)| / |r_i|` majorizes
//! the objective at the current iterate. Each IRLS step therefore solves the
//! weighted ridge problem with penalty `2nλ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{check_points, cross_gram, gram, GramMatrix, MercerKernel, Point};
use crate::losses::{check_positive, LossKind, LossSpec, RepresentingFunction};

/// Jitter escalation stops once the diagonal shift would exceed this value.
pub const MAX_JITTER: f64 = 1e-4;

/// A fitted model in representer form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub kernel: MercerKernel,
    pub alpha: Vec<f64>,
    #[serde(rename = "b")]
    pub intercept: f64,
    #[serde(rename = "train_x")]
    pub train_inputs: Vec<Point>,
}

impl KernelModel {
    pub fn new(
        kernel: MercerKernel,
        alpha: Vec<f64>,
        intercept: f64,
        train_inputs: Vec<Point>,
    ) -> Result<Self> {
        kernel.validate()?;
        if alpha.len() != train_inputs.len() {
            return Err(Error::LengthMismatch {
                left: alpha.len(),
                right: train_inputs.len(),
            });
        }
        check_points(&train_inputs, "training inputs")?;
        Ok(Self {
            kernel,
            alpha,
            intercept,
            train_inputs,
        })
    }

    pub fn dim(&self) -> usize {
        self.train_inputs.first().map_or(0, Vec::len)
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self
            .alpha
            .iter()
            .zip(&self.train_inputs)
            .map(|(a, xi)| a * self.kernel.eval_unchecked(x, xi))
            .sum::<f64>()
            + self.intercept)
    }

    pub fn predict(&self, xs: &[Point]) -> Result<Vec<f64>> {
        let c = cross_gram(&self.kernel, &self.train_inputs, xs)?;
        let alpha = DVector::from_column_slice(&self.alpha);
        Ok((c * alpha).iter().map(|v| v + self.intercept).collect())
    }

    pub fn residuals(&self, x: &[Point], y: &[f64]) -> Result<Vec<f64>> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        let f = self.predict(x)?;
        Ok(y.iter().zip(f).map(|(yi, fi)| yi - fi).collect())
    }

    /// `αᵀKα`, the squared norm of the kernel part.
    pub fn rkhs_norm_sq(&self) -> Result<f64> {
        let g = gram(&self.kernel, &self.train_inputs)?;
        Ok(quad_form(g.matrix(), &self.alpha))
    }
}

/// Starting point of the IRLS iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    /// `α = 0, b = 0`.
    #[default]
    Zero,
    /// Start from the converged LAD fit with the same kernel and penalty.
    LeastAbsolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IrlsConfig {
    pub max_iter: usize,
    /// Stop once `|Δ(α, b)|_∞ <= tol * |(α, b)|_∞`.
    pub tol: f64,
    /// Initial diagonal shift of the linear system.
    pub jitter: f64,
    pub record_trace: bool,
    pub init: Initialization,
}

impl Default for IrlsConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-8,
            jitter: 1e-10,
            record_trace: true,
            init: Initialization::Zero,
        }
    }
}

impl IrlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be at least 1"));
        }
        check_positive("tol", self.tol)?;
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::invalid("jitter", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the starting point followed by one entry per iteration.
    pub objective_trace: Vec<f64>,
    pub final_objective: f64,
}

/// Solution of one weighted ridge problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSolution {
    pub alpha: Vec<f64>,
    pub intercept: f64,
    /// Diagonal shift that was finally used.
    pub jitter: f64,
}

/// Minimizes `Σ w_i (y_i - (Kα)_i - b)² + λ αᵀKα` with the default jitter.
pub fn weighted_ridge_solve(
    k: &GramMatrix,
    y: &[f64],
    w: &[f64],
    lambda: f64,
) -> Result<RidgeSolution> {
    weighted_ridge_solve_with_jitter(k, y, w, lambda, IrlsConfig::default().jitter)
}

/// Solves the stationarity system
///
/// ```text
/// (WK + λI) α + W1 b = W y,     1ᵀW (Kα + 1b - y) = 0
/// ```
///
/// through its symmetric form: with `S = W^{1/2}` and `α = Sβ`,
/// `(SKS + λI) β = S(y - 1b)`, and eliminating `β` gives
/// `b = sᵀM⁻¹Sy / sᵀM⁻¹s` where `s = S1` and `M = SKS + λI`. Rows with zero
/// weight get `α_i = 0`, which is what the original system forces. Weights are
/// rescaled by their maximum (with `λ` rescaled alongside), which leaves the
/// minimizer unchanged.
pub fn weighted_ridge_solve_with_jitter(
    k: &GramMatrix,
    y: &[f64],
    w: &[f64],
    lambda: f64,
    jitter: f64,
) -> Result<RidgeSolution> {
    let n = k.n();
    if y.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    if w.len() != n {
        return Err(Error::LengthMismatch { left: n, right: w.len() });
    }
    check_positive("lambda", lambda)?;
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("weights", "must be finite and non-negative"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("targets"));
    }
    let w_max = w.iter().copied().fold(0.0, f64::max);
    if w_max <= 0.0 {
        return Err(Error::ZeroWeights);
    }
    let lam = lambda / w_max;
    let s = DVector::from_iterator(n, w.iter().map(|v| (v / w_max).sqrt()));
    let kmat = k.matrix();

    let mut base = DMatrix::from_fn(n, n, |i, j| s[i] * kmat[(i, j)] * s[j]);
    for i in 0..n {
        base[(i, i)] += lam;
    }

    let mut shift = jitter;
    let chol = loop {
        let mut m = base.clone();
        if shift > 0.0 {
            for i in 0..n {
                m[(i, i)] += shift;
            }
        }
        if let Some(c) = m.cholesky() {
            break c;
        }
        shift = if shift == 0.0 { 1e-10 } else { shift * 10.0 };
        if shift > MAX_JITTER {
            return Err(Error::SingularSystem { jitter: shift });
        }
    };

    let sy = DVector::from_iterator(n, (0..n).map(|i| s[i] * y[i]));
    let u = chol.solve(&sy);
    let v = chol.solve(&s);
    let denom = s.dot(&v);
    if !(denom > 0.0) {
        return Err(Error::ZeroWeights);
    }
    let b = s.dot(&u) / denom;
    let alpha = (0..n).map(|i| s[i] * (u[i] - b * v[i])).collect();
    Ok(RidgeSolution {
        alpha,
        intercept: b,
        jitter: shift,
    })
}

/// Result of an IRLS run on a precomputed Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramFit {
    pub alpha: Vec<f64>,
    pub intercept: f64,
    pub report: FitReport,
}

/// Runs IRLS for the regularized objective on a fixed Gram matrix.
pub fn irls_fit_gram(
    k: &GramMatrix,
    y: &[f64],
    loss: &LossSpec,
    lambda: f64,
    cfg: &IrlsConfig,
) -> Result<GramFit> {
    loss.validate()?;
    cfg.validate()?;
    check_positive("lambda", lambda)?;
    let n = k.n();
    if y.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    if n < 2 {
        return Err(Error::invalid("n", "at least two observations are required"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("targets"));
    }

    let start = match cfg.init {
        Initialization::LeastAbsolute if loss.kind != LossKind::Lad => {
            let lad = LossSpec::lad().with_delta(loss.delta)?;
            let warm = IrlsConfig {
                init: Initialization::Zero,
                record_trace: false,
                ..*cfg
            };
            let fit = irls_fit_gram(k, y, &lad, lambda, &warm)?;
            (fit.alpha, fit.intercept)
        }
        _ => (vec![0.0; n], 0.0),
    };
    irls_iterate(k, y, loss, lambda, cfg, start)
}

/// Runs IRLS from an explicit starting point; `cfg.init` is ignored.
pub fn irls_fit_gram_from(
    k: &GramMatrix,
    y: &[f64],
    loss: &LossSpec,
    lambda: f64,
    cfg: &IrlsConfig,
    start: (Vec<f64>, f64),
) -> Result<GramFit> {
    loss.validate()?;
    cfg.validate()?;
    check_positive("lambda", lambda)?;
    let n = k.n();
    if y.len() != n || start.0.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: if y.len() != n { y.len() } else { start.0.len() },
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("targets"));
    }
    irls_iterate(k, y, loss, lambda, cfg, start)
}

/// Correntropy fits along a decreasing sequence of scales, each started from
/// the previous solution; the first starts as `cfg.init` says. Between
/// consecutive requested scales the path inserts intermediate scales so that
/// no step shrinks σ by more than `ratio`. Returns one fit per entry of
/// `sigmas`, in the given order.
pub fn correntropy_path(
    k: &GramMatrix,
    y: &[f64],
    sigmas: &[f64],
    lambda: f64,
    cfg: &IrlsConfig,
    ratio: f64,
) -> Result<Vec<GramFit>> {
    if sigmas.is_empty() {
        return Err(Error::EmptyInput("sigmas"));
    }
    if !(ratio > 1.0 && ratio.is_finite()) {
        return Err(Error::invalid("ratio", "must exceed one"));
    }
    for &s in sigmas {
        check_positive("sigma", s)?;
    }
    let mut order: Vec<usize> = (0..sigmas.len()).collect();
    order.sort_by(|&a, &b| sigmas[b].total_cmp(&sigmas[a]));
    let mut out: Vec<Option<GramFit>> = vec![None; sigmas.len()];
    let mut current: Option<(Vec<f64>, f64)> = None;
    let mut prev = sigmas[order[0]];
    for &i in &order {
        let target = sigmas[i];
        let mut ladder = Vec::new();
        let mut s = prev;
        while s / target > ratio {
            s /= ratio;
            ladder.push(s);
        }
        ladder.push(target);
        for s in ladder {
            let loss = LossSpec::correntropy(s)?;
            let fit = match current.take() {
                None => irls_fit_gram(k, y, &loss, lambda, cfg)?,
                Some(start) => irls_fit_gram_from(k, y, &loss, lambda, cfg, start)?,
            };
            current = Some((fit.alpha.clone(), fit.intercept));
            if s == target {
                out[i] = Some(fit);
            }
        }
        prev = target;
    }
    Ok(out.into_iter().map(|f| f.expect("every scale is visited")).collect())
}

fn irls_iterate(
    k: &GramMatrix,
    y: &[f64],
    loss: &LossSpec,
    lambda: f64,
    cfg: &IrlsConfig,
    start: (Vec<f64>, f64),
) -> Result<GramFit> {
    let n = k.n();
    let (mut alpha, mut b) = start;
    let kmat = k.matrix();
    let system_lambda = 2.0 * n as f64 * lambda;
    let mut fitted = fitted_values(kmat, &alpha, b);
    let mut trace = Vec::new();
    let mut objective = objective_from_fitted(kmat, y, &fitted, &alpha, loss, lambda);
    if cfg.record_trace {
        trace.push(objective);
    }

    let mut converged = false;
    let mut iterations = 0;
    let mut weights = vec![0.0; n];
    while iterations < cfg.max_iter {
        iterations += 1;
        for i in 0..n {
            weights[i] = loss.weight(y[i] - fitted[i]);
        }
        let step = weighted_ridge_solve_with_jitter(k, y, &weights, system_lambda, cfg.jitter)?;
        let change = parameter_change(&alpha, b, &step.alpha, step.intercept);
        alpha = step.alpha;
        b = step.intercept;
        fitted = fitted_values(kmat, &alpha, b);
        objective = objective_from_fitted(kmat, y, &fitted, &alpha, loss, lambda);
        if cfg.record_trace {
            trace.push(objective);
        }
        if change <= cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(GramFit {
        alpha,
        intercept: b,
        report: FitReport {
            iterations,
            converged,
            objective_trace: trace,
            final_objective: objective,
        },
    })
}

/// Fits the regularized estimator with IRLS.
pub fn irls_fit(
    x: &[Point],
    y: &[f64],
    kernel: &MercerKernel,
    loss: &LossSpec,
    lambda: f64,
    cfg: &IrlsConfig,
) -> Result<(KernelModel, FitReport)> {
    check_points(x, "inputs")?;
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let k = gram(kernel, x)?;
    let fit = irls_fit_gram(&k, y, loss, lambda, cfg)?;
    let model = KernelModel {
        kernel: *kernel,
        alpha: fit.alpha,
        intercept: fit.intercept,
        train_inputs: x.to_vec(),
    };
    Ok((model, fit.report))
}

/// One re-weighting step from `(alpha, b)`.
pub fn irls_step(
    k: &GramMatrix,
    y: &[f64],
    loss: &LossSpec,
    lambda: f64,
    alpha: &[f64],
    b: f64,
    jitter: f64,
) -> Result<RidgeSolution> {
    let fitted = fitted_values(k.matrix(), alpha, b);
    let w: Vec<f64> = y
        .iter()
        .zip(&fitted)
        .map(|(yi, fi)| loss.weight(yi - fi))
        .collect();
    weighted_ridge_solve_with_jitter(k, y, &w, 2.0 * y.len() as f64 * lambda, jitter)
}

/// Regularized empirical risk `(1/n) Σ L(y_i - f(x_i)) + λ αᵀKα`, with the
/// penalty taken over the model's training Gram matrix.
pub fn objective(
    model: &KernelModel,
    x: &[Point],
    y: &[f64],
    loss: &LossSpec,
    lambda: f64,
) -> Result<f64> {
    if x.len() != model.alpha.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: model.alpha.len(),
        });
    }
    let r = model.residuals(x, y)?;
    let data_term = r.iter().map(|&t| loss.eval(t)).sum::<f64>() / r.len() as f64;
    Ok(data_term + lambda * model.rkhs_norm_sq()?)
}

/// Kernel density estimate of the residuals at zero,
/// `(1/(nσ)) Σ phi((y_i - f(x_i)) / σ)`.
pub fn empirical_generalization_risk(
    model: &KernelModel,
    x: &[Point],
    y: &[f64],
    rf: &RepresentingFunction,
    sigma: f64,
) -> Result<f64> {
    let r = model.residuals(x, y)?;
    residual_kde_at_zero(&r, rf, sigma)
}

pub fn residual_kde_at_zero(
    residuals: &[f64],
    rf: &RepresentingFunction,
    sigma: f64,
) -> Result<f64> {
    check_positive("sigma", sigma)?;
    if residuals.is_empty() {
        return Err(Error::EmptyInput("residuals"));
    }
    let sum: f64 = residuals.iter().map(|&r| rf.eval(r / sigma)).sum();
    Ok(sum / (residuals.len() as f64 * sigma))
}

pub(crate) fn fitted_values(k: &DMatrix<f64>, alpha: &[f64], b: f64) -> Vec<f64> {
    let a = DVector::from_column_slice(alpha);
    (k * a).iter().map(|v| v + b).collect()
}

pub(crate) fn quad_form(k: &DMatrix<f64>, alpha: &[f64]) -> f64 {
    let a = DVector::from_column_slice(alpha);
    a.dot(&(k * &a))
}

fn objective_from_fitted(
    k: &DMatrix<f64>,
    y: &[f64],
    fitted: &[f64],
    alpha: &[f64],
    loss: &LossSpec,
    lambda: f64,
) -> f64 {
    let n = y.len() as f64;
    let data: f64 = y.iter().zip(fitted).map(|(yi, fi)| loss.eval(yi - fi)).sum();
    data / n + lambda * quad_form(k, alpha)
}

fn parameter_change(alpha: &[f64], b: f64, new_alpha: &[f64], new_b: f64) -> f64 {
    let mut delta = (new_b - b).abs();
    let mut norm = new_b.abs();
    for (a, na) in alpha.iter().zip(new_alpha) {
        delta = delta.max((na - a).abs());
        norm = norm.max(na.abs());
    }
    if delta == 0.0 {
        0.0
    } else if norm == 0.0 {
        f64::INFINITY
    } else {
        delta / norm
    }
}
