//! Finite-sample breakdown of the modal estimator and an empirical
//! contamination harness.

use serde::{Deserialize, Serialize};

use crate::data::{contaminate, derive_seed, Dataset, Placement};
use crate::error::{Error, Result};
use crate::kernels::{MercerKernel, Point};
use crate::losses::{LossSpec, Normalization, RepresentingFunction};
use crate::solver::{irls_fit, IrlsConfig, KernelModel};

/// `A = Σ φ((y_i - f(x_i)) / σ)` for a peak-one representing function.
pub fn breakdown_statistic(
    model: &KernelModel,
    x: &[Point],
    y: &[f64],
    rf: &RepresentingFunction,
    sigma: f64,
) -> Result<f64> {
    if rf.normalization != Normalization::PeakOne {
        return Err(Error::Normalization(
            "breakdown statistic needs a peak-one representing function".into(),
        ));
    }
    crate::losses::check_positive("sigma", sigma)?;
    let r = model.residuals(x, y)?;
    Ok(r.iter().map(|&t| rf.eval(t / sigma)).sum())
}

/// Bracket on the number of outliers the estimator tolerates, given `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakdownBracket {
    pub a: f64,
    pub n: usize,
    /// `floor(A)`.
    pub m_low: u64,
    /// `floor(A) + 1`.
    pub m_high: u64,
    /// `m / (m + n)` at both ends.
    pub epsilon: (f64, f64),
}

pub fn breakdown_bracket(a: f64, n: usize) -> Result<BreakdownBracket> {
    if !(a >= 0.0 && a <= n as f64 + 1e-9) {
        return Err(Error::invalid("A", format!("must lie in [0, {n}], got {a}")));
    }
    let m_low = a.floor() as u64;
    let m_high = m_low + 1;
    let eps = |m: u64| m as f64 / (m as f64 + n as f64);
    Ok(BreakdownBracket {
        a,
        n,
        m_low,
        m_high,
        epsilon: (eps(m_low), eps(m_high)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: usize,
    pub magnitude: f64,
    /// Maximum absolute prediction over the evaluation grid.
    pub sup_norm: f64,
    /// At least half of the outliers are predicted within 10% of their value.
    pub followed_outliers: bool,
    /// `sup_norm > 100 ×` the clean value, or outliers followed.
    pub broken: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub loss: LossSpec,
    pub lambda: f64,
    pub clean_sup_norm: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,magnitude,sup_norm,followed,broken\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.m, r.magnitude, r.sup_norm, r.followed_outliers, r.broken
            ));
        }
        s
    }

    pub fn row(&self, m: usize, magnitude: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.m == m && r.magnitude == magnitude)
    }
}

/// Settings shared by every cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kernel: MercerKernel,
    pub loss: LossSpec,
    pub lambda: f64,
    pub m_grid: Vec<usize>,
    pub magnitudes: Vec<f64>,
    pub placement: Placement,
    pub eval_grid: Vec<Point>,
    pub cfg: IrlsConfig,
}

/// `m` points evenly spread over the range of a one-dimensional dataset.
pub fn default_eval_grid(ds: &Dataset, m: usize) -> Vec<Point> {
    let lo = ds.x().iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let hi = ds.x().iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    crate::data::synthetic::grid(lo, hi, m)
}

fn sup_norm(model: &KernelModel, grid: &[Point]) -> Result<f64> {
    Ok(model.predict(grid)?.iter().fold(0.0, |a, v| a.max(v.abs())))
}

/// Refits on `base` plus `m` outliers of each magnitude. The contamination
/// seed of each cell is derived from `(seed, m, magnitude index)`.
pub fn contamination_sweep(base: &Dataset, spec: &SweepSpec, seed: u64) -> Result<SweepReport> {
    if spec.m_grid.is_empty() || spec.magnitudes.is_empty() {
        return Err(Error::EmptyInput("sweep grid"));
    }
    if spec.eval_grid.is_empty() {
        return Err(Error::EmptyInput("evaluation grid"));
    }
    let cfg = IrlsConfig {
        record_trace: false,
        ..spec.cfg
    };
    let (clean, _) = irls_fit(base.x(), base.y(), &spec.kernel, &spec.loss, spec.lambda, &cfg)?;
    let clean_sup = sup_norm(&clean, &spec.eval_grid)?;
    let mut rows = Vec::new();
    for &m in &spec.m_grid {
        for (j, &magnitude) in spec.magnitudes.iter().enumerate() {
            let cell_seed = derive_seed(derive_seed(seed, m as u64), j as u64);
            let ds = contaminate(base, m, magnitude, spec.placement, cell_seed)?;
            let fit = irls_fit(ds.x(), ds.y(), &spec.kernel, &spec.loss, spec.lambda, &cfg);
            let row = match fit {
                Ok((model, _)) => {
                    let sup = sup_norm(&model, &spec.eval_grid)?;
                    let outliers = &ds.x()[base.n()..];
                    let followed = if m == 0 {
                        false
                    } else {
                        let pred = model.predict(outliers)?;
                        let close = pred
                            .iter()
                            .filter(|p| (*p - magnitude).abs() <= 0.1 * magnitude.abs())
                            .count();
                        2 * close >= m
                    };
                    SweepRow {
                        m,
                        magnitude,
                        sup_norm: sup,
                        followed_outliers: followed,
                        broken: followed || sup > 100.0 * clean_sup,
                        failure: None,
                    }
                }
                Err(e) => SweepRow {
                    m,
                    magnitude,
                    sup_norm: f64::NAN,
                    followed_outliers: false,
                    broken: false,
                    failure: Some(e.to_string()),
                },
            };
            rows.push(row);
        }
    }
    Ok(SweepReport {
        loss: spec.loss,
        lambda: spec.lambda,
        clean_sup_norm: clean_sup,
        rows,
    })
}

/// Statistic, bracket and sweep for a correntropy fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownReport {
    pub bracket: BreakdownBracket,
    pub sweep: SweepReport,
}

/// Fits the correntropy estimator on `base`, computes `A` with the matching
/// representing function `exp(-u²)`, and runs the contamination sweep.
pub fn breakdown_report(base: &Dataset, spec: &SweepSpec, seed: u64) -> Result<BreakdownReport> {
    if spec.loss.kind != crate::losses::LossKind::Correntropy {
        return Err(Error::invalid("loss", "the breakdown statistic is defined for the correntropy loss"));
    }
    let (clean, _) = irls_fit(base.x(), base.y(), &spec.kernel, &spec.loss, spec.lambda, &spec.cfg)?;
    let rf = RepresentingFunction::peak_one(crate::losses::RepresentingKind::Gaussian);
    let a = breakdown_statistic(&clean, base.x(), base.y(), &rf, spec.loss.sigma)?;
    Ok(BreakdownReport {
        bracket: breakdown_bracket(a, base.n())?,
        sweep: contamination_sweep(base, spec, seed)?,
    })
}
