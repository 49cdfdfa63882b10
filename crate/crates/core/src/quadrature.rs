//! One-dimensional adaptive quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureScheme {
    AdaptiveSimpson,
    /// Adaptive bisection with a fixed-order Gauss–Legendre rule per panel.
    GaussLegendre { order: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: QuadratureScheme,
    pub abs_tol: f64,
    /// Half-width of the window used for unbounded integrands, in units of
    /// the integrand's natural scale.
    pub truncation: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            scheme: QuadratureScheme::AdaptiveSimpson,
            abs_tol: 1e-9,
            truncation: 12.0,
        }
    }
}

impl QuadratureSpec {
    pub fn with_scheme(self, scheme: QuadratureScheme) -> Self {
        Self { scheme, ..self }
    }

    pub fn with_tol(self, abs_tol: f64) -> Self {
        Self { abs_tol, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::invalid("abs_tol", "must be positive"));
        }
        if !(self.truncation > 0.0 && self.truncation.is_finite()) {
            return Err(Error::invalid("truncation", "must be positive"));
        }
        if let QuadratureScheme::GaussLegendre { order } = self.scheme {
            if order < 2 {
                return Err(Error::invalid("order", "Gauss-Legendre order must be >= 2"));
            }
        }
        Ok(())
    }

    /// Integrates `f` over `[a, b]` to the absolute tolerance.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<f64> {
        self.validate()?;
        match self.scheme {
            QuadratureScheme::AdaptiveSimpson => adaptive_simpson(&f, a, b, self.abs_tol),
            QuadratureScheme::GaussLegendre { order } => {
                let rule = GaussLegendre::new(order);
                rule.integrate_adaptive(&f, a, b, self.abs_tol)
            }
        }
    }

    /// Integrates over consecutive intervals delimited by `points`, splitting
    /// the tolerance evenly. Use it to put kinks on panel boundaries.
    pub fn integrate_pieces<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<f64> {
        let pieces = points.len().saturating_sub(1).max(1);
        let sub = QuadratureSpec {
            abs_tol: self.abs_tol / pieces as f64,
            ..*self
        };
        points
            .windows(2)
            .map(|w| sub.integrate(&f, w[0], w[1]))
            .sum()
    }
}

/// Adaptive Simpson with Richardson extrapolation. The interval is first cut
/// into eight panels so narrow features are not skipped by the first estimate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const PANELS: usize = 8;
    let h = (b - a) / PANELS as f64;
    let mut total = 0.0;
    for p in 0..PANELS {
        let lo = a + p as f64 * h;
        let hi = if p + 1 == PANELS { b } else { lo + h };
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += simpson_step(f, lo, hi, flo, fmid, fhi, whole, tol / PANELS as f64, MAX_DEPTH)
            .ok_or(Error::Quadrature { a, b, tol })?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return None;
    }
    if delta.abs() <= 15.0 * tol {
        return Some(left + right + delta / 15.0);
    }
    if depth == 0 {
        return None;
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Some(l + r)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the rule by Newton iteration on the Legendre polynomial.
    pub fn new(order: usize) -> Self {
        let n = order.max(1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Single-panel rule on `[a, b]`.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        h * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
    }

    /// Bisects until one panel and its two halves agree to the tolerance.
    pub fn integrate_adaptive<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let whole = self.apply(f, a, b);
        self.refine(f, a, b, whole, tol, MAX_DEPTH)
            .ok_or(Error::Quadrature { a, b, tol })
    }

    fn refine<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> Option<f64> {
        let m = 0.5 * (a + b);
        let left = self.apply(f, a, m);
        let right = self.apply(f, m, b);
        let delta = left + right - whole;
        if !delta.is_finite() {
            return None;
        }
        if delta.abs() <= tol {
            return Some(left + right);
        }
        if depth == 0 {
            return None;
        }
        Some(self.refine(f, a, m, left, 0.5 * tol, depth - 1)? + self.refine(f, m, b, right, 0.5 * tol, depth - 1)?)
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = if n == 0 {
        0.0
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p, dp)
}
