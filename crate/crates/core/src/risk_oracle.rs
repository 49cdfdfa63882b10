//! Population risks of analytic models by quadrature.
//!
//! For `Y = f*(X) + κ(X) ε` with `X ~ U(a, b)`, the modal risk of a candidate
//! `f` is `R(f) = E_X p_{Y|X}(f(X) | X)` and the smoothed risk is
//! `R^σ(f) = E_X ∫ σ⁻¹ φ((y - f(X)) / σ) p_{Y|X}(y | X) dy`. The routines here
//! evaluate both and check the relations between them: the residual-density
//! identity, the `O(σ²)` calibration gap, the location of the risk maximizer
//! and the quadratic growth of the excess risk.

use serde::{Deserialize, Serialize};
use std::cell::RefCell;

use crate::data::{golden_section_max, LinearScale, NoiseDensity, SyntheticSpec, Truth};
use crate::error::{Error, Result};
use crate::losses::{check_positive, Normalization, RepresentingFunction};
use crate::quadrature::{QuadratureScheme, QuadratureSpec};

/// A candidate regression function of one input.
pub type Candidate<'a> = &'a dyn Fn(f64) -> f64;

/// `X ~ U(a, b)`, `Y = f*(X) + κ(X) ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationModel {
    pub a: f64,
    pub b: f64,
    pub truth: Truth,
    pub noise: NoiseDensity,
    pub kappa: LinearScale,
}

impl PopulationModel {
    pub fn new(a: f64, b: f64, truth: Truth, noise: NoiseDensity, kappa: LinearScale) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::invalid("marginal", "need finite a < b"));
        }
        if !(kappa.eval(a) > 0.0 && kappa.eval(b) > 0.0) {
            return Err(Error::invalid("kappa", "noise scale must be positive on the support"));
        }
        Ok(Self {
            a,
            b,
            truth,
            noise,
            kappa,
        })
    }

    /// `X ~ U(0, 1)`, `f* = 0`, homoscedastic noise.
    pub fn homoscedastic(noise: NoiseDensity) -> Self {
        Self::new(0.0, 1.0, Truth::Zero, noise, LinearScale::UNIT).expect("valid")
    }

    pub fn from_spec(spec: &SyntheticSpec) -> Self {
        let (a, b) = spec.input_range();
        Self::new(a, b, spec.truth(), spec.noise_density(), spec.noise_scale_fn()).expect("valid spec")
    }

    /// Conditional density `p_{Y|X}(y | x)`.
    pub fn conditional_density(&self, x: f64, y: f64) -> f64 {
        let k = self.kappa.eval(x);
        self.noise.pdf((y - self.truth.eval(x)) / k) / k
    }

    /// Conditional mode `f*(x) + κ(x) · mode(ε)`.
    pub fn modal_function(&self, x: f64) -> f64 {
        self.truth.eval(x) + self.kappa.eval(x) * self.noise.mode()
    }

    fn kappa_min(&self) -> f64 {
        self.kappa.eval(self.a).min(self.kappa.eval(self.b))
    }

    fn x_integral<F: Fn(f64) -> f64>(&self, g: F, q: &QuadratureSpec) -> Result<f64> {
        Ok(q.integrate(g, self.a, self.b)? / (self.b - self.a))
    }
}

/// `R(f) = E_X p_{Y|X}(f(X) | X)`.
pub fn modal_risk(pm: &PopulationModel, f: Candidate, q: &QuadratureSpec) -> Result<f64> {
    pm.x_integral(|x| pm.conditional_density(x, f(x)), q)
}

/// Density of the residual `E_f = Y - f(X)` at `e`, from
/// `p_{E_f}(e) = E_X p_{ε|X}(e + f(X) - f*(X))`, integrated with a
/// Gauss–Legendre rule so it does not share a scheme with [`modal_risk`].
pub fn residual_density(pm: &PopulationModel, f: Candidate, e: f64, q: &QuadratureSpec) -> Result<f64> {
    let gl = q.with_scheme(QuadratureScheme::GaussLegendre { order: 12 });
    pm.x_integral(
        |x| {
            let k = pm.kappa.eval(x);
            pm.noise.pdf((e + f(x) - pm.truth.eval(x)) / k) / k
        },
        &gl,
    )
}

/// Total mass of the residual density over `mode ± truncation · scale`.
pub fn residual_density_mass(pm: &PopulationModel, f: Candidate, q: &QuadratureSpec) -> Result<f64> {
    let half = q.truncation * pm.noise.scale() * pm.kappa.eval(pm.a).max(pm.kappa.eval(pm.b));
    let centre = pm.noise.mode();
    let err = RefCell::new(None);
    let inner = q.with_tol(q.abs_tol / (2.0 * half));
    let mass = q.integrate(
        |e| match residual_density(pm, f, e, &inner) {
            Ok(v) => v,
            Err(x) => {
                err.replace(Some(x));
                f64::NAN
            }
        },
        centre - half,
        centre + half,
    );
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    mass
}

/// `R^σ(f)`; `σ = 0` gives [`modal_risk`]. The inner integral is taken in
/// `u = (y - f(x)) / σ` over the support of `φ` (or `± truncation` for the
/// Gaussian profile).
pub fn smoothed_risk(
    pm: &PopulationModel,
    f: Candidate,
    rf: &RepresentingFunction,
    sigma: f64,
    q: &QuadratureSpec,
) -> Result<f64> {
    if rf.normalization != Normalization::UnitIntegral {
        return Err(Error::Normalization(
            "smoothed risk needs a unit-integral representing function".into(),
        ));
    }
    if sigma == 0.0 {
        return modal_risk(pm, f, q);
    }
    check_positive("sigma", sigma)?;
    let r = rf.support_radius().unwrap_or(q.truncation);
    let err = RefCell::new(None);
    let outer = pm.x_integral(
        |x| {
            let fx = f(x);
            let mut points = vec![-r];
            points.extend(rf.breakpoints().iter().copied());
            // The conditional density is least smooth at its mode.
            let kink = (pm.modal_function(x) - fx) / sigma;
            if kink > -r && kink < r {
                points.push(kink);
            }
            points.push(r);
            points.sort_by(f64::total_cmp);
            points.dedup();
            match q.integrate_pieces(|u| rf.eval(u) * pm.conditional_density(x, fx + sigma * u), &points) {
                Ok(v) => v,
                Err(e) => {
                    err.replace(Some(e));
                    f64::NAN
                }
            }
        },
        q,
    );
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    outer
}

/// Both sides of the calibration inequality
/// `|{R(f*) - R(f)} - {R^σ(f*) - R^σ(f)}| <= c₁σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGap {
    pub sigma: f64,
    pub gap: f64,
    /// `c₁σ²` with `c₁ = sup|p''| · ∫u²φ(u)du`.
    pub bound: f64,
    /// The sharper `c₁σ²/2` that a second-order Taylor expansion gives.
    pub taylor_bound: f64,
    pub sup_abs_d2: f64,
    pub holds: bool,
}

/// Evaluates the calibration gap between the truth `f*` and `f`. For a
/// heteroscedastic model `sup|p''|` is that of `p_{Y|X}`, i.e. the noise
/// value divided by `min κ³`.
pub fn calibration_gap(
    pm: &PopulationModel,
    f: Candidate,
    rf: &RepresentingFunction,
    sigma: f64,
    q: &QuadratureSpec,
) -> Result<CalibrationGap> {
    let mu2 = rf.second_moment()?;
    let sup = pm.noise.sup_abs_d2(q.truncation) / pm.kappa_min().powi(3);
    let c1 = sup * mu2;
    let (gap, bound) = if sigma == 0.0 {
        (0.0, 0.0)
    } else {
        let truth = |x: f64| pm.truth.eval(x);
        let r_star = modal_risk(pm, &truth, q)?;
        let r_f = modal_risk(pm, f, q)?;
        let s_star = smoothed_risk(pm, &truth, rf, sigma, q)?;
        let s_f = smoothed_risk(pm, f, rf, sigma, q)?;
        (((r_star - r_f) - (s_star - s_f)).abs(), c1 * sigma * sigma)
    };
    Ok(CalibrationGap {
        sigma,
        gap,
        bound,
        taylor_bound: 0.5 * bound,
        sup_abs_d2: sup,
        holds: gap <= bound,
    })
}

/// Least-squares slope of `log gap` against `log σ` over the points whose gap
/// exceeds `floor`. `None` with fewer than two such points.
pub fn log_log_slope(points: &[CalibrationGap], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.gap > floor && p.sigma > 0.0)
        .map(|p| (p.sigma.ln(), p.gap.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Finite-difference slope `Δ log gap / Δ log σ` between the two smallest
/// scales whose gap exceeds `floor`, i.e. the order observed as `σ → 0`.
pub fn asymptotic_slope(points: &[CalibrationGap], floor: f64) -> Option<f64> {
    let mut pts: Vec<&CalibrationGap> = points.iter().filter(|p| p.gap > floor && p.sigma > 0.0).collect();
    pts.sort_by(|a, b| a.sigma.total_cmp(&b.sigma));
    match pts.as_slice() {
        [a, b, ..] => Some((b.gap.ln() - a.gap.ln()) / (b.sigma.ln() - a.sigma.ln())),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// `f* + c`.
    Shift,
    /// `f* + c · x`.
    Slope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyScan {
    pub family: Perturbation,
    pub grid: Vec<f64>,
    pub risks: Vec<f64>,
    /// Grid maximizer of `R`.
    pub argmax: f64,
    /// Grid maximizer of the residual density at zero.
    pub argmax_residual_density: f64,
    /// Golden-section refinement of `argmax` inside its grid bracket.
    pub refined: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesReport {
    pub noise_mode: f64,
    /// `R` of the conditional mode function.
    pub modal_function_risk: f64,
    pub scans: Vec<FamilyScan>,
    /// The modal function is at least as good as every family member
    /// (up to the quadrature tolerance) and both routes pick the same member.
    pub passed: bool,
}

/// Scans `{f* + c}` and `{f* + c·x}` over `grid` and compares every member
/// with the conditional mode function.
pub fn bayes_check(pm: &PopulationModel, grid: &[f64], q: &QuadratureSpec) -> Result<BayesReport> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("perturbation grid"));
    }
    let modal = |x: f64| pm.modal_function(x);
    let best_risk = modal_risk(pm, &modal, q)?;
    let mut scans = Vec::new();
    let mut passed = true;
    for family in [Perturbation::Shift, Perturbation::Slope] {
        let member = |c: f64| {
            move |x: f64| {
                pm.truth.eval(x)
                    + match family {
                        Perturbation::Shift => c,
                        Perturbation::Slope => c * x,
                    }
            }
        };
        let mut risks = Vec::with_capacity(grid.len());
        let mut densities = Vec::with_capacity(grid.len());
        for &c in grid {
            let g = member(c);
            risks.push(modal_risk(pm, &g, q)?);
            densities.push(residual_density(pm, &g, 0.0, q)?);
        }
        let arg = |v: &[f64]| {
            let mut best = 0;
            for i in 1..v.len() {
                if v[i] > v[best] {
                    best = i;
                }
            }
            best
        };
        let i = arg(&risks);
        let j = arg(&densities);
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(grid.len() - 1)];
        let refined = golden_section_max(
            |c| {
                let g = member(c);
                modal_risk(pm, &g, q).unwrap_or(f64::NEG_INFINITY)
            },
            lo,
            hi,
            1e-9,
        );
        passed &= risks.iter().all(|r| best_risk >= r - q.abs_tol) && i == j;
        scans.push(FamilyScan {
            family,
            grid: grid.to_vec(),
            risks,
            argmax: grid[i],
            argmax_residual_density: grid[j],
            refined,
        });
    }
    Ok(BayesReport {
        noise_mode: pm.noise.mode(),
        modal_function_risk: best_risk,
        scans,
        passed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub shift: f64,
    /// `‖f - f_M‖²` in `L²(ρ_X)`, which is `shift²`.
    pub l2_sq: f64,
    /// `R(f_M) - R(f)`.
    pub excess_risk: f64,
    /// `None` when the excess risk is below `1e-12`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub rows: Vec<RatioRow>,
    pub max_ratio: Option<f64>,
}

/// Ratio of squared distance to excess risk for constant shifts of the
/// conditional mode function `f_M`.
pub fn estimation_calibration_ratio(pm: &PopulationModel, shifts: &[f64], q: &QuadratureSpec) -> Result<RatioReport> {
    let modal = |x: f64| pm.modal_function(x);
    let base = modal_risk(pm, &modal, q)?;
    let mut rows = Vec::with_capacity(shifts.len());
    for &c in shifts {
        let g = |x: f64| pm.modal_function(x) + c;
        let excess = base - modal_risk(pm, &g, q)?;
        let l2 = c * c;
        rows.push(RatioRow {
            shift: c,
            l2_sq: l2,
            excess_risk: excess,
            ratio: (excess >= 1e-12).then(|| l2 / excess),
        });
    }
    let max_ratio = rows.iter().filter_map(|r| r.ratio).reduce(f64::max);
    Ok(RatioReport { rows, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::NoiseCase;
    use crate::losses::RepresentingKind;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn normal_at(t: f64, var: f64) -> f64 {
        (-0.5 * t * t / var).exp() / (2.0 * PI * var).sqrt()
    }

    fn gaussian_pm() -> PopulationModel {
        PopulationModel::homoscedastic(NoiseDensity::standard_normal())
    }

    fn unit_gauss() -> RepresentingFunction {
        RepresentingFunction::unit_integral(RepresentingKind::Gaussian)
    }

    #[test]
    fn modal_risk_examples() {
        let q = QuadratureSpec::default();
        let pm = gaussian_pm();
        assert_relative_eq!(modal_risk(&pm, &|_| 0.0, &q).unwrap(), 0.398942, epsilon = 1e-6);
        assert_relative_eq!(modal_risk(&pm, &|_| 1.0, &q).unwrap(), 0.241971, epsilon = 1e-6);
    }

    #[test]
    fn smoothed_risk_matches_gaussian_convolution() {
        let q = QuadratureSpec::default();
        let pm = gaussian_pm();
        let g = unit_gauss();
        let one = smoothed_risk(&pm, &|_| 0.0, &g, 1.0, &q).unwrap();
        assert_relative_eq!(one, 1.0 / (4.0 * PI).sqrt(), epsilon = 1e-7);
        let small = smoothed_risk(&pm, &|_| 0.0, &g, 0.1, &q).unwrap();
        assert_relative_eq!(small, normal_at(0.0, 1.01), epsilon = 1e-7);
        for c in [0.25, 0.5, 1.0] {
            for s in [0.05, 0.4] {
                let v = smoothed_risk(&pm, &|_| c, &g, s, &q).unwrap();
                assert_relative_eq!(v, normal_at(c, 1.0 + s * s), epsilon = 1e-7);
            }
        }
        let tiny = smoothed_risk(&pm, &|_| 0.3, &g, 1e-3, &q).unwrap();
        let exact = modal_risk(&pm, &|_| 0.3, &q).unwrap();
        assert!((tiny - exact).abs() < 1e-5);
        assert!(smoothed_risk(&pm, &|_| 0.0, &g.with_normalization(Normalization::PeakOne), 1.0, &q).is_err());
    }

    #[test]
    fn smoothing_error_shrinks_with_sigma() {
        let q = QuadratureSpec::default();
        let pm = gaussian_pm();
        let f = |x: f64| 0.3 * x;
        let exact = modal_risk(&pm, &f, &q).unwrap();
        let errs: Vec<f64> = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|&s| (smoothed_risk(&pm, &f, &unit_gauss(), s, &q).unwrap() - exact).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn two_routes_agree() {
        let q = QuadratureSpec::default();
        let pms = [
            gaussian_pm(),
            PopulationModel::from_spec(&SyntheticSpec::toy1(10)),
            PopulationModel::from_spec(&SyntheticSpec::toy2(NoiseCase::StudentT3, 10).unwrap()),
        ];
        let fs: [&dyn Fn(f64) -> f64; 3] = [&|_| 0.0, &|x| 0.4 * x - 0.2, &|x: f64| (3.0 * x).sin()];
        for pm in &pms {
            for f in fs {
                let r = modal_risk(pm, f, &q).unwrap();
                let e = residual_density(pm, f, 0.0, &q).unwrap();
                assert!((r - e).abs() <= 2.0 * q.abs_tol, "{r} vs {e}");
            }
        }
    }

    #[test]
    fn residual_density_is_a_density() {
        let q = QuadratureSpec::default().with_tol(1e-7);
        let pm = PopulationModel::from_spec(&SyntheticSpec::toy1(10));
        let f = |x: f64| x * x;
        assert_relative_eq!(residual_density_mass(&pm, &f, &q).unwrap(), 1.0, epsilon = 1e-6);
        // The density is the derivative of the residual CDF.
        let cdf = |e: f64| {
            q.integrate(
                |x| {
                    let k = pm.kappa.eval(x);
                    pm.noise.cdf((e + f(x) - pm.truth.eval(x)) / k)
                },
                0.0,
                1.0,
            )
            .unwrap()
        };
        let h = 1e-4;
        let fd = (cdf(0.3 + h) - cdf(0.3 - h)) / (2.0 * h);
        assert_relative_eq!(residual_density(&pm, &f, 0.3, &q).unwrap(), fd, epsilon = 1e-6);
    }

    #[test]
    fn calibration_gap_example() {
        let q = QuadratureSpec::default();
        let pm = gaussian_pm();
        let c = calibration_gap(&pm, &|_| 0.5, &unit_gauss(), 0.1, &q).unwrap();
        let expected = ((normal_at(0.0, 1.0) - normal_at(0.5, 1.0)) - (normal_at(0.0, 1.01) - normal_at(0.5, 1.01))).abs();
        assert_relative_eq!(c.gap, expected, epsilon = 1e-8);
        assert!((c.gap - 0.000666).abs() < 1e-6);
        assert_relative_eq!(c.bound, 0.398942 * 0.01, epsilon = 1e-6);
        assert!(c.holds);
        let zero = calibration_gap(&pm, &|_| 0.5, &unit_gauss(), 0.0, &q).unwrap();
        assert_eq!(zero.gap, 0.0);
    }

    #[test]
    fn slopes_of_exact_power_law() {
        let pts: Vec<CalibrationGap> = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|&s| CalibrationGap {
                sigma: s,
                gap: 3.0 * s * s,
                bound: 1.0,
                taylor_bound: 0.5,
                sup_abs_d2: 1.0,
                holds: true,
            })
            .collect();
        assert_relative_eq!(log_log_slope(&pts, 1e-10).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(asymptotic_slope(&pts, 1e-10).unwrap(), 2.0, epsilon = 1e-12);
        assert!(asymptotic_slope(&pts[..1], 1e-10).is_none());
    }

    #[test]
    fn truncation_radius_does_not_matter() {
        let q = QuadratureSpec::default();
        let wide = QuadratureSpec { truncation: 24.0, ..q };
        let pm = PopulationModel::from_spec(&SyntheticSpec::toy1(10));
        let f = |x: f64| 2.0 * (PI * x).sin() + 0.5;
        let a = smoothed_risk(&pm, &f, &unit_gauss(), 0.2, &q).unwrap();
        let b = smoothed_risk(&pm, &f, &unit_gauss(), 0.2, &wide).unwrap();
        assert!((a - b).abs() <= 2.0 * q.abs_tol);
    }

    #[test]
    fn bayes_rule_with_zero_mode_noise() {
        let q = QuadratureSpec::default();
        let grid: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.1).collect();
        let r = bayes_check(&gaussian_pm(), &grid, &q).unwrap();
        assert!(r.passed);
        for s in &r.scans {
            assert_eq!(s.argmax, 0.0);
            assert!(s.refined.abs() < 1e-6);
        }
    }

    #[test]
    fn bayes_rule_finds_mixture_mode() {
        let q = QuadratureSpec::default();
        let noise = NoiseCase::MixtureSkewed.density();
        let pm = PopulationModel::homoscedastic(noise);
        let grid: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.1).collect();
        let r = bayes_check(&pm, &grid, &q).unwrap();
        assert!(r.passed);
        let shift = &r.scans[0];
        assert!((shift.argmax - noise.mode()).abs() <= 0.05);
        assert!((shift.refined - noise.mode()).abs() < 1e-5);
    }

    #[test]
    fn ratio_example_and_small_shift_limit() {
        let q = QuadratureSpec::default().with_tol(1e-12);
        let pm = gaussian_pm();
        let r = estimation_calibration_ratio(&pm, &[0.0, 0.1, 1e-3], &q).unwrap();
        assert!(r.rows[0].ratio.is_none());
        assert_relative_eq!(r.rows[1].excess_risk, 0.398942 * (1.0 - (-0.005f64).exp()), epsilon = 1e-6);
        assert!((r.rows[1].ratio.unwrap() - 5.03).abs() < 0.01);
        // Second-order Taylor at the mode: excess ≈ |p''(0)| c² / 2.
        let limit = 2.0 / NoiseDensity::standard_normal().d2(0.0).abs();
        assert_relative_eq!(r.rows[2].ratio.unwrap(), limit, max_relative = 1e-4);
    }

    #[test]
    fn invalid_models_rejected() {
        let n = NoiseDensity::standard_normal();
        assert!(PopulationModel::new(1.0, 0.0, Truth::Zero, n, LinearScale::UNIT).is_err());
        let neg = LinearScale { base: -1.0, slope: 0.5 };
        assert!(PopulationModel::new(0.0, 1.0, Truth::Zero, n, neg).is_err());
    }
}
