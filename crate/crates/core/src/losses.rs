//! Representing functions of modal regression kernels and the robust losses
//! used by the kernel regression estimators.
//!
//! A representing function `phi` comes in two normalizations. `PeakOne`
//! scales the profile so that `phi(0) = 1`; this is the convention the losses
//! use, and for the Gaussian it is `exp(-u^2)` so that the modal loss matches
//! the correntropy-induced loss. `UnitIntegral` is the density convention
//! (`∫ phi = 1`) used for kernel density estimates and the risk oracle; for the
//! Gaussian it is the standard normal density.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default smoothing floor for the least-absolute-deviation weights.
pub const DEFAULT_LAD_DELTA: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentingKind {
    Gaussian,
    Epanechnikov,
    Triangular,
    /// Box kernel on `[-1/2, 1/2]`.
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    PeakOne,
    UnitIntegral,
}

/// Symmetric, peak-at-zero profile of a modal regression kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RepresentingFunction {
    pub kind: RepresentingKind,
    pub normalization: Normalization,
}

impl RepresentingFunction {
    pub const fn new(kind: RepresentingKind, normalization: Normalization) -> Self {
        Self {
            kind,
            normalization,
        }
    }

    pub const fn peak_one(kind: RepresentingKind) -> Self {
        Self::new(kind, Normalization::PeakOne)
    }

    pub const fn unit_integral(kind: RepresentingKind) -> Self {
        Self::new(kind, Normalization::UnitIntegral)
    }

    /// Evaluates `phi(u)`.
    pub fn eval(&self, u: f64) -> f64 {
        let a = u.abs();
        match (self.kind, self.normalization) {
            (RepresentingKind::Gaussian, Normalization::PeakOne) => (-u * u).exp(),
            (RepresentingKind::Gaussian, Normalization::UnitIntegral) => {
                (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
            }
            (RepresentingKind::Epanechnikov, norm) => {
                if a >= 1.0 {
                    0.0
                } else {
                    let scale = match norm {
                        Normalization::PeakOne => 1.0,
                        Normalization::UnitIntegral => 0.75,
                    };
                    scale * (1.0 - u * u)
                }
            }
            // Both normalizations coincide for the triangle and the box.
            (RepresentingKind::Triangular, _) => (1.0 - a).max(0.0),
            (RepresentingKind::Naive, _) => {
                if a <= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `∫ u^2 phi(u) du`, defined for the density normalization only.
    pub fn second_moment(&self) -> Result<f64> {
        if self.normalization != Normalization::UnitIntegral {
            return Err(Error::Normalization(
                "second moment is defined for unit-integral representing functions".into(),
            ));
        }
        Ok(match self.kind {
            RepresentingKind::Gaussian => 1.0,
            RepresentingKind::Epanechnikov => 0.2,
            RepresentingKind::Triangular => 1.0 / 6.0,
            RepresentingKind::Naive => 1.0 / 12.0,
        })
    }

    /// Half-width of the support, `None` when the support is unbounded.
    pub fn support_radius(&self) -> Option<f64> {
        match self.kind {
            RepresentingKind::Gaussian => None,
            RepresentingKind::Epanechnikov | RepresentingKind::Triangular => Some(1.0),
            RepresentingKind::Naive => Some(0.5),
        }
    }

    /// Points inside the support where `phi` is not smooth.
    pub(crate) fn breakpoints(&self) -> &'static [f64] {
        match self.kind {
            RepresentingKind::Triangular => &[0.0],
            _ => &[],
        }
    }

    pub fn with_normalization(self, normalization: Normalization) -> Self {
        Self {
            normalization,
            ..self
        }
    }
}

/// Distance-based modal regression loss `sigma^{-1} (1 - phi(t / sigma))`.
///
/// Requires the peak-one normalization so the loss vanishes at zero.
pub fn modal_loss(rf: &RepresentingFunction, sigma: f64, t: f64) -> Result<f64> {
    if rf.normalization != Normalization::PeakOne {
        return Err(Error::Normalization(
            "modal loss needs a peak-one representing function".into(),
        ));
    }
    check_positive("sigma", sigma)?;
    Ok((1.0 - rf.eval(t / sigma)) / sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Correntropy-induced loss, the modal regression estimator.
    Correntropy,
    Huber,
    Lad,
}

impl LossKind {
    pub fn label(&self) -> &'static str {
        match self {
            LossKind::Correntropy => "MR",
            LossKind::Huber => "Huber",
            LossKind::Lad => "LAD",
        }
    }

    /// Whether the loss carries a tunable scale parameter.
    pub fn has_scale(&self) -> bool {
        !matches!(self, LossKind::Lad)
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One of the three experiment losses with its scale parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Scale of the correntropy and Huber losses; ignored for LAD.
    pub sigma: f64,
    /// Smoothing floor of the LAD weights.
    pub delta: f64,
}

impl LossSpec {
    pub fn new(kind: LossKind, sigma: f64) -> Result<Self> {
        let spec = Self {
            kind,
            sigma,
            delta: DEFAULT_LAD_DELTA,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn correntropy(sigma: f64) -> Result<Self> {
        Self::new(LossKind::Correntropy, sigma)
    }

    pub fn huber(sigma: f64) -> Result<Self> {
        Self::new(LossKind::Huber, sigma)
    }

    pub fn lad() -> Self {
        Self {
            kind: LossKind::Lad,
            sigma: 1.0,
            delta: DEFAULT_LAD_DELTA,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        self.delta = delta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            LossKind::Correntropy | LossKind::Huber => check_positive("sigma", self.sigma),
            LossKind::Lad => check_positive("delta", self.delta),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let s = self.sigma;
        match self.kind {
            LossKind::Correntropy => s * s * -(-(t * t) / (s * s)).exp_m1(),
            LossKind::Huber => {
                let a = t.abs();
                if a <= s {
                    0.5 * t * t
                } else {
                    s * a - 0.5 * s * s
                }
            }
            LossKind::Lad => t.abs(),
        }
    }

    /// Derivative of the loss (a subgradient at zero for LAD).
    pub fn derivative(&self, t: f64) -> f64 {
        let s = self.sigma;
        match self.kind {
            LossKind::Correntropy => 2.0 * t * (-(t * t) / (s * s)).exp(),
            LossKind::Huber => t.clamp(-s, s),
            LossKind::Lad => {
                if t == 0.0 {
                    0.0
                } else {
                    t.signum()
                }
            }
        }
    }

    /// Re-weighting factor `|L'(t)| / |t|`, with the analytic limit at zero
    /// and the `1 / max(delta, |t|)` floor for LAD.
    pub fn weight(&self, t: f64) -> f64 {
        let s = self.sigma;
        let a = t.abs();
        match self.kind {
            LossKind::Correntropy => 2.0 * (-(t * t) / (s * s)).exp(),
            LossKind::Huber => {
                if a <= s {
                    1.0
                } else {
                    s / a
                }
            }
            LossKind::Lad => 1.0 / a.max(self.delta),
        }
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {value}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const ALL_KINDS: [RepresentingKind; 4] = [
        RepresentingKind::Gaussian,
        RepresentingKind::Epanechnikov,
        RepresentingKind::Triangular,
        RepresentingKind::Naive,
    ];

    // Composite Simpson on a fine uniform grid; independent of the crate's
    // adaptive quadrature.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let n = panels * 2;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    fn integrate_piecewise(f: impl Fn(f64) -> f64 + Copy, rf: &RepresentingFunction) -> f64 {
        let r = rf.support_radius().unwrap_or(14.0);
        // Split at every kink so Simpson converges at its nominal rate.
        simpson(f, -r, 0.0, 20_000) + simpson(f, 0.0, r, 20_000)
    }

    #[test]
    fn rep_eval_examples() {
        let g1 = RepresentingFunction::peak_one(RepresentingKind::Gaussian);
        assert_eq!(g1.eval(0.0), 1.0);
        let gu = RepresentingFunction::unit_integral(RepresentingKind::Gaussian);
        assert_relative_eq!(gu.eval(0.0), 0.398_942_280_401_432_7, epsilon = 1e-15);
        let e = RepresentingFunction::unit_integral(RepresentingKind::Epanechnikov);
        assert_eq!(e.eval(2.0), 0.0);
    }

    #[test]
    fn unit_integral_profiles_integrate_to_one() {
        for kind in ALL_KINDS {
            let rf = RepresentingFunction::unit_integral(kind);
            let total = integrate_piecewise(|u| rf.eval(u), &rf);
            // The box kernel has jumps at the support edge, which the grid
            // hits exactly.
            assert!((total - 1.0).abs() < 1e-8, "{kind:?}: {total}");
        }
    }

    #[test]
    fn peak_one_profiles_peak_at_one() {
        for kind in ALL_KINDS {
            assert_eq!(RepresentingFunction::peak_one(kind).eval(0.0), 1.0);
        }
    }

    #[test]
    fn second_moment_matches_quadrature_oracle() {
        for kind in ALL_KINDS {
            let rf = RepresentingFunction::unit_integral(kind);
            let oracle = integrate_piecewise(|u| u * u * rf.eval(u), &rf);
            let got = rf.second_moment().unwrap();
            assert!((got - oracle).abs() < 1e-8, "{kind:?}: {got} vs {oracle}");
        }
        let e = RepresentingFunction::unit_integral(RepresentingKind::Epanechnikov);
        assert_relative_eq!(e.second_moment().unwrap(), 0.2);
        let n = RepresentingFunction::unit_integral(RepresentingKind::Naive);
        assert_relative_eq!(n.second_moment().unwrap(), 1.0 / 12.0);
    }

    #[test]
    fn second_moment_rejects_peak_one() {
        let rf = RepresentingFunction::peak_one(RepresentingKind::Gaussian);
        assert!(matches!(rf.second_moment(), Err(Error::Normalization(_))));
    }

    #[test]
    fn loss_examples() {
        let c = LossSpec::correntropy(1.0).unwrap();
        assert_eq!(c.eval(0.0), 0.0);
        assert_relative_eq!(c.eval(1e3), 1.0);
        let h = LossSpec::huber(2.0).unwrap();
        assert_relative_eq!(h.eval(3.0), 4.0);
        assert_relative_eq!(LossSpec::lad().eval(-2.5), 2.5);
    }

    #[test]
    fn invalid_scales_are_rejected() {
        assert!(LossSpec::correntropy(0.0).is_err());
        assert!(LossSpec::huber(-1.0).is_err());
        assert!(LossSpec::correntropy(f64::NAN).is_err());
        assert!(LossSpec::lad().with_delta(0.0).is_err());
    }

    fn fd_derivative(spec: &LossSpec, t: f64) -> f64 {
        let h = 1e-6 * t.abs().max(1e-3);
        (spec.eval(t + h) - spec.eval(t - h)) / (2.0 * h)
    }

    #[test]
    fn correntropy_weight_at_zero_is_the_limit() {
        let c = LossSpec::correntropy(1.0).unwrap();
        // |L'(t)|/|t| from finite differences, extrapolated towards zero.
        let ratios: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&t| fd_derivative(&c, t) / t)
            .collect();
        let extrapolated = ratios[2] + (ratios[2] - ratios[1]) / 3.0;
        assert!((extrapolated - 2.0).abs() < 1e-4);
        assert_eq!(c.weight(0.0), 2.0);
    }

    #[test]
    fn huber_weight_matches_fd_oracle() {
        let h = LossSpec::huber(1.0).unwrap();
        let oracle = fd_derivative(&h, 4.0).abs() / 4.0;
        assert_relative_eq!(oracle, 0.25, epsilon = 1e-8);
        assert_relative_eq!(h.weight(4.0), 0.25);
        assert_eq!(h.weight(0.0), 1.0);
    }

    #[test]
    fn lad_weight_floor() {
        assert_relative_eq!(LossSpec::lad().weight(0.0), 1e4);
        assert_relative_eq!(LossSpec::lad().weight(-0.5), 2.0);
    }

    #[test]
    fn weights_match_gradients_on_grid() {
        for sigma in [0.3, 1.0, 4.0] {
            for spec in [
                LossSpec::correntropy(sigma).unwrap(),
                LossSpec::huber(sigma).unwrap(),
            ] {
                for m in [0.01, 0.1, 1.0, 10.0] {
                    for sign in [-1.0, 1.0] {
                        let t = sign * m * sigma;
                        let grad = fd_derivative(&spec, t).abs();
                        let w = spec.weight(t) * t.abs();
                        if grad < 1e-300 {
                            assert!(w < 1e-30);
                            continue;
                        }
                        let rel = (w - grad).abs() / grad;
                        assert!(rel < 1e-6, "{spec:?} t={t}: {w} vs {grad}");
                    }
                }
            }
        }
    }

    #[test]
    fn modal_loss_examples() {
        let g = RepresentingFunction::peak_one(RepresentingKind::Gaussian);
        assert_eq!(modal_loss(&g, 1.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(modal_loss(&g, 2.0, 1e4).unwrap(), 0.5);
        assert_relative_eq!(
            modal_loss(&g, 1.0, 1.0).unwrap(),
            1.0 - (-1.0f64).exp(),
            epsilon = 1e-15
        );
        let unit = RepresentingFunction::unit_integral(RepresentingKind::Gaussian);
        assert!(matches!(modal_loss(&unit, 1.0, 0.0), Err(Error::Normalization(_))));
    }

    #[test]
    fn modal_loss_scales_to_correntropy() {
        let g = RepresentingFunction::peak_one(RepresentingKind::Gaussian);
        for sigma in [0.1, 1.0, 3.0] {
            let c = LossSpec::correntropy(sigma).unwrap();
            for t in [-2.0, -0.3, 0.0, 0.7, 5.0] {
                let scaled = sigma.powi(3) * modal_loss(&g, sigma, t).unwrap();
                assert_relative_eq!(scaled, c.eval(t), max_relative = 1e-12, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn affine_identity_between_loss_mean_and_kde() {
        let g = RepresentingFunction::peak_one(RepresentingKind::Gaussian);
        let residuals = [-1.2, 0.0, 0.4, 3.3, -0.05, 7.0];
        let n = residuals.len() as f64;
        for sigma in [0.2, 1.0, 2.5] {
            let loss_mean: f64 = residuals
                .iter()
                .map(|&r| modal_loss(&g, sigma, r).unwrap())
                .sum::<f64>()
                / n;
            let kde_sum: f64 = residuals.iter().map(|&r| g.eval(r / sigma)).sum();
            let rhs = 1.0 / sigma - kde_sum / (n * sigma);
            assert!((loss_mean - rhs).abs() < 1e-14);
        }
    }

    fn any_loss() -> impl Strategy<Value = LossSpec> {
        (0usize..3, 0.05f64..20.0).prop_map(|(k, s)| match k {
            0 => LossSpec::correntropy(s).unwrap(),
            1 => LossSpec::huber(s).unwrap(),
            _ => LossSpec::lad(),
        })
    }

    proptest! {
        #[test]
        fn losses_are_even_and_nonnegative(spec in any_loss(), t in -1e3f64..1e3) {
            let a = spec.eval(t);
            prop_assert!(a >= 0.0);
            prop_assert_eq!(a, spec.eval(-t));
            prop_assert_eq!(spec.eval(0.0), 0.0);
        }

        #[test]
        fn weights_do_not_increase_with_magnitude(
            spec in any_loss(), a in 0.0f64..100.0, b in 0.0f64..100.0
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(spec.weight(hi) <= spec.weight(lo));
            prop_assert!(spec.weight(lo) >= 0.0);
        }

        #[test]
        fn representing_functions_are_symmetric_and_peaked(
            k in 0usize..4, unit in any::<bool>(), u in -20.0f64..20.0
        ) {
            let norm = if unit { Normalization::UnitIntegral } else { Normalization::PeakOne };
            let rf = RepresentingFunction::new(ALL_KINDS[k], norm);
            prop_assert_eq!(rf.eval(u), rf.eval(-u));
            prop_assert!(rf.eval(u) <= rf.eval(0.0));
            prop_assert!(rf.eval(u) >= 0.0);
        }
    }
}
