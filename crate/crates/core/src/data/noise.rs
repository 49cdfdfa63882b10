//! Analytic one-dimensional noise densities with derivatives and modes.

use rand::Rng;
use rand_distr::{Distribution, Normal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::erf::erf;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::losses::check_positive;
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian { mean: f64, sd: f64 },
    /// `weight · N(mean1, sd1²) + (1 - weight) · N(mean2, sd2²)`.
    Mixture {
        weight: f64,
        mean1: f64,
        sd1: f64,
        mean2: f64,
        sd2: f64,
    },
    StudentT { dof: f64, scale: f64 },
    /// Two-piece normal with mode `location`: the half-normal pieces have
    /// precision `2τ/θ²` to the right and `2(1-τ)/θ²` to the left.
    SkewNormal { location: f64, theta: f64, tau: f64 },
    /// Azzalini's skew normal `(2/ω) φ(z) Φ(αz)`, `z = (t - ξ)/ω`; smooth
    /// everywhere, mode located numerically.
    AzzaliniSkewNormal { location: f64, scale: f64, shape: f64 },
}

/// A noise density together with its (analytic or numerically located) mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseDensity {
    pub family: NoiseFamily,
    pub mode: f64,
}

impl NoiseDensity {
    pub fn new(family: NoiseFamily) -> Result<Self> {
        validate(&family)?;
        let mut d = Self { family, mode: 0.0 };
        d.mode = match family {
            NoiseFamily::Gaussian { mean, .. } => mean,
            NoiseFamily::StudentT { .. } => 0.0,
            NoiseFamily::SkewNormal { location, .. } => location,
            NoiseFamily::Mixture { .. } | NoiseFamily::AzzaliniSkewNormal { .. } => d.locate_mode(),
        };
        Ok(d)
    }

    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        Self::new(NoiseFamily::Gaussian { mean, sd })
    }

    pub fn standard_normal() -> Self {
        Self::gaussian(0.0, 1.0).expect("valid")
    }

    pub fn mixture(weight: f64, mean1: f64, sd1: f64, mean2: f64, sd2: f64) -> Result<Self> {
        Self::new(NoiseFamily::Mixture {
            weight,
            mean1,
            sd1,
            mean2,
            sd2,
        })
    }

    pub fn student_t(dof: f64, scale: f64) -> Result<Self> {
        Self::new(NoiseFamily::StudentT { dof, scale })
    }

    pub fn skew_normal(location: f64, theta: f64, tau: f64) -> Result<Self> {
        Self::new(NoiseFamily::SkewNormal { location, theta, tau })
    }

    pub fn azzalini(location: f64, scale: f64, shape: f64) -> Result<Self> {
        Self::new(NoiseFamily::AzzaliniSkewNormal { location, scale, shape })
    }

    pub fn mode(&self) -> f64 {
        self.mode
    }

    pub fn pdf(&self, t: f64) -> f64 {
        match self.family {
            NoiseFamily::Gaussian { mean, sd } => normal_pdf(t, mean, sd),
            NoiseFamily::Mixture {
                weight,
                mean1,
                sd1,
                mean2,
                sd2,
            } => weight * normal_pdf(t, mean1, sd1) + (1.0 - weight) * normal_pdf(t, mean2, sd2),
            NoiseFamily::StudentT { dof, scale } => {
                let z = t / scale;
                t_norm(dof, scale) * (1.0 + z * z / dof).powf(-0.5 * (dof + 1.0))
            }
            NoiseFamily::SkewNormal { location, theta, tau } => {
                let (c, kl, kr) = two_piece(theta, tau);
                let u = t - location;
                let k = if u > 0.0 { kr } else { kl };
                c * (-k * u * u).exp()
            }
            NoiseFamily::AzzaliniSkewNormal { location, scale, shape } => {
                let z = (t - location) / scale;
                2.0 * normal_pdf(z, 0.0, 1.0) * normal_cdf(shape * z, 0.0, 1.0) / scale
            }
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        match self.family {
            NoiseFamily::Gaussian { mean, sd } => normal_d1(t, mean, sd),
            NoiseFamily::Mixture {
                weight,
                mean1,
                sd1,
                mean2,
                sd2,
            } => weight * normal_d1(t, mean1, sd1) + (1.0 - weight) * normal_d1(t, mean2, sd2),
            NoiseFamily::StudentT { dof, scale } => {
                let z = t / scale;
                let a = 0.5 * (dof + 1.0);
                let q = 1.0 + z * z / dof;
                t_norm(dof, scale) * (-a) * q.powf(-a - 1.0) * 2.0 * z / (dof * scale)
            }
            NoiseFamily::SkewNormal { location, theta, tau } => {
                let (_, kl, kr) = two_piece(theta, tau);
                let u = t - location;
                let k = if u > 0.0 { kr } else { kl };
                -2.0 * k * u * self.pdf(t)
            }
            NoiseFamily::AzzaliniSkewNormal { location, scale, shape } => {
                let z = (t - location) / scale;
                let (phi, big, small) = azzalini_parts(z, shape);
                2.0 * phi * (-z * big + shape * small) / (scale * scale)
            }
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        match self.family {
            NoiseFamily::Gaussian { mean, sd } => normal_d2(t, mean, sd),
            NoiseFamily::Mixture {
                weight,
                mean1,
                sd1,
                mean2,
                sd2,
            } => weight * normal_d2(t, mean1, sd1) + (1.0 - weight) * normal_d2(t, mean2, sd2),
            NoiseFamily::StudentT { dof, scale } => {
                let z = t / scale;
                let a = 0.5 * (dof + 1.0);
                let q = 1.0 + z * z / dof;
                let dq = 2.0 * z / (dof * scale);
                let c = t_norm(dof, scale);
                c * (a * (a + 1.0) * q.powf(-a - 2.0) * dq * dq
                    - a * q.powf(-a - 1.0) * 2.0 / (dof * scale * scale))
            }
            NoiseFamily::SkewNormal { location, theta, tau } => {
                let (_, kl, kr) = two_piece(theta, tau);
                let u = t - location;
                let k = if u > 0.0 { kr } else { kl };
                (4.0 * k * k * u * u - 2.0 * k) * self.pdf(t)
            }
            NoiseFamily::AzzaliniSkewNormal { location, scale, shape } => {
                let z = (t - location) / scale;
                let (phi, big, small) = azzalini_parts(z, shape);
                let a = shape;
                2.0 * phi * ((z * z - 1.0) * big - (2.0 * a + a * a * a) * z * small) / scale.powi(3)
            }
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match self.family {
            NoiseFamily::Gaussian { mean, sd } => normal_cdf(t, mean, sd),
            NoiseFamily::Mixture {
                weight,
                mean1,
                sd1,
                mean2,
                sd2,
            } => weight * normal_cdf(t, mean1, sd1) + (1.0 - weight) * normal_cdf(t, mean2, sd2),
            NoiseFamily::StudentT { dof, scale } => {
                let z2 = (t / scale).powi(2);
                let half = 0.5 * beta_reg(0.5, 0.5 * dof, z2 / (dof + z2));
                if t >= 0.0 {
                    0.5 + half
                } else {
                    0.5 - half
                }
            }
            NoiseFamily::SkewNormal { location, theta, tau } => {
                let (c, kl, kr) = two_piece(theta, tau);
                let left_mass = 0.5 * c * (PI / kl).sqrt();
                let u = t - location;
                if u <= 0.0 {
                    c * (PI / kl).sqrt() * normal_cdf(u * (2.0 * kl).sqrt(), 0.0, 1.0)
                } else {
                    left_mass + c * (PI / kr).sqrt() * (normal_cdf(u * (2.0 * kr).sqrt(), 0.0, 1.0) - 0.5)
                }
            }
            NoiseFamily::AzzaliniSkewNormal { location, scale, shape } => {
                let z = (t - location) / scale;
                (normal_cdf(z, 0.0, 1.0) - 2.0 * owens_t(z, shape)).clamp(0.0, 1.0)
            }
        }
    }

    /// Inverse CDF by bisection.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid("p", "quantile level must lie in (0, 1)"));
        }
        let s = self.scale();
        let (mut lo, mut hi) = (self.mode - s, self.mode + s);
        while self.cdf(lo) > p {
            lo -= 2.0 * (hi - lo);
        }
        while self.cdf(hi) < p {
            hi += 2.0 * (hi - lo);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 * (1.0 + mid.abs()) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Spread of the density: the standard deviation where it exists.
    pub fn scale(&self) -> f64 {
        match self.family {
            NoiseFamily::Gaussian { sd, .. } => sd,
            NoiseFamily::Mixture {
                weight,
                mean1,
                sd1,
                mean2,
                sd2,
            } => {
                let mean = weight * mean1 + (1.0 - weight) * mean2;
                let second = weight * (sd1 * sd1 + mean1 * mean1) + (1.0 - weight) * (sd2 * sd2 + mean2 * mean2);
                (second - mean * mean).sqrt()
            }
            NoiseFamily::StudentT { dof, scale } => {
                if dof > 2.0 {
                    scale * (dof / (dof - 2.0)).sqrt()
                } else {
                    scale
                }
            }
            NoiseFamily::SkewNormal { theta, tau, .. } => {
                let (_, kl, kr) = two_piece(theta, tau);
                (0.5 / kl.min(kr)).sqrt()
            }
            NoiseFamily::AzzaliniSkewNormal { scale, shape, .. } => {
                let delta = shape / (1.0 + shape * shape).sqrt();
                scale * (1.0 - 2.0 * delta * delta / PI).sqrt()
            }
        }
    }

    /// Narrowest length scale of the density, used for grid resolution.
    pub fn fine_scale(&self) -> f64 {
        match self.family {
            NoiseFamily::Mixture { sd1, sd2, .. } => sd1.min(sd2),
            NoiseFamily::StudentT { scale, .. } => scale,
            NoiseFamily::SkewNormal { theta, tau, .. } => {
                let (_, kl, kr) = two_piece(theta, tau);
                (0.5 / kl.max(kr)).sqrt()
            }
            _ => self.scale(),
        }
    }

    /// `sup |p''|` by grid maximization with step `1e-3` times the fine scale
    /// over `mode ± radius · scale`.
    pub fn sup_abs_d2(&self, radius: f64) -> f64 {
        let step = 1e-3 * self.fine_scale();
        let half = radius * self.scale();
        let lo = self.mode - half;
        let n = (2.0 * half / step).ceil() as usize;
        (0..=n)
            .map(|i| self.d2(lo + i as f64 * step).abs())
            .fold(0.0, f64::max)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            NoiseFamily::Gaussian { mean, sd } => Normal::new(mean, sd).expect("validated").sample(rng),
            NoiseFamily::Mixture {
                weight,
                mean1,
                sd1,
                mean2,
                sd2,
            } => {
                let first = rng.random::<f64>() < weight;
                let (m, s) = if first { (mean1, sd1) } else { (mean2, sd2) };
                Normal::new(m, s).expect("validated").sample(rng)
            }
            NoiseFamily::StudentT { dof, scale } => scale * StudentT::new(dof).expect("validated").sample(rng),
            NoiseFamily::SkewNormal { location, theta, tau } => {
                let (c, kl, kr) = two_piece(theta, tau);
                let left_mass = 0.5 * c * (PI / kl).sqrt();
                let z: f64 = Normal::new(0.0, 1.0).expect("valid").sample(rng);
                if rng.random::<f64>() < left_mass {
                    location - z.abs() / (2.0 * kl).sqrt()
                } else {
                    location + z.abs() / (2.0 * kr).sqrt()
                }
            }
            NoiseFamily::AzzaliniSkewNormal { location, scale, shape } => {
                let delta = shape / (1.0 + shape * shape).sqrt();
                let n = Normal::new(0.0, 1.0).expect("valid");
                let (u0, u1): (f64, f64) = (n.sample(rng), n.sample(rng));
                location + scale * (delta * u0.abs() + (1.0 - delta * delta).sqrt() * u1)
            }
        }
    }

    fn locate_mode(&self) -> f64 {
        let (lo, hi, step) = match self.family {
            NoiseFamily::Mixture {
                mean1,
                sd1,
                mean2,
                sd2,
                ..
            } => (
                (mean1 - 4.0 * sd1).min(mean2 - 4.0 * sd2),
                (mean1 + 4.0 * sd1).max(mean2 + 4.0 * sd2),
                sd1.min(sd2) / 200.0,
            ),
            NoiseFamily::AzzaliniSkewNormal { location, scale, .. } => {
                (location - 4.0 * scale, location + 4.0 * scale, scale / 200.0)
            }
            _ => return self.mode,
        };
        let n = ((hi - lo) / step).ceil() as usize;
        let best = (0..=n)
            .map(|i| lo + i as f64 * step)
            .max_by(|a, b| self.pdf(*a).total_cmp(&self.pdf(*b)))
            .unwrap_or(lo);
        let mut m = golden_section_max(|t| self.pdf(t), best - step, best + step, 1e-12);
        // The density is flat at its peak; polish on the derivative.
        for _ in 0..8 {
            let d2 = self.d2(m);
            if d2 >= 0.0 {
                break;
            }
            let next = m - self.d1(m) / d2;
            if (next - best).abs() > step {
                break;
            }
            m = next;
        }
        m
    }
}

/// Maximizes a unimodal function on `[a, b]`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn validate(family: &NoiseFamily) -> Result<()> {
    match *family {
        NoiseFamily::Gaussian { mean, sd } => {
            check_finite("mean", mean)?;
            check_positive("sd", sd)
        }
        NoiseFamily::Mixture {
            weight,
            mean1,
            sd1,
            mean2,
            sd2,
        } => {
            if !(weight > 0.0 && weight < 1.0) {
                return Err(Error::invalid("weight", "mixture weight must lie in (0, 1)"));
            }
            check_finite("mean1", mean1)?;
            check_finite("mean2", mean2)?;
            check_positive("sd1", sd1)?;
            check_positive("sd2", sd2)
        }
        NoiseFamily::StudentT { dof, scale } => {
            check_positive("dof", dof)?;
            check_positive("scale", scale)
        }
        NoiseFamily::SkewNormal { location, theta, tau } => {
            check_finite("location", location)?;
            check_positive("theta", theta)?;
            if !(tau > 0.0 && tau < 1.0) {
                return Err(Error::invalid("tau", "must lie in (0, 1)"));
            }
            Ok(())
        }
        NoiseFamily::AzzaliniSkewNormal { location, scale, shape } => {
            check_finite("location", location)?;
            check_finite("shape", shape)?;
            check_positive("scale", scale)
        }
    }
}

fn check_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be finite"))
    }
}

fn normal_pdf(t: f64, mean: f64, sd: f64) -> f64 {
    let z = (t - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

fn normal_d1(t: f64, mean: f64, sd: f64) -> f64 {
    let z = (t - mean) / sd;
    -z / sd * normal_pdf(t, mean, sd)
}

fn normal_d2(t: f64, mean: f64, sd: f64) -> f64 {
    let z = (t - mean) / sd;
    (z * z - 1.0) / (sd * sd) * normal_pdf(t, mean, sd)
}

fn normal_cdf(t: f64, mean: f64, sd: f64) -> f64 {
    0.5 * (1.0 + erf((t - mean) / (sd * SQRT_2)))
}

/// `φ(z)`, `Φ(αz)` and `φ(αz)`.
fn azzalini_parts(z: f64, shape: f64) -> (f64, f64, f64) {
    (
        normal_pdf(z, 0.0, 1.0),
        normal_cdf(shape * z, 0.0, 1.0),
        normal_pdf(shape * z, 0.0, 1.0),
    )
}

/// Owen's T function `T(h, a) = (1/2π) ∫₀ᵃ exp(-h²(1+x²)/2) / (1+x²) dx`.
fn owens_t(h: f64, a: f64) -> f64 {
    let rule = GaussLegendre::new(20);
    let f = |x: f64| (-0.5 * h * h * (1.0 + x * x)).exp() / (1.0 + x * x);
    rule.integrate_adaptive(&f, 0.0, a, 1e-15)
        .unwrap_or_else(|_| rule.apply(&f, 0.0, a))
        / (2.0 * PI)
}

fn t_norm(dof: f64, scale: f64) -> f64 {
    (ln_gamma(0.5 * (dof + 1.0)) - ln_gamma(0.5 * dof)).exp() / ((dof * PI).sqrt() * scale)
}

/// Normalizing constant and left/right precisions of the two-piece normal.
fn two_piece(theta: f64, tau: f64) -> (f64, f64, f64) {
    let kr = 2.0 * tau / (theta * theta);
    let kl = 2.0 * (1.0 - tau) / (theta * theta);
    let total = 0.5 * (PI / kl).sqrt() + 0.5 * (PI / kr).sqrt();
    (1.0 / total, kl, kr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureSpec;
    use approx::assert_relative_eq;

    fn families() -> Vec<NoiseDensity> {
        vec![
            NoiseDensity::standard_normal(),
            NoiseDensity::gaussian(0.4, 2.0).unwrap(),
            NoiseDensity::mixture(0.5, -1.0, 2.5, 1.0, 0.5).unwrap(),
            NoiseDensity::mixture(0.95, 0.0, 1.0, 0.0, 3.5).unwrap(),
            NoiseDensity::student_t(3.0, 1.0 / 3f64.sqrt()).unwrap(),
            NoiseDensity::skew_normal(0.3, 1.0, 0.3).unwrap(),
            NoiseDensity::azzalini(0.0, 1.0, 3.0).unwrap(),
            NoiseDensity::azzalini(0.5, 1.5, -2.0).unwrap(),
        ]
    }

    #[test]
    fn densities_integrate_to_one() {
        let q = QuadratureSpec::default().with_tol(1e-10);
        for d in families() {
            let (lo, hi) = match d.family {
                // Polynomial tails: integrate the bulk and add the exact
                // tail mass from the CDF.
                NoiseFamily::StudentT { .. } => (-200.0, 200.0),
                _ => (d.mode - 40.0 * d.scale(), d.mode + 40.0 * d.scale()),
            };
            let mut total = q.integrate_pieces(|t| d.pdf(t), &[lo, d.mode, hi]).unwrap();
            if let NoiseFamily::StudentT { .. } = d.family {
                total += d.cdf(lo) + (1.0 - d.cdf(hi));
            }
            assert!((total - 1.0).abs() < 1e-6, "{:?}: {total}", d.family);
        }
    }

    #[test]
    fn mode_maximizes_density_on_grid() {
        for d in families() {
            let m = d.mode();
            let peak = d.pdf(m);
            for i in 0..=10_000 {
                let t = m - 10.0 + i as f64 * 20.0 / 10_000.0;
                assert!(d.pdf(t) <= peak + 1e-15, "{:?} at {t}", d.family);
            }
        }
    }

    #[test]
    fn skewed_mixture_mode_is_near_but_not_at_one() {
        let d = NoiseDensity::mixture(0.5, -1.0, 2.5, 1.0, 0.5).unwrap();
        let m = d.mode();
        assert!((m - 1.0).abs() < 0.05, "mode {m}");
        assert!((m - 1.0).abs() > 1e-4);
        assert!(d.d1(m).abs() < 1e-10);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for d in families() {
            for &t in &[-2.3, -0.7, 0.05, 0.9, 1.7] {
                if let NoiseFamily::SkewNormal { location, .. } = d.family {
                    if (t - location).abs() < 1e-3 {
                        continue;
                    }
                }
                let h = 1e-5;
                let fd1 = (d.pdf(t + h) - d.pdf(t - h)) / (2.0 * h);
                let fd2 = (d.d1(t + h) - d.d1(t - h)) / (2.0 * h);
                assert_relative_eq!(d.d1(t), fd1, epsilon = 1e-8);
                assert_relative_eq!(d.d2(t), fd2, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn cdf_is_integral_of_pdf() {
        let q = QuadratureSpec::default().with_tol(1e-11);
        for d in families() {
            let lo = d.mode - 8.0;
            for &t in &[-1.0, 0.2, 1.5] {
                let pieces = if d.mode < t { vec![lo, d.mode, t] } else { vec![lo, t] };
                let integral = q.integrate_pieces(|s| d.pdf(s), &pieces).unwrap();
                let expected = d.cdf(t) - d.cdf(lo);
                assert!((integral - expected).abs() < 1e-8, "{:?} at {t}", d.family);
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for d in families() {
            for p in [0.1, 0.5, 0.9] {
                let q = d.quantile(p).unwrap();
                assert!((d.cdf(q) - p).abs() < 1e-10, "{:?} {p}: {}", d.family, d.cdf(q));
            }
        }
        assert!(NoiseDensity::standard_normal().quantile(1.0).is_err());
    }

    #[test]
    fn standard_normal_curvature() {
        let d = NoiseDensity::standard_normal();
        let sup = d.sup_abs_d2(12.0);
        assert_relative_eq!(sup, 1.0 / (2.0 * PI).sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn azzalini_reduces_to_normal_without_skew() {
        let a = NoiseDensity::azzalini(0.0, 1.0, 0.0).unwrap();
        let n = NoiseDensity::standard_normal();
        for t in [-1.3, 0.0, 0.4, 2.2] {
            assert_relative_eq!(a.pdf(t), n.pdf(t), epsilon = 1e-15);
            assert_relative_eq!(a.cdf(t), n.cdf(t), epsilon = 1e-14);
        }
        assert!(a.mode().abs() < 1e-8);
    }

    #[test]
    fn azzalini_samples_match_moments() {
        use rand::SeedableRng;
        let d = NoiseDensity::azzalini(0.0, 1.0, 3.0).unwrap();
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(1);
        let n = 200_000;
        let s: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        let mean = s.iter().sum::<f64>() / n as f64;
        let delta = 3.0 / 10f64.sqrt();
        assert!((mean - delta * (2.0 / PI).sqrt()).abs() < 0.01);
        let sd = (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((sd - d.scale()).abs() < 0.01);
    }

    #[test]
    fn invalid_parameters() {
        assert!(NoiseDensity::gaussian(0.0, 0.0).is_err());
        assert!(NoiseDensity::mixture(1.0, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(NoiseDensity::skew_normal(0.0, 1.0, 1.0).is_err());
        assert!(NoiseDensity::student_t(0.0, 1.0).is_err());
    }
}
