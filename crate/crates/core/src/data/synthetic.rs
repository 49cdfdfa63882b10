//! Seeded toy data-generating models and their reference functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::noise::NoiseDensity;
use super::{Dataset, Provenance};
use crate::error::{Error, Result};

/// RNG stream carrying the inputs.
const X_STREAM: u64 = 0;
/// RNG stream carrying the noise.
const NOISE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyModel {
    /// `y = 2 sin(πx) + (1 + 2x) ε`, `x ~ U(0, 1)`.
    Toy1,
    /// `y = sinc(x) + ε`, `x ~ U(-4, 4)`.
    Toy2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseCase {
    /// `0.5 N(-1, 2.5²) + 0.5 N(1, 0.5²)`.
    MixtureSkewed,
    /// `N(0, 1)`.
    Gaussian,
    /// `t₃ / √3`.
    StudentT3,
    /// `0.95 N(0, 1) + 0.05 N(0, 3.5²)`.
    ContaminatedGaussian,
}

impl NoiseCase {
    pub fn density(&self) -> NoiseDensity {
        match self {
            NoiseCase::MixtureSkewed => NoiseDensity::mixture(0.5, -1.0, 2.5, 1.0, 0.5),
            NoiseCase::Gaussian => NoiseDensity::gaussian(0.0, 1.0),
            NoiseCase::StudentT3 => NoiseDensity::student_t(3.0, 1.0 / 3f64.sqrt()),
            NoiseCase::ContaminatedGaussian => NoiseDensity::mixture(0.95, 0.0, 1.0, 0.0, 3.5),
        }
        .expect("fixed parameters are valid")
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseCase::MixtureSkewed => "mixture_skewed",
            NoiseCase::Gaussian => "gaussian",
            NoiseCase::StudentT3 => "student_t3",
            NoiseCase::ContaminatedGaussian => "contaminated_gaussian",
        }
    }
}

/// Regression function `f*` of a population model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truth {
    Zero,
    /// `sin(πx) / (πx)` with value 1 at the origin.
    Sinc,
    /// `2 sin(πx)`.
    DoubleSine,
    /// `intercept + slope · x`.
    Linear { intercept: f64, slope: f64 },
}

impl Truth {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Truth::Zero => 0.0,
            Truth::Sinc => sinc(x),
            Truth::DoubleSine => 2.0 * (PI * x).sin(),
            Truth::Linear { intercept, slope } => intercept + slope * x,
        }
    }
}

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Noise scale as a function of the input, `κ(x) = base + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearScale {
    pub base: f64,
    pub slope: f64,
}

impl LinearScale {
    pub const UNIT: LinearScale = LinearScale { base: 1.0, slope: 0.0 };

    pub fn eval(&self, x: f64) -> f64 {
        self.base + self.slope * x
    }

    pub fn is_constant(&self) -> bool {
        self.slope == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub model: ToyModel,
    pub noise: NoiseCase,
    pub n: usize,
    /// Multiplier on the sampled noise; 0 gives noiseless responses.
    #[serde(default = "one")]
    pub noise_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl SyntheticSpec {
    pub fn new(model: ToyModel, noise: NoiseCase, n: usize) -> Result<Self> {
        let spec = Self {
            model,
            noise,
            n,
            noise_scale: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn toy1(n: usize) -> Self {
        Self::new(ToyModel::Toy1, NoiseCase::MixtureSkewed, n).expect("valid pairing")
    }

    pub fn toy2(noise: NoiseCase, n: usize) -> Result<Self> {
        Self::new(ToyModel::Toy2, noise, n)
    }

    pub fn with_noise_scale(self, noise_scale: f64) -> Result<Self> {
        let spec = Self { noise_scale, ..self };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.model {
            ToyModel::Toy1 => self.noise == NoiseCase::MixtureSkewed,
            ToyModel::Toy2 => self.noise != NoiseCase::MixtureSkewed,
        };
        if !ok {
            return Err(Error::InvalidPairing {
                model: format!("{:?}", self.model),
                noise: self.noise.name().to_string(),
            });
        }
        if self.n == 0 {
            return Err(Error::invalid("n", "sample count must be at least 1"));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::invalid("noise_scale", "must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn input_range(&self) -> (f64, f64) {
        match self.model {
            ToyModel::Toy1 => (0.0, 1.0),
            ToyModel::Toy2 => (-4.0, 4.0),
        }
    }

    pub fn truth(&self) -> Truth {
        match self.model {
            ToyModel::Toy1 => Truth::DoubleSine,
            ToyModel::Toy2 => Truth::Sinc,
        }
    }

    pub fn noise_scale_fn(&self) -> LinearScale {
        match self.model {
            ToyModel::Toy1 => LinearScale { base: 1.0, slope: 2.0 },
            ToyModel::Toy2 => LinearScale::UNIT,
        }
    }

    pub fn noise_density(&self) -> NoiseDensity {
        self.noise.density()
    }

    pub fn references(&self) -> ReferenceFunctions {
        ReferenceFunctions { spec: *self }
    }
}

/// Draws `spec.n` observations. Inputs and noise come from separate ChaCha20
/// streams seeded by `seed`, so the inputs do not depend on the noise family.
pub fn generate(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let mut x_rng = ChaCha20Rng::seed_from_u64(seed);
    x_rng.set_stream(X_STREAM);
    let mut e_rng = ChaCha20Rng::seed_from_u64(seed);
    e_rng.set_stream(NOISE_STREAM);

    let (a, b) = spec.input_range();
    let truth = spec.truth();
    let kappa = spec.noise_scale_fn();
    let noise = spec.noise_density();
    let mut xs = Vec::with_capacity(spec.n);
    let mut ys = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let x = a + (b - a) * x_rng.random::<f64>();
        let e = noise.sample(&mut e_rng);
        xs.push(vec![x]);
        ys.push(truth.eval(x) + spec.noise_scale * kappa.eval(x) * e);
    }
    let mut ds = Dataset::new(xs, ys)?;
    ds.provenance = Some(Provenance { spec: *spec, seed });
    Ok(ds)
}

/// `m` equally spaced inputs spanning the model's input range.
pub fn uniform_grid(spec: &SyntheticSpec, m: usize) -> Vec<Vec<f64>> {
    let (a, b) = spec.input_range();
    grid(a, b, m)
}

pub(crate) fn grid(a: f64, b: f64, m: usize) -> Vec<Vec<f64>> {
    match m {
        0 => Vec::new(),
        1 => vec![vec![0.5 * (a + b)]],
        _ => (0..m)
            .map(|i| vec![a + (b - a) * i as f64 / (m - 1) as f64])
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    Mode,
    Median,
    Mean,
}

/// Conditional mode, median and mean of a toy model. The Toy1 mode and
/// median use the rounded closed forms customary for this model; the `exact_*`
/// variants use the numerically located noise mode and median.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceFunctions {
    spec: SyntheticSpec,
}

impl ReferenceFunctions {
    pub fn mode(&self, x: f64) -> f64 {
        match self.spec.model {
            ToyModel::Toy1 => 2.0 * (PI * x).sin() + 1.0 + 2.0 * x,
            ToyModel::Toy2 => sinc(x),
        }
    }

    pub fn median(&self, x: f64) -> f64 {
        match self.spec.model {
            ToyModel::Toy1 => 2.0 * (PI * x).sin() + 0.67 + 1.34 * x,
            ToyModel::Toy2 => sinc(x),
        }
    }

    pub fn mean(&self, x: f64) -> f64 {
        match self.spec.model {
            ToyModel::Toy1 => 2.0 * (PI * x).sin(),
            ToyModel::Toy2 => sinc(x),
        }
    }

    pub fn eval(&self, kind: ReferenceKind, x: f64) -> f64 {
        match kind {
            ReferenceKind::Mode => self.mode(x),
            ReferenceKind::Median => self.median(x),
            ReferenceKind::Mean => self.mean(x),
        }
    }

    pub fn exact_mode(&self, x: f64) -> f64 {
        let d = self.spec.noise_density();
        self.spec.truth().eval(x) + self.spec.noise_scale_fn().eval(x) * d.mode()
    }

    pub fn exact_median(&self, x: f64) -> f64 {
        let d = self.spec.noise_density();
        let med = d.quantile(0.5).expect("0.5 is a valid level");
        self.spec.truth().eval(x) + self.spec.noise_scale_fn().eval(x) * med
    }
}
