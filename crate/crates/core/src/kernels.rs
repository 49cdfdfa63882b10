//! Mercer kernels on the input space and Gram-matrix assembly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::check_positive;

/// An input point.
pub type Point = Vec<f64>;

/// Mercer kernel on `R^d`. The Gaussian kernel uses `exp(-|x - x'|^2 / h^2)`
/// (no factor of two in the exponent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MercerKernel {
    #[serde(rename = "rbf")]
    GaussianRbf { h: f64 },
    Linear,
    #[serde(rename = "poly")]
    Polynomial { degree: u32 },
}

impl MercerKernel {
    pub fn rbf(h: f64) -> Result<Self> {
        let k = MercerKernel::GaussianRbf { h };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MercerKernel::GaussianRbf { h } => check_positive("bandwidth", h),
            MercerKernel::Linear => Ok(()),
            MercerKernel::Polynomial { degree } => {
                if degree >= 1 {
                    Ok(())
                } else {
                    Err(Error::invalid("degree", "polynomial degree must be at least 1"))
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        if x.len() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: z.len(),
            });
        }
        Ok(self.eval_unchecked(x, z))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            MercerKernel::GaussianRbf { h } => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (h * h)).exp()
            }
            MercerKernel::Linear => dot(x, z),
            MercerKernel::Polynomial { degree } => (1.0 + dot(x, z)).powi(degree as i32),
        }
    }

    /// Bandwidth of the Gaussian kernel, if any.
    pub fn bandwidth(&self) -> Option<f64> {
        match *self {
            MercerKernel::GaussianRbf { h } => Some(h),
            _ => None,
        }
    }
}

#[inline]
fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

/// Symmetric kernel matrix `K[i][j] = k(x_i, x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
}

impl GramMatrix {
    /// Wraps a matrix, symmetrizing it from the lower triangle.
    pub fn from_matrix(mut entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 {
            return Err(Error::EmptyInput("gram matrix"));
        }
        if entries.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: entries.ncols(),
            });
        }
        for j in 0..n {
            for i in 0..j {
                entries[(i, j)] = entries[(j, i)];
            }
        }
        Ok(Self { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Principal submatrix on `idx` (rows and columns in the given order).
    pub fn select(&self, idx: &[usize]) -> GramMatrix {
        let m = idx.len();
        let entries = DMatrix::from_fn(m, m, |a, b| self.entries[(idx[a], idx[b])]);
        GramMatrix { entries }
    }

    /// Rectangular block with rows `rows` and columns `cols`.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |a, b| self.entries[(rows[a], cols[b])])
    }
}

pub(crate) fn check_points(x: &[Point], what: &'static str) -> Result<usize> {
    let first = x.first().ok_or(Error::EmptyInput(what))?;
    let d = first.len();
    for p in x {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(what));
        }
    }
    Ok(d)
}

/// Assembles the Gram matrix; each unordered pair is evaluated once.
pub fn gram(kernel: &MercerKernel, x: &[Point]) -> Result<GramMatrix> {
    kernel.validate()?;
    check_points(x, "inputs")?;
    let n = x.len();
    let mut entries = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let v = kernel.eval_unchecked(&x[i], &x[j]);
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(GramMatrix { entries })
}

/// `m x n` matrix with entry `[t][i] = k(test_t, train_i)`.
pub fn cross_gram(kernel: &MercerKernel, train: &[Point], test: &[Point]) -> Result<DMatrix<f64>> {
    kernel.validate()?;
    let d = check_points(train, "training inputs")?;
    if test.is_empty() {
        return Ok(DMatrix::zeros(0, train.len()));
    }
    let dt = check_points(test, "test inputs")?;
    if d != dt {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: dt,
        });
    }
    Ok(DMatrix::from_fn(test.len(), train.len(), |t, i| {
        kernel.eval_unchecked(&test[t], &train[i])
    }))
}

/// Median of the pairwise Euclidean distances, the usual reference scale for
/// Gaussian bandwidth grids. Returns 1 when every point coincides.
pub fn median_heuristic(x: &[Point]) -> f64 {
    let mut d = Vec::with_capacity(x.len() * x.len().saturating_sub(1) / 2);
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let s: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d.push(s.sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    let med = if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    };
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, d: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect()
    }

    #[test]
    fn kernel_eval_examples() {
        let k = MercerKernel::rbf(1.0).unwrap();
        assert_eq!(k.eval(&[0.3, 1.0], &[0.3, 1.0]).unwrap(), 1.0);
        let k2 = MercerKernel::rbf(2.0).unwrap();
        assert_relative_eq!(k2.eval(&[0.0], &[2.0]).unwrap(), (-1.0f64).exp());
        assert_eq!(MercerKernel::Linear.eval(&[1.0, 2.0], &[3.0, -1.0]).unwrap(), 1.0);
        let p = MercerKernel::Polynomial { degree: 2 };
        assert_eq!(p.eval(&[1.0], &[2.0]).unwrap(), 9.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(matches!(
            MercerKernel::Linear.eval(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let train = vec![vec![0.0, 1.0]];
        let test = vec![vec![0.0]];
        assert!(cross_gram(&MercerKernel::Linear, &train, &test).is_err());
    }

    #[test]
    fn invalid_kernels_rejected() {
        assert!(MercerKernel::rbf(0.0).is_err());
        assert!(MercerKernel::Polynomial { degree: 0 }.validate().is_err());
    }

    #[test]
    fn gram_examples() {
        let k = MercerKernel::rbf(0.7).unwrap();
        let x = random_points(3, 2, 1);
        let g = gram(&k, &x).unwrap();
        for i in 0..3 {
            assert_eq!(g.get(i, i), 1.0);
        }
        let wide = MercerKernel::rbf(1e8).unwrap();
        let g = gram(&wide, &x).unwrap();
        assert!(g.matrix().iter().all(|&v| (v - 1.0).abs() < 1e-12));

        let mut dup = random_points(4, 1, 2);
        dup[3] = dup[1].clone();
        let g = gram(&k, &dup).unwrap();
        for j in 0..4 {
            assert_eq!(g.get(1, j), g.get(3, j));
        }
        assert!(matches!(gram(&k, &[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn gram_is_symmetric_and_psd() {
        let k = MercerKernel::rbf(0.9).unwrap();
        for seed in 0..5 {
            let x = random_points(40, 3, seed);
            let g = gram(&k, &x).unwrap();
            let m = g.matrix();
            assert_eq!(m, &m.transpose());
            let eig = m.clone().symmetric_eigen();
            let min = eig.eigenvalues.min();
            assert!(min >= -1e-8 * 40.0, "min eigenvalue {min}");
        }
    }

    #[test]
    fn cross_gram_examples() {
        let k = MercerKernel::rbf(1.0).unwrap();
        let x = random_points(6, 2, 3);
        let g = gram(&k, &x).unwrap();
        assert_eq!(&cross_gram(&k, &x, &x).unwrap(), g.matrix());
        let one = vec![vec![0.5]];
        assert_eq!(cross_gram(&k, &one, &one).unwrap()[(0, 0)], 1.0);
        let train: Vec<Point> = (0..5).map(|i| vec![i as f64 * 0.1]).collect();
        let far = vec![vec![10.4]];
        let c = cross_gram(&k, &train, &far).unwrap();
        assert!(c.iter().all(|&v| v <= (-100.0f64).exp()));
    }

    #[test]
    fn rbf_gram_is_translation_invariant() {
        let k = MercerKernel::rbf(1.3).unwrap();
        let x = random_points(20, 2, 4);
        let shifted: Vec<Point> = x.iter().map(|p| vec![p[0] + 5.5, p[1] - 2.25]).collect();
        let a = gram(&k, &x).unwrap();
        let b = gram(&k, &shifted).unwrap();
        let diff = (a.matrix() - b.matrix()).amax();
        assert!(diff < 1e-12);
    }

    #[test]
    fn median_heuristic_on_line() {
        let x: Vec<Point> = (0..3).map(|i| vec![i as f64]).collect();
        // distances 1, 1, 2
        assert_eq!(median_heuristic(&x), 1.0);
        assert_eq!(median_heuristic(&[vec![1.0], vec![1.0]]), 1.0);
    }
}
