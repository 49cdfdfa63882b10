//! Error metrics and repetition summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Point;
use crate::model_select::mean_std;
use crate::solver::KernelModel;

fn check_pair(pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: target.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput("predictions"));
    }
    if pred.iter().chain(target).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("metric inputs"));
    }
    Ok(())
}

pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_pair(pred, target)?;
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len() as f64)
}

pub fn mae(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_pair(pred, target)?;
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

/// Root-mean-square difference between the model and `reference` over
/// `grid`, a discretized `L²` distance under a uniform marginal.
pub fn distance_to_reference(model: &KernelModel, reference: &dyn Fn(&[f64]) -> f64, grid: &[Point]) -> Result<f64> {
    let pred = model.predict(grid)?;
    let target: Vec<f64> = grid.iter().map(|p| reference(p)).collect();
    Ok(mse(&pred, &target)?.sqrt())
}

/// Values over repetitions with their mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&values);
        Self { values, mean, std }
    }

    /// `mean ± std` with four decimals.
    pub fn formatted(&self) -> String {
        format!("{:.4} ± {:.4}", self.mean, self.std)
    }
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.formatted())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub mse: Summary,
    pub mae: Summary,
}

impl EvalSummary {
    pub fn new(mse: Vec<f64>, mae: Vec<f64>) -> Self {
        Self {
            mse: Summary::from_values(mse),
            mae: Summary::from_values(mae),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::MercerKernel;
    use proptest::prelude::*;

    #[test]
    fn metric_examples() {
        let t = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mse(&t, &t).unwrap(), 0.0);
        assert_eq!(mae(&t, &t).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, -1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(mae(&[1.0, -1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(mse(&[3.0, 0.0, 0.0, 0.0], &[0.0; 4]).unwrap(), 2.25);
        assert_eq!(mae(&[3.0, 0.0, 0.0, 0.0], &[0.0; 4]).unwrap(), 0.75);
        assert!(matches!(mse(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn reference_distance_examples() {
        let grid: Vec<Point> = (0..10).map(|i| vec![i as f64 / 9.0]).collect();
        let model = KernelModel::new(MercerKernel::Linear, vec![0.0; 2], 1.0, vec![vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(distance_to_reference(&model, &|_| 0.0, &grid).unwrap(), 1.0);
        assert_eq!(distance_to_reference(&model, &|_| 1.0, &grid).unwrap(), 0.0);
    }

    #[test]
    fn summary_formatting() {
        let s = Summary::from_values(vec![0.0050, 0.0100]);
        assert_eq!(s.formatted(), "0.0075 ± 0.0035");
        assert_eq!(Summary::from_values(vec![2.0]).std, 0.0);
    }

    proptest! {
        #[test]
        fn metrics_are_nonnegative_and_permutation_invariant(
            e in proptest::collection::vec(-100.0f64..100.0, 1..40),
            rot in 0usize..40,
        ) {
            let zeros = vec![0.0; e.len()];
            let m = mse(&e, &zeros).unwrap();
            let a = mae(&e, &zeros).unwrap();
            prop_assert!(m >= 0.0 && a >= 0.0);
            // Cauchy-Schwarz: the mean square dominates the squared mean.
            prop_assert!(m >= a * a * (1.0 - 1e-12));
            let mut p = e.clone();
            p.rotate_left(rot % e.len());
            p.reverse();
            prop_assert!((mse(&p, &zeros).unwrap() - m).abs() <= 1e-9 * (1.0 + m));
            prop_assert!((mae(&p, &zeros).unwrap() - a).abs() <= 1e-9 * (1.0 + a));
        }

        #[test]
        fn constant_magnitude_errors_give_equality(c in 0.0f64..50.0, signs in proptest::collection::vec(any::<bool>(), 1..20)) {
            let e: Vec<f64> = signs.iter().map(|s| if *s { c } else { -c }).collect();
            let zeros = vec![0.0; e.len()];
            let m = mse(&e, &zeros).unwrap();
            let a = mae(&e, &zeros).unwrap();
            prop_assert!((m - a * a).abs() <= 1e-9 * (1.0 + m));
        }
    }
}
