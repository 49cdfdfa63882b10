//! k-fold cross-validation over the penalty, kernel bandwidth and loss scale.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{check_points, gram, median_heuristic, GramMatrix, MercerKernel, Point};
use crate::losses::{LossKind, LossSpec, RepresentingFunction, RepresentingKind};
use crate::solver::{irls_fit_gram, irls_fit_gram_from, IrlsConfig, Initialization};

/// Candidate values for `(λ, h, σ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub lambdas: Vec<f64>,
    /// Gaussian-kernel bandwidths; leave empty for other kernels.
    pub bandwidths: Vec<f64>,
    /// Loss scales; ignored (and allowed empty) for LAD.
    pub sigmas: Vec<f64>,
}

impl ParamGrid {
    /// `λ ∈ 10^{-6..1}` (8 values), `h ∈ m·{1/4, 1/2, 1, 2, 4}` where `m` is the
    /// median pairwise distance, and `σ ∈ {0.02, …, 10}`.
    pub fn default_for(x: &[Point]) -> Self {
        let m = median_heuristic(x);
        Self {
            lambdas: (0..8).map(|i| 10f64.powi(i - 6)).collect(),
            bandwidths: [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|f| f * m).collect(),
            sigmas: vec![0.02, 0.05, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0],
        }
    }

    pub fn validate(&self, loss: LossKind, kernel: &MercerKernel) -> Result<()> {
        check_list("lambdas", &self.lambdas, false)?;
        let rbf = matches!(kernel, MercerKernel::GaussianRbf { .. });
        check_list("bandwidths", &self.bandwidths, !rbf)?;
        if !rbf && !self.bandwidths.is_empty() {
            return Err(Error::invalid("bandwidths", "only the Gaussian kernel has a bandwidth"));
        }
        check_list("sigmas", &self.sigmas, loss == LossKind::Lad)
    }

    fn cells(&self, loss: LossKind) -> Vec<Cell> {
        let hs: Vec<Option<f64>> = if self.bandwidths.is_empty() {
            vec![None]
        } else {
            self.bandwidths.iter().copied().map(Some).collect()
        };
        let sigmas: Vec<Option<f64>> = if loss == LossKind::Lad {
            vec![None]
        } else {
            self.sigmas.iter().copied().map(Some).collect()
        };
        let mut out = Vec::new();
        for &lambda in &self.lambdas {
            for &h in &hs {
                for &sigma in &sigmas {
                    out.push(Cell { lambda, h, sigma });
                }
            }
        }
        out
    }
}

fn check_list(name: &'static str, values: &[f64], may_be_empty: bool) -> Result<()> {
    if values.is_empty() && !may_be_empty {
        return Err(Error::invalid(name, "must not be empty"));
    }
    if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid(name, "entries must be positive and finite"));
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid(name, "must be sorted ascending"));
    }
    Ok(())
}

/// One grid point. `h` is absent for kernels without a bandwidth and `sigma`
/// is absent for LAD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub lambda: f64,
    pub h: Option<f64>,
    pub sigma: Option<f64>,
}

/// Held-out scoring rule; lower scores are better.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CvScore {
    /// Mean squared prediction error.
    #[default]
    Mse,
    /// Negated Gaussian kernel density of the held-out residuals at zero.
    /// Without an explicit bandwidth, each fold uses a robust rule-of-thumb
    /// bandwidth computed from the held-out residuals of a pilot LAD fit, so
    /// every cell in a fold is scored with the same bandwidth.
    ModalKde { bandwidth: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    #[serde(flatten)]
    pub cell: Cell,
    pub mean_score: f64,
    pub std_score: f64,
    pub fold_scores: Vec<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best: Cell,
    pub table: Vec<CvRow>,
    pub folds: usize,
    pub seed: u64,
    pub score: CvScore,
}

impl CvResult {
    pub fn best_row(&self) -> &CvRow {
        self.table
            .iter()
            .find(|r| r.cell == self.best)
            .expect("best cell is in the table")
    }

    /// CSV with one row per cell; empty fields for absent parameters.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,h,sigma,mean_score,std_score,failure\n");
        for r in &self.table {
            let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.cell.lambda,
                opt(r.cell.h),
                opt(r.cell.sigma),
                r.mean_score,
                r.std_score,
                r.failure.as_deref().unwrap_or("").replace([',', '\n'], ";")
            ));
        }
        s
    }
}

/// Partitions `0..n` into `k` folds after a seeded shuffle. Fold sizes differ
/// by at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid("folds", "need at least two folds"));
    }
    if k > n {
        return Err(Error::invalid("folds", format!("{k} folds for {n} observations")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, i) in idx.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Everything a fold needs for one bandwidth: training Gram block and the
/// validation-by-training cross block.
struct FoldData {
    train: Vec<usize>,
    valid: Vec<usize>,
    gram: GramMatrix,
    cross: DMatrix<f64>,
}

fn fold_data(full: &GramMatrix, folds: &[Vec<usize>]) -> Vec<FoldData> {
    (0..folds.len())
        .map(|f| {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect();
            let valid = folds[f].clone();
            FoldData {
                gram: full.select(&train),
                cross: full.block(&valid, &train),
                train,
                valid,
            }
        })
        .collect()
}

fn kernel_for(base: &MercerKernel, h: Option<f64>) -> MercerKernel {
    match h {
        Some(h) => MercerKernel::GaussianRbf { h },
        None => *base,
    }
}

/// Grid search by k-fold cross-validation. Each cell is fitted on `k - 1`
/// folds and scored on the held-out fold; the cell with the lowest mean score
/// wins, ties going to the first cell in `(λ, h, σ)` ascending order. A cell
/// whose fit fails on any fold scores `+∞` and carries the error message.
#[allow(clippy::too_many_arguments)]
pub fn cv_search(
    x: &[Point],
    y: &[f64],
    loss: &LossSpec,
    kernel: &MercerKernel,
    grid: &ParamGrid,
    k: usize,
    seed: u64,
    cfg: &IrlsConfig,
    score: CvScore,
) -> Result<CvResult> {
    check_points(x, "inputs")?;
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    grid.validate(loss.kind, kernel)?;
    cfg.validate()?;
    if let CvScore::ModalKde { bandwidth: Some(b) } = score {
        crate::losses::check_positive("score bandwidth", b)?;
    }
    let folds = kfold_split(x.len(), k, seed)?;
    let fit_cfg = IrlsConfig {
        record_trace: false,
        ..*cfg
    };

    let hs: Vec<Option<f64>> = if grid.bandwidths.is_empty() {
        vec![None]
    } else {
        grid.bandwidths.iter().copied().map(Some).collect()
    };
    let per_h: Vec<Vec<FoldData>> = hs
        .par_iter()
        .map(|&h| gram(&kernel_for(kernel, h), x).map(|g| fold_data(&g, &folds)))
        .collect::<Result<_>>()?;

    let score_bandwidths: Vec<f64> = match score {
        CvScore::Mse => vec![f64::NAN; k],
        CvScore::ModalKde { bandwidth: Some(b) } => vec![b; k],
        CvScore::ModalKde { bandwidth: None } => {
            let mid_h = per_h.len() / 2;
            let mid_lambda = grid.lambdas[grid.lambdas.len() / 2];
            pilot_bandwidths(&per_h[mid_h], y, loss.delta, mid_lambda, &fit_cfg)
        }
    };

    let cells = grid.cells(loss.kind);
    let sigmas_per_group = if loss.kind == LossKind::Lad { 1 } else { grid.sigmas.len() };
    // Cells sharing (λ, h) are contiguous; they share a LAD warm start.
    let groups: Vec<&[Cell]> = cells.chunks(sigmas_per_group).collect();
    let table: Vec<CvRow> = groups
        .par_iter()
        .flat_map_iter(|group| {
            let h_index = hs.iter().position(|h| *h == group[0].h).expect("h from grid");
            score_group(group, &per_h[h_index], y, loss, &fit_cfg, score, &score_bandwidths)
        })
        .collect();

    let mut best: Option<&CvRow> = None;
    for row in &table {
        if row.mean_score.is_finite() && best.map_or(true, |b| row.mean_score < b.mean_score) {
            best = Some(row);
        }
    }
    let best = best.ok_or(Error::AllCellsFailed)?.cell;
    Ok(CvResult {
        best,
        table,
        folds: k,
        seed,
        score,
    })
}

fn score_group(
    group: &[Cell],
    folds: &[FoldData],
    y: &[f64],
    loss: &LossSpec,
    cfg: &IrlsConfig,
    score: CvScore,
    score_bandwidths: &[f64],
) -> Vec<CvRow> {
    let lambda = group[0].lambda;
    let mut scores = vec![Vec::with_capacity(folds.len()); group.len()];
    let mut failures: Vec<Option<String>> = vec![None; group.len()];
    for (f, fold) in folds.iter().enumerate() {
        let y_train: Vec<f64> = fold.train.iter().map(|&i| y[i]).collect();
        let y_valid: Vec<f64> = fold.valid.iter().map(|&i| y[i]).collect();
        let warm = match (cfg.init, loss.kind) {
            (Initialization::LeastAbsolute, kind) if kind != LossKind::Lad => {
                let lad = LossSpec::lad().with_delta(loss.delta).expect("validated delta");
                let zero = IrlsConfig {
                    init: Initialization::Zero,
                    ..*cfg
                };
                Some(irls_fit_gram(&fold.gram, &y_train, &lad, lambda, &zero).map(|g| (g.alpha, g.intercept)))
            }
            _ => None,
        };
        for (c, cell) in group.iter().enumerate() {
            if failures[c].is_some() {
                continue;
            }
            let spec = match cell.sigma {
                Some(s) => LossSpec { sigma: s, ..*loss },
                None => *loss,
            };
            let fit = match &warm {
                Some(Ok(start)) => irls_fit_gram_from(&fold.gram, &y_train, &spec, lambda, cfg, start.clone()),
                Some(Err(e)) => Err(Error::invalid("warm start", e.to_string())),
                None => irls_fit_gram(&fold.gram, &y_train, &spec, lambda, cfg),
            };
            match fit {
                Ok(fit) => {
                    let pred = predict_block(&fold.cross, &fit.alpha, fit.intercept);
                    let residuals: Vec<f64> = y_valid.iter().zip(&pred).map(|(a, b)| a - b).collect();
                    scores[c].push(score_residuals(&residuals, score, score_bandwidths[f]));
                }
                Err(e) => failures[c] = Some(e.to_string()),
            }
        }
    }
    group
        .iter()
        .zip(scores)
        .zip(failures)
        .map(|((cell, s), failure)| {
            let (mean, std) = if failure.is_some() {
                (f64::INFINITY, f64::NAN)
            } else {
                mean_std(&s)
            };
            // NaN scores (e.g. non-finite validation targets) rank last.
            let mean = if mean.is_nan() { f64::INFINITY } else { mean };
            CvRow {
                cell: *cell,
                mean_score: mean,
                std_score: std,
                fold_scores: s,
                failure,
            }
        })
        .collect()
}

fn pilot_bandwidths(folds: &[FoldData], y: &[f64], delta: f64, lambda: f64, cfg: &IrlsConfig) -> Vec<f64> {
    let lad = LossSpec::lad().with_delta(delta).expect("validated delta");
    folds
        .iter()
        .map(|fold| {
            let y_train: Vec<f64> = fold.train.iter().map(|&i| y[i]).collect();
            let y_valid: Vec<f64> = fold.valid.iter().map(|&i| y[i]).collect();
            match irls_fit_gram(&fold.gram, &y_train, &lad, lambda, cfg) {
                Ok(fit) => {
                    let pred = predict_block(&fold.cross, &fit.alpha, fit.intercept);
                    let r: Vec<f64> = y_valid.iter().zip(&pred).map(|(a, b)| a - b).collect();
                    robust_bandwidth(&r)
                }
                Err(_) => f64::NAN,
            }
        })
        .collect()
}

/// `0.9 · min(sd, IQR / 1.34) · n^{-1/5}`, falling back to whichever spread
/// estimate is positive.
pub fn robust_bandwidth(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let (_, sd) = mean_std(values);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    };
    let iqr = (q(0.75) - q(0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => return f64::NAN,
    };
    0.9 * spread * (n as f64).powf(-0.2)
}

fn predict_block(cross: &DMatrix<f64>, alpha: &[f64], b: f64) -> Vec<f64> {
    let a = DVector::from_column_slice(alpha);
    (cross * a).iter().map(|v| v + b).collect()
}

fn score_residuals(r: &[f64], score: CvScore, bandwidth: f64) -> f64 {
    match score {
        CvScore::Mse => r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64,
        CvScore::ModalKde { .. } => {
            let g = RepresentingFunction::unit_integral(RepresentingKind::Gaussian);
            let s: f64 = r.iter().map(|v| g.eval(v / bandwidth)).sum();
            -s / (r.len() as f64 * bandwidth)
        }
    }
}

/// Mean and sample standard deviation (`n - 1` denominator; 0 for one value).
pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() == 1 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
