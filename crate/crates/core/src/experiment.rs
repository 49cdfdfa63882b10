//! End-to-end experiment drivers: toy-model comparisons of the three
//! estimators, the σ sweep, the population-level checks and the contamination
//! study. Every driver is deterministic in its configuration and seed.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    derive_seed, generate, load_csv, scale_unit, uniform_grid, Dataset, NoiseCase, NoiseDensity, Placement,
    ReferenceKind, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::kernels::{gram, MercerKernel, Point};
use crate::losses::{LossKind, LossSpec, RepresentingFunction, RepresentingKind};
use crate::metrics::{distance_to_reference, mae, mse, Summary};
use crate::model_select::{cv_search, Cell, CvResult, CvScore, ParamGrid};
use crate::quadrature::QuadratureSpec;
use crate::risk_oracle::{
    asymptotic_slope, bayes_check, calibration_gap, log_log_slope, CalibrationGap, PopulationModel,
};
use crate::robustness::{breakdown_bracket, breakdown_statistic, contamination_sweep, default_eval_grid, SweepSpec};
use crate::solver::{correntropy_path, irls_fit, Initialization, IrlsConfig, KernelModel};

/// Runs with more than this fraction of failed fits are reported as failed.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

/// Largest factor by which consecutive scales of the σ path shrink.
const SWEEP_RATIO: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Toy1 with the skewed mixture noise.
    #[default]
    Toy1,
    /// Toy2 with Gaussian noise.
    Toy2a,
    /// Toy2 with `t₃/√3` noise.
    Toy2b,
    /// Toy2 with contaminated Gaussian noise.
    Toy2c,
    Calibration,
    Bayes,
    Breakdown,
    /// User data from a CSV file.
    Custom,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Toy1 => "toy1",
            ExperimentKind::Toy2a => "toy2a",
            ExperimentKind::Toy2b => "toy2b",
            ExperimentKind::Toy2c => "toy2c",
            ExperimentKind::Calibration => "calibration",
            ExperimentKind::Bayes => "bayes",
            ExperimentKind::Breakdown => "breakdown",
            ExperimentKind::Custom => "custom",
        }
    }

    /// The data-generating model of a toy experiment.
    pub fn synthetic_spec(&self, n: usize) -> Option<Result<SyntheticSpec>> {
        let noise = match self {
            ExperimentKind::Toy1 => return Some(Ok(SyntheticSpec::toy1(n))),
            ExperimentKind::Toy2a => NoiseCase::Gaussian,
            ExperimentKind::Toy2b => NoiseCase::StudentT3,
            ExperimentKind::Toy2c => NoiseCase::ContaminatedGaussian,
            _ => return None,
        };
        Some(SyntheticSpec::toy2(noise, n))
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
            .map_err(|_| Error::invalid("experiment", format!("unknown experiment `{s}`")))
    }
}

/// Settings of the contamination study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BreakdownConfig {
    pub n: usize,
    pub lambda: f64,
    pub bandwidth: f64,
    pub mr_sigma: f64,
    pub huber_sigma: f64,
    /// Contamination counts as fractions of `n`.
    pub fractions: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub placement: Placement,
    pub eval_points: usize,
}

impl Default for BreakdownConfig {
    fn default() -> Self {
        Self {
            n: 200,
            lambda: 1e-3,
            bandwidth: 1.0,
            mr_sigma: 5.0,
            huber_sigma: 1.345,
            fractions: vec![0.0, 0.1, 0.2, 0.3],
            magnitudes: vec![1e4],
            placement: Placement::RandomX,
            eval_points: 200,
        }
    }
}

/// Settings of the calibration matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub shifts: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// Gaps at or below this value are excluded from slope fits.
    pub floor: f64,
    pub quadrature: QuadratureSpec,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            shifts: vec![0.0, 0.25, 0.5, 1.0],
            sigmas: vec![0.4, 0.2, 0.1, 0.05],
            floor: 1e-10,
            quadrature: QuadratureSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub repetitions: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub folds: usize,
    pub losses: Vec<LossKind>,
    /// Cross-validation grid; the default grid of the training inputs when absent.
    pub grid: Option<ParamGrid>,
    /// Read `grid.bandwidths` as multiples of the median pairwise distance of
    /// each training sample.
    pub relative_bandwidths: bool,
    pub solver: IrlsConfig,
    /// Held-out score of the modal estimator's cross-validation; the
    /// protocol default when absent.
    pub mr_score: Option<CvScore>,
    /// Correntropy scales of the Toy1 σ sweep.
    pub sweep_sigmas: Vec<f64>,
    /// Penalty of the σ sweep; the modal estimator's cross-validated value
    /// when absent.
    pub sweep_lambda: Option<f64>,
    /// Bandwidth of the σ sweep as a multiple of the median pairwise
    /// distance; the cross-validated value when absent.
    pub sweep_bandwidth_factor: Option<f64>,
    /// Points of the uniform grid used for reference distances.
    pub reference_points: usize,
    /// CSV input of the custom experiment.
    pub data: Option<PathBuf>,
    pub target: Option<String>,
    pub test_fraction: f64,
    /// Spacing of the shift grid of the Bayes-rule check.
    pub bayes_step: f64,
    pub breakdown: BreakdownConfig,
    pub calibration: CalibrationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Toy1,
            repetitions: 100,
            seed: 0,
            n_train: 200,
            n_test: 200,
            folds: 5,
            losses: vec![LossKind::Correntropy, LossKind::Huber, LossKind::Lad],
            grid: None,
            relative_bandwidths: false,
            solver: IrlsConfig {
                record_trace: false,
                ..IrlsConfig::default()
            },
            mr_score: None,
            sweep_sigmas: vec![0.05, 10.0],
            sweep_lambda: Some(1e-4),
            sweep_bandwidth_factor: Some(2.0),
            reference_points: 1000,
            data: None,
            target: None,
            test_fraction: 0.2,
            bayes_step: 0.01,
            breakdown: BreakdownConfig::default(),
            calibration: CalibrationConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            ..Self::default()
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions", "must be at least 1"));
        }
        self.solver.validate()?;
        match self.experiment {
            ExperimentKind::Toy1 | ExperimentKind::Toy2a | ExperimentKind::Toy2b | ExperimentKind::Toy2c => {
                if self.n_train < self.folds {
                    return Err(Error::invalid("n_train", "fewer observations than folds"));
                }
                if self.n_test == 0 || self.reference_points == 0 {
                    return Err(Error::invalid("n_test", "must be positive"));
                }
                self.check_losses()?;
                if self.experiment == ExperimentKind::Toy1 {
                    for &s in &self.sweep_sigmas {
                        crate::losses::check_positive("sweep_sigmas", s)?;
                    }
                }
            }
            ExperimentKind::Custom => {
                if self.data.is_none() {
                    return Err(Error::invalid("data", "the custom experiment needs a CSV file"));
                }
                if self.target.is_none() {
                    return Err(Error::invalid("target", "the custom experiment needs a target column"));
                }
                if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
                    return Err(Error::invalid("test_fraction", "must lie in (0, 1)"));
                }
                self.check_losses()?;
            }
            ExperimentKind::Bayes => crate::losses::check_positive("bayes_step", self.bayes_step)?,
            ExperimentKind::Calibration => {
                let c = &self.calibration;
                c.quadrature.validate()?;
                if c.shifts.is_empty() || c.sigmas.is_empty() {
                    return Err(Error::invalid("calibration", "shifts and sigmas must not be empty"));
                }
                for &s in &c.sigmas {
                    crate::losses::check_positive("calibration.sigmas", s)?;
                }
            }
            ExperimentKind::Breakdown => {
                let b = &self.breakdown;
                if b.n < 2 || b.fractions.is_empty() || b.magnitudes.is_empty() {
                    return Err(Error::invalid("breakdown", "needs n >= 2 and non-empty fraction and magnitude lists"));
                }
                if b.fractions.iter().any(|f| !(*f >= 0.0 && f.is_finite())) {
                    return Err(Error::invalid("breakdown.fractions", "must be non-negative"));
                }
                crate::losses::check_positive("breakdown.lambda", b.lambda)?;
                crate::losses::check_positive("breakdown.bandwidth", b.bandwidth)?;
                crate::losses::check_positive("breakdown.mr_sigma", b.mr_sigma)?;
                crate::losses::check_positive("breakdown.huber_sigma", b.huber_sigma)?;
            }
        }
        Ok(())
    }

    fn check_losses(&self) -> Result<()> {
        if self.losses.is_empty() {
            return Err(Error::invalid("losses", "must not be empty"));
        }
        if let Some(g) = &self.grid {
            for &l in &self.losses {
                g.validate(l, &MercerKernel::rbf(1.0)?)?;
            }
        }
        Ok(())
    }

    fn rep_seed(&self, rep: usize) -> u64 {
        derive_seed(self.seed, rep as u64)
    }
}

impl ExperimentConfig {
    /// Held-out score of `kind`. Under the asymmetric Toy1 noise held-out MSE
    /// selects the conditional-mean fit, so the modal estimator is scored by
    /// the held-out residual density there.
    fn score_for(&self, kind: LossKind) -> Option<CvScore> {
        match kind {
            LossKind::Correntropy => self.mr_score.or(match self.experiment {
                ExperimentKind::Toy1 => Some(CvScore::ModalKde { bandwidth: None }),
                _ => None,
            }),
            _ => None,
        }
    }

    /// The grid used on one training sample.
    pub fn grid_for(&self, x: &[Point]) -> ParamGrid {
        match &self.grid {
            None => ParamGrid::default_for(x),
            Some(g) if self.relative_bandwidths => {
                let m = crate::kernels::median_heuristic(x);
                ParamGrid {
                    bandwidths: g.bandwidths.iter().map(|f| f * m).collect(),
                    ..g.clone()
                }
            }
            Some(g) => g.clone(),
        }
    }
}

/// How an estimator is tuned by default: held-out MSE for every loss, with
/// the modal estimator started from the LAD fit and the others from zero.
pub fn estimator_protocol(kind: LossKind) -> (CvScore, Initialization) {
    match kind {
        LossKind::Correntropy => (CvScore::Mse, Initialization::LeastAbsolute),
        LossKind::Huber | LossKind::Lad => (CvScore::Mse, Initialization::Zero),
    }
}

fn loss_template(kind: LossKind) -> LossSpec {
    match kind {
        LossKind::Lad => LossSpec::lad(),
        k => LossSpec::new(k, 1.0).expect("unit scale is valid"),
    }
}

fn loss_at(kind: LossKind, sigma: Option<f64>) -> Result<LossSpec> {
    match (kind, sigma) {
        (LossKind::Lad, _) => Ok(LossSpec::lad()),
        (k, Some(s)) => LossSpec::new(k, s),
        (_, None) => Err(Error::invalid("sigma", "missing for a scaled loss")),
    }
}

fn kernel_at(h: Option<f64>) -> Result<MercerKernel> {
    match h {
        Some(h) => MercerKernel::rbf(h),
        None => Err(Error::invalid("bandwidth", "the experiments use the Gaussian kernel")),
    }
}

/// A model refitted on all training data at the cross-validated cell.
#[derive(Debug, Clone)]
pub struct TunedFit {
    pub model: KernelModel,
    pub cv: CvResult,
}

impl TunedFit {
    pub fn cell(&self) -> Cell {
        self.cv.best
    }
}

/// Cross-validates `kind` on `train` and refits at the selected cell.
pub fn tune_and_fit(
    train: &Dataset,
    kind: LossKind,
    grid: &ParamGrid,
    folds: usize,
    seed: u64,
    solver: &IrlsConfig,
    score: Option<CvScore>,
) -> Result<TunedFit> {
    let (default_score, init) = estimator_protocol(kind);
    let score = score.unwrap_or(default_score);
    let cfg = IrlsConfig {
        init,
        record_trace: false,
        ..*solver
    };
    let cv = cv_search(
        train.x(),
        train.y(),
        &loss_template(kind),
        &MercerKernel::rbf(1.0)?,
        grid,
        folds,
        seed,
        &cfg,
        score,
    )?;
    let (model, _) = irls_fit(
        train.x(),
        train.y(),
        &kernel_at(cv.best.h)?,
        &loss_at(kind, cv.best.sigma)?,
        cv.best.lambda,
        &cfg,
    )?;
    Ok(TunedFit { model, cv })
}

/// One estimator on one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRow {
    pub rep: usize,
    pub seed: u64,
    pub loss: LossKind,
    pub lambda: Option<f64>,
    pub h: Option<f64>,
    pub sigma: Option<f64>,
    /// Test-set errors against the primary target (the conditional mode for
    /// toy data, held-out responses for custom data).
    pub mse: f64,
    pub mae: f64,
    /// Grid distances to the conditional mode, median and mean (toy data).
    pub dist_mode: Option<f64>,
    pub dist_median: Option<f64>,
    pub dist_mean: Option<f64>,
    pub failure: Option<String>,
}

impl RepRow {
    fn failed(rep: usize, seed: u64, loss: LossKind, e: &Error) -> Self {
        Self {
            rep,
            seed,
            loss,
            lambda: None,
            h: None,
            sigma: None,
            mse: f64::NAN,
            mae: f64::NAN,
            dist_mode: None,
            dist_median: None,
            dist_mean: None,
            failure: Some(e.to_string()),
        }
    }
}

/// Reference distances of a fixed-(λ, h) correntropy fit at one σ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSweepRow {
    pub rep: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub h: f64,
    pub dist_mode: f64,
    pub dist_median: f64,
    pub dist_mean: f64,
    pub failure: Option<String>,
}

/// Fitted curves of the first repetition on the test grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub x: Vec<f64>,
    pub mode: Vec<f64>,
    pub median: Vec<f64>,
    pub mean: Vec<f64>,
    /// `(σ, fitted values)`; a failed fit is absent.
    pub fits: Vec<(f64, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub loss: LossKind,
    pub label: String,
    pub successes: usize,
    pub failures: usize,
    pub mse: Summary,
    pub mae: Summary,
}

fn summarize(losses: &[LossKind], rows: &[RepRow]) -> Vec<LossSummary> {
    losses
        .iter()
        .map(|&loss| {
            let ok: Vec<&RepRow> = rows.iter().filter(|r| r.loss == loss && r.failure.is_none()).collect();
            let failures = rows.iter().filter(|r| r.loss == loss && r.failure.is_some()).count();
            LossSummary {
                loss,
                label: loss.label().to_string(),
                successes: ok.len(),
                failures,
                mse: Summary::from_values(ok.iter().map(|r| r.mse).collect()),
                mae: Summary::from_values(ok.iter().map(|r| r.mae).collect()),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyResult {
    pub experiment: ExperimentKind,
    pub rows: Vec<RepRow>,
    pub sigma_sweep: Vec<SigmaSweepRow>,
    pub curves: Option<CurveTable>,
    pub summaries: Vec<LossSummary>,
}

impl ToyResult {
    pub fn summary(&self, loss: LossKind) -> Option<&LossSummary> {
        self.summaries.iter().find(|s| s.loss == loss)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.failure.is_some()).count()
    }
}

fn grid_values(points: &[Point]) -> Vec<f64> {
    points.iter().map(|p| p[0]).collect()
}

struct RepOutput {
    rows: Vec<RepRow>,
    sweep: Vec<SigmaSweepRow>,
    curves: Option<CurveTable>,
}

fn toy_repetition(config: &ExperimentConfig, spec: &SyntheticSpec, rep: usize) -> RepOutput {
    let seed = config.rep_seed(rep);
    let refs = spec.references();
    let test = uniform_grid(spec, config.n_test);
    let dense = uniform_grid(spec, config.reference_points);
    let mode_at = |p: &[f64]| refs.eval(ReferenceKind::Mode, p[0]);
    let median_at = |p: &[f64]| refs.eval(ReferenceKind::Median, p[0]);
    let mean_at = |p: &[f64]| refs.eval(ReferenceKind::Mean, p[0]);
    let target: Vec<f64> = test.iter().map(|p| mode_at(p)).collect();

    let train = match generate(spec, seed) {
        Ok(d) => d,
        Err(e) => {
            return RepOutput {
                rows: config.losses.iter().map(|&l| RepRow::failed(rep, seed, l, &e)).collect(),
                sweep: Vec::new(),
                curves: None,
            }
        }
    };
    let cv_seed = derive_seed(seed, 1);
    let grid = config.grid_for(train.x());
    let mut rows = Vec::with_capacity(config.losses.len());
    let mut mr_cell = None;
    for &loss in &config.losses {
        let mut eval = || -> Result<RepRow> {
            let fit = tune_and_fit(&train, loss, &grid, config.folds, cv_seed, &config.solver, config.score_for(loss))?;
            let pred = fit.model.predict(&test)?;
            let cell = fit.cell();
            if loss == LossKind::Correntropy {
                mr_cell = Some(cell);
            }
            Ok(RepRow {
                rep,
                seed,
                loss,
                lambda: Some(cell.lambda),
                h: cell.h,
                sigma: cell.sigma,
                mse: mse(&pred, &target)?,
                mae: mae(&pred, &target)?,
                dist_mode: Some(distance_to_reference(&fit.model, &mode_at, &dense)?),
                dist_median: Some(distance_to_reference(&fit.model, &median_at, &dense)?),
                dist_mean: Some(distance_to_reference(&fit.model, &mean_at, &dense)?),
                failure: None,
            })
        };
        rows.push(eval().unwrap_or_else(|e| RepRow::failed(rep, seed, loss, &e)));
    }

    let mut sweep = Vec::new();
    let mut curves = None;
    if config.experiment == ExperimentKind::Toy1 && !config.sweep_sigmas.is_empty() {
        let mid = |v: &[f64], default: f64| v.get(v.len() / 2).copied().unwrap_or(default);
        let lambda = config
            .sweep_lambda
            .or(mr_cell.map(|c| c.lambda))
            .unwrap_or_else(|| mid(&grid.lambdas, 1e-3));
        let h = match config.sweep_bandwidth_factor {
            Some(f) => f * crate::kernels::median_heuristic(train.x()),
            None => mr_cell.and_then(|c| c.h).unwrap_or_else(|| mid(&grid.bandwidths, 1.0)),
        };
        let cfg = IrlsConfig {
            init: Initialization::LeastAbsolute,
            record_trace: false,
            ..config.solver
        };
        // Small scales make the objective highly multimodal, so the sweep
        // follows the solution path from the largest scale downwards.
        let path = MercerKernel::rbf(h).and_then(|k| {
            let g = gram(&k, train.x())?;
            let fits = correntropy_path(&g, train.y(), &config.sweep_sigmas, lambda, &cfg, SWEEP_RATIO)?;
            fits.into_iter()
                .map(|f| {
                    let m = KernelModel::new(k, f.alpha, f.intercept, train.x().to_vec())?;
                    let d = [
                        distance_to_reference(&m, &mode_at, &dense)?,
                        distance_to_reference(&m, &median_at, &dense)?,
                        distance_to_reference(&m, &mean_at, &dense)?,
                    ];
                    Ok((d, m.predict(&test)?))
                })
                .collect::<Result<Vec<_>>>()
        });
        let mut fits = Vec::new();
        match path {
            Ok(results) => {
                for (&sigma, (d, pred)) in config.sweep_sigmas.iter().zip(results) {
                    sweep.push(SigmaSweepRow {
                        rep,
                        sigma,
                        lambda,
                        h,
                        dist_mode: d[0],
                        dist_median: d[1],
                        dist_mean: d[2],
                        failure: None,
                    });
                    fits.push((sigma, pred));
                }
            }
            Err(e) => {
                for &sigma in &config.sweep_sigmas {
                    sweep.push(SigmaSweepRow {
                        rep,
                        sigma,
                        lambda,
                        h,
                        dist_mode: f64::NAN,
                        dist_median: f64::NAN,
                        dist_mean: f64::NAN,
                        failure: Some(e.to_string()),
                    });
                }
            }
        }
        if rep == 0 {
            curves = Some(CurveTable {
                x: grid_values(&test),
                mode: test.iter().map(|p| mode_at(p)).collect(),
                median: test.iter().map(|p| median_at(p)).collect(),
                mean: test.iter().map(|p| mean_at(p)).collect(),
                fits,
            });
        }
    }
    RepOutput { rows, sweep, curves }
}

/// Toy1 or Toy2 comparison over `config.repetitions` seeded repetitions.
pub fn run_toy(config: &ExperimentConfig) -> Result<ToyResult> {
    config.validate()?;
    let spec = config
        .experiment
        .synthetic_spec(config.n_train)
        .ok_or_else(|| Error::invalid("experiment", "not a toy experiment"))??;
    let outputs: Vec<RepOutput> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| toy_repetition(config, &spec, rep))
        .collect();
    let mut rows = Vec::new();
    let mut sigma_sweep = Vec::new();
    let mut curves = None;
    for o in outputs {
        rows.extend(o.rows);
        sigma_sweep.extend(o.sweep);
        if o.curves.is_some() {
            curves = o.curves;
        }
    }
    Ok(ToyResult {
        experiment: config.experiment,
        summaries: summarize(&config.losses, &rows),
        rows,
        sigma_sweep,
        curves,
    })
}

/// Custom-data comparison: each repetition draws a fresh train/test split,
/// scales features to `[0, 1]` with the training record and scores held-out
/// responses.
pub fn run_custom(config: &ExperimentConfig) -> Result<ToyResult> {
    config.validate()?;
    let path = config.data.as_ref().expect("validated");
    let target = config.target.as_deref().expect("validated");
    let ds = load_csv(path, target)?;
    let n_test = ((ds.n() as f64) * config.test_fraction).round() as usize;
    if n_test == 0 || ds.n() - n_test < config.folds {
        return Err(Error::invalid("test_fraction", format!("cannot split {} rows", ds.n())));
    }
    let rows: Vec<Vec<RepRow>> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| {
            let seed = config.rep_seed(rep);
            let mut idx: Vec<usize> = (0..ds.n()).collect();
            idx.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
            let (test_idx, train_idx) = idx.split_at(n_test);
            config
                .losses
                .iter()
                .map(|&loss| {
                    let eval = || -> Result<RepRow> {
                        let (train, record) = scale_unit(&ds.subset(train_idx)?)?;
                        let test = record.apply(&ds.subset(test_idx)?)?;
                        let grid = config.grid_for(train.x());
                        let fit = tune_and_fit(&train, loss, &grid, config.folds, derive_seed(seed, 1), &config.solver, config.score_for(loss))?;
                        let pred = fit.model.predict(test.x())?;
                        let cell = fit.cell();
                        Ok(RepRow {
                            rep,
                            seed,
                            loss,
                            lambda: Some(cell.lambda),
                            h: cell.h,
                            sigma: cell.sigma,
                            mse: mse(&pred, test.y())?,
                            mae: mae(&pred, test.y())?,
                            dist_mode: None,
                            dist_median: None,
                            dist_mean: None,
                            failure: None,
                        })
                    };
                    eval().unwrap_or_else(|e| RepRow::failed(rep, seed, loss, &e))
                })
                .collect()
        })
        .collect();
    let rows: Vec<RepRow> = rows.into_iter().flatten().collect();
    Ok(ToyResult {
        experiment: ExperimentKind::Custom,
        summaries: summarize(&config.losses, &rows),
        rows,
        sigma_sweep: Vec::new(),
        curves: None,
    })
}

/// A noise density of the calibration matrix. `primary` marks the families
/// the pass criterion is computed over; the others are reported only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedNoise {
    pub name: String,
    pub density: NoiseDensity,
    pub primary: bool,
}

/// Gaussian, two-piece skew normal and a zero-mode contaminated mixture, plus
/// the Toy1 mixture and an Azzalini skew normal for reference.
pub fn calibration_families() -> Vec<NamedNoise> {
    let named = |name: &str, density: NoiseDensity, primary| NamedNoise {
        name: name.to_string(),
        density,
        primary,
    };
    vec![
        named("gaussian", NoiseDensity::standard_normal(), true),
        named("skew_normal", NoiseDensity::skew_normal(0.0, 1.0, 0.3).expect("valid"), true),
        named("contaminated_mixture", NoiseCase::ContaminatedGaussian.density(), true),
        named("toy1_mixture", NoiseCase::MixtureSkewed.density(), false),
        named("azzalini_skew_normal", NoiseDensity::azzalini(0.0, 1.0, 3.0).expect("valid"), false),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCell {
    pub family: String,
    pub primary: bool,
    pub representing: RepresentingKind,
    pub shift: f64,
    pub points: Vec<CalibrationGap>,
    /// Order between the two smallest scales with a gap above the floor.
    pub asymptotic_slope: Option<f64>,
    /// Least-squares slope over every scale with a gap above the floor.
    pub regression_slope: Option<f64>,
}

impl CalibrationCell {
    pub fn holds(&self) -> bool {
        self.points.iter().all(|p| p.holds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub cells: Vec<CalibrationCell>,
    /// The bound holds in every primary cell.
    pub all_hold: bool,
}

/// Gap between true and smoothed excess risk for shifted candidates `f* + c`
/// over families × representing functions × shifts × scales.
pub fn run_calibration(config: &CalibrationConfig) -> Result<CalibrationResult> {
    config.quadrature.validate()?;
    let mut jobs = Vec::new();
    for fam in calibration_families() {
        for kind in [RepresentingKind::Gaussian, RepresentingKind::Epanechnikov] {
            for &shift in &config.shifts {
                jobs.push((fam.clone(), kind, shift));
            }
        }
    }
    let cells: Vec<CalibrationCell> = jobs
        .into_par_iter()
        .map(|(fam, kind, shift)| {
            let pm = PopulationModel::homoscedastic(fam.density);
            let rf = RepresentingFunction::unit_integral(kind);
            let f = move |_x: f64| shift;
            let points = config
                .sigmas
                .iter()
                .map(|&s| calibration_gap(&pm, &f, &rf, s, &config.quadrature))
                .collect::<Result<Vec<_>>>()?;
            Ok(CalibrationCell {
                family: fam.name,
                primary: fam.primary,
                representing: kind,
                shift,
                asymptotic_slope: asymptotic_slope(&points, config.floor),
                regression_slope: log_log_slope(&points, config.floor),
                points,
            })
        })
        .collect::<Result<_>>()?;
    let all_hold = cells.iter().filter(|c| c.primary).all(CalibrationCell::holds);
    Ok(CalibrationResult { cells, all_hold })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesRow {
    pub family: String,
    pub noise_mode: f64,
    /// Grid and refined maximizers of `R` over constant shifts.
    pub shift_argmax: f64,
    pub shift_refined: f64,
    pub slope_argmax: f64,
    pub step: f64,
    /// The grid maximizer is within one grid step of the noise mode.
    pub within_resolution: bool,
    /// No family member beats the conditional mode function.
    pub passed: bool,
}

/// Bayes-rule check over constant shifts and slopes in `[-3, 3]` for the
/// Gaussian, two-piece skew normal and Toy1 mixture noises.
pub fn run_bayes(step: f64, q: &QuadratureSpec) -> Result<Vec<BayesRow>> {
    crate::losses::check_positive("bayes_step", step)?;
    let m = (6.0 / step).round() as usize;
    let grid: Vec<f64> = (0..=m).map(|i| -3.0 + 6.0 * i as f64 / m as f64).collect();
    let families = [
        ("gaussian", NoiseDensity::standard_normal()),
        ("skew_normal", NoiseDensity::skew_normal(0.0, 1.0, 0.3).expect("valid")),
        ("toy1_mixture", NoiseCase::MixtureSkewed.density()),
    ];
    families
        .into_par_iter()
        .map(|(name, density)| {
            let pm = PopulationModel::homoscedastic(density);
            let r = bayes_check(&pm, &grid, q)?;
            let shift = &r.scans[0];
            Ok(BayesRow {
                family: name.to_string(),
                noise_mode: r.noise_mode,
                shift_argmax: shift.argmax,
                shift_refined: shift.refined,
                slope_argmax: r.scans[1].argmax,
                step,
                within_resolution: (shift.argmax - r.noise_mode).abs() <= step,
                passed: r.passed,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub rep: usize,
    pub loss: LossKind,
    pub m: usize,
    pub magnitude: f64,
    pub sup_norm: f64,
    pub clean_sup_norm: f64,
    pub followed_outliers: bool,
    pub broken: bool,
    pub failure: Option<String>,
}

/// The modal estimator's breakdown statistic on one clean sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketRow {
    pub rep: usize,
    pub a: f64,
    pub m_low: u64,
    pub m_high: u64,
    pub epsilon_low: f64,
    pub epsilon_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownResult {
    pub rows: Vec<BreakdownRow>,
    pub brackets: Vec<BracketRow>,
}

/// Contamination sweep on Toy2 with Gaussian noise for the modal and Huber
/// estimators at fixed parameters. Both losses see the same outliers.
pub fn run_breakdown(config: &ExperimentConfig) -> Result<BreakdownResult> {
    config.validate()?;
    let b = &config.breakdown;
    let spec = SyntheticSpec::toy2(NoiseCase::Gaussian, b.n)?;
    let m_grid: Vec<usize> = b.fractions.iter().map(|f| (f * b.n as f64).round() as usize).collect();
    let kernel = MercerKernel::rbf(b.bandwidth)?;
    let per_rep: Vec<Result<(Vec<BreakdownRow>, BracketRow)>> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| {
            let seed = config.rep_seed(rep);
            let base = generate(&spec, seed)?;
            let eval_grid = default_eval_grid(&base, b.eval_points);
            let mut rows = Vec::new();
            let mut a = f64::NAN;
            for (loss, init) in [
                (LossSpec::correntropy(b.mr_sigma)?, Initialization::Zero),
                (LossSpec::huber(b.huber_sigma)?, Initialization::Zero),
            ] {
                let sweep_spec = SweepSpec {
                    kernel,
                    loss,
                    lambda: b.lambda,
                    m_grid: m_grid.clone(),
                    magnitudes: b.magnitudes.clone(),
                    placement: b.placement,
                    eval_grid: eval_grid.clone(),
                    cfg: IrlsConfig {
                        init,
                        record_trace: false,
                        ..config.solver
                    },
                };
                if loss.kind == LossKind::Correntropy {
                    let (clean, _) = irls_fit(base.x(), base.y(), &kernel, &loss, b.lambda, &sweep_spec.cfg)?;
                    let rf = RepresentingFunction::peak_one(RepresentingKind::Gaussian);
                    a = breakdown_statistic(&clean, base.x(), base.y(), &rf, loss.sigma)?;
                }
                let report = contamination_sweep(&base, &sweep_spec, derive_seed(seed, 2))?;
                rows.extend(report.rows.iter().map(|r| BreakdownRow {
                    rep,
                    loss: loss.kind,
                    m: r.m,
                    magnitude: r.magnitude,
                    sup_norm: r.sup_norm,
                    clean_sup_norm: report.clean_sup_norm,
                    followed_outliers: r.followed_outliers,
                    broken: r.broken,
                    failure: r.failure.clone(),
                }));
            }
            let br = breakdown_bracket(a, base.n())?;
            Ok((
                rows,
                BracketRow {
                    rep,
                    a,
                    m_low: br.m_low,
                    m_high: br.m_high,
                    epsilon_low: br.epsilon.0,
                    epsilon_high: br.epsilon.1,
                },
            ))
        })
        .collect();
    let mut rows = Vec::new();
    let mut brackets = Vec::new();
    for r in per_rep {
        let (rs, br) = r?;
        rows.extend(rs);
        brackets.push(br);
    }
    Ok(BreakdownResult { rows, brackets })
}

/// Serializable outputs of an experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub summary: serde_json::Value,
    /// `(file name, CSV contents)`.
    pub tables: Vec<(String, String)>,
    pub attempted: usize,
    pub failed: usize,
}

impl ExperimentOutcome {
    pub fn failure_fraction(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.failed as f64 / self.attempted as f64
        }
    }

    pub fn too_many_failures(&self) -> bool {
        self.failure_fraction() > MAX_FAILURE_FRACTION
    }

    /// Writes every table and `summary.json` into `dir`. The summary gains a
    /// `metadata` field holding the only non-deterministic value, a timestamp.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, csv) in &self.tables {
            let p = dir.join(name);
            std::fs::write(&p, csv)?;
            written.push(p);
        }
        let mut summary = self.summary.clone();
        if let serde_json::Value::Object(map) = &mut summary {
            let now = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            map.insert("metadata".into(), serde_json::json!({ "created_unix": now }));
        }
        let p = dir.join("summary.json");
        std::fs::write(&p, serde_json::to_string_pretty(&summary)?)?;
        written.push(p);
        Ok(written)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn clean(s: &Option<String>) -> String {
    s.as_deref().unwrap_or("").replace([',', '\n'], ";")
}

fn rows_csv(rows: &[RepRow]) -> String {
    let mut s = String::from("rep,seed,loss,lambda,h,sigma,mse,mae,dist_mode,dist_median,dist_mean,failure\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.rep,
            r.seed,
            r.loss.label(),
            opt(r.lambda),
            opt(r.h),
            opt(r.sigma),
            r.mse,
            r.mae,
            opt(r.dist_mode),
            opt(r.dist_median),
            opt(r.dist_mean),
            clean(&r.failure)
        ));
    }
    s
}

fn sweep_csv(rows: &[SigmaSweepRow]) -> String {
    let mut s = String::from("rep,sigma,lambda,h,dist_mode,dist_median,dist_mean,failure\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.rep,
            r.sigma,
            r.lambda,
            r.h,
            r.dist_mode,
            r.dist_median,
            r.dist_mean,
            clean(&r.failure)
        ));
    }
    s
}

fn curves_csv(c: &CurveTable) -> String {
    let mut s = String::from("x,mode,median,mean");
    for (sigma, _) in &c.fits {
        s.push_str(&format!(",fit_sigma_{sigma}"));
    }
    s.push('\n');
    for i in 0..c.x.len() {
        s.push_str(&format!("{},{},{},{}", c.x[i], c.mode[i], c.median[i], c.mean[i]));
        for (_, f) in &c.fits {
            s.push_str(&format!(",{}", f[i]));
        }
        s.push('\n');
    }
    s
}

fn toy_outcome(config: &ExperimentConfig, r: &ToyResult) -> Result<ExperimentOutcome> {
    let summaries: Vec<serde_json::Value> = r
        .summaries
        .iter()
        .map(|s| {
            serde_json::json!({
                "loss": s.loss,
                "label": s.label,
                "successes": s.successes,
                "failures": s.failures,
                "mse": s.mse.formatted(),
                "mae": s.mae.formatted(),
                "mse_mean": s.mse.mean,
                "mse_std": s.mse.std,
                "mae_mean": s.mae.mean,
                "mae_std": s.mae.std,
            })
        })
        .collect();
    let mut tables = vec![("results.csv".to_string(), rows_csv(&r.rows))];
    if !r.sigma_sweep.is_empty() {
        tables.push(("sigma_sweep.csv".to_string(), sweep_csv(&r.sigma_sweep)));
    }
    if let Some(c) = &r.curves {
        tables.push(("curves.csv".to_string(), curves_csv(c)));
    }
    let failed = r.failures();
    Ok(ExperimentOutcome {
        summary: serde_json::json!({
            "experiment": config.experiment,
            "config": config,
            "summaries": summaries,
            "failed_fits": failed,
        }),
        tables,
        attempted: r.rows.len(),
        failed,
    })
}

/// Runs the configured experiment and collects its outputs.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::Toy1 | ExperimentKind::Toy2a | ExperimentKind::Toy2b | ExperimentKind::Toy2c => {
            toy_outcome(config, &run_toy(config)?)
        }
        ExperimentKind::Custom => toy_outcome(config, &run_custom(config)?),
        ExperimentKind::Calibration => {
            let r = run_calibration(&config.calibration)?;
            let mut csv = String::from("family,primary,representing,shift,sigma,gap,bound,taylor_bound,holds\n");
            for c in &r.cells {
                for p in &c.points {
                    csv.push_str(&format!(
                        "{},{},{:?},{},{},{},{},{},{}\n",
                        c.family, c.primary, c.representing, c.shift, p.sigma, p.gap, p.bound, p.taylor_bound, p.holds
                    ));
                }
            }
            Ok(ExperimentOutcome {
                summary: serde_json::json!({
                    "experiment": config.experiment,
                    "config": config,
                    "all_hold": r.all_hold,
                    "cells": r.cells,
                }),
                tables: vec![("calibration.csv".to_string(), csv)],
                attempted: r.cells.len(),
                failed: 0,
            })
        }
        ExperimentKind::Bayes => {
            let rows = run_bayes(config.bayes_step, &config.calibration.quadrature)?;
            let mut csv = String::from("family,noise_mode,shift_argmax,shift_refined,slope_argmax,within_resolution,passed\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.family, r.noise_mode, r.shift_argmax, r.shift_refined, r.slope_argmax, r.within_resolution, r.passed
                ));
            }
            Ok(ExperimentOutcome {
                summary: serde_json::json!({
                    "experiment": config.experiment,
                    "config": config,
                    "rows": rows,
                    "passed": rows.iter().all(|r| r.passed && r.within_resolution),
                }),
                tables: vec![("bayes.csv".to_string(), csv)],
                attempted: rows.len(),
                failed: 0,
            })
        }
        ExperimentKind::Breakdown => {
            let r = run_breakdown(config)?;
            let mut csv =
                String::from("rep,loss,m,magnitude,sup_norm,clean_sup_norm,followed_outliers,broken,failure\n");
            for x in &r.rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    x.rep,
                    x.loss.label(),
                    x.m,
                    x.magnitude,
                    x.sup_norm,
                    x.clean_sup_norm,
                    x.followed_outliers,
                    x.broken,
                    clean(&x.failure)
                ));
            }
            let mut br = String::from("rep,a,m_low,m_high,epsilon_low,epsilon_high\n");
            for x in &r.brackets {
                br.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    x.rep, x.a, x.m_low, x.m_high, x.epsilon_low, x.epsilon_high
                ));
            }
            let failed = r.rows.iter().filter(|x| x.failure.is_some()).count();
            Ok(ExperimentOutcome {
                summary: serde_json::json!({
                    "experiment": config.experiment,
                    "config": config,
                    "brackets": r.brackets,
                    "failed_fits": failed,
                }),
                tables: vec![("breakdown.csv".to_string(), csv), ("brackets.csv".to_string(), br)],
                attempted: r.rows.len(),
                failed,
            })
        }
    }
}
