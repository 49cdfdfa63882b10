//! Command-line front end: data generation, fitting, prediction,
//! cross-validation and the batch experiments.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 1 for runtime
//! errors. Errors are printed to stderr as a single JSON object.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use modal_regression::data::{generate, load_csv, NoiseCase, SyntheticSpec, ToyModel};
use modal_regression::experiment::{self, ExperimentConfig, ExperimentKind};
use modal_regression::kernels::{median_heuristic, MercerKernel, Point};
use modal_regression::losses::{LossKind, LossSpec};
use modal_regression::metrics::{mae, mse};
use modal_regression::model_select::{cv_search, CvScore, ParamGrid};
use modal_regression::solver::{irls_fit, Initialization, IrlsConfig, KernelModel};
use modal_regression::Error;

#[derive(Parser)]
#[command(name = "modalreg", version, about = "Nonparametric modal regression in kernel spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic dataset and write it as CSV.
    Generate(GenerateArgs),
    /// Fit a model on CSV data, optionally tuning it by cross-validation.
    Fit(FitArgs),
    /// Predict with a saved model.
    Predict(PredictArgs),
    /// Cross-validate a parameter grid.
    Cv(CvArgs),
    /// Run a batch experiment.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Toy1,
    Toy2,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    MixtureSkewed,
    Gaussian,
    StudentT3,
    ContaminatedGaussian,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum LossArg {
    Mr,
    Huber,
    Lad,
}

impl LossArg {
    fn kind(self) -> LossKind {
        match self {
            LossArg::Mr => LossKind::Correntropy,
            LossArg::Huber => LossKind::Huber,
            LossArg::Lad => LossKind::Lad,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KernelArg {
    Rbf,
    Linear,
    Poly,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ScoreArg {
    Mse,
    ModalKde,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Defaults to the skewed mixture for toy1 and Gaussian noise for toy2.
    #[arg(long, value_enum)]
    noise: Option<NoiseArg>,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiplier of the noise term.
    #[arg(long, default_value_t = 1.0)]
    noise_scale: f64,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Fit settings shared by `fit` and `cv`; a `--config` file supplies the
/// defaults and flags override it.
#[derive(Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FitOptions {
    target: String,
    loss: LossArg,
    kernel: KernelArg,
    sigma: Option<f64>,
    lambda: f64,
    bandwidth: Option<f64>,
    degree: u32,
    folds: usize,
    seed: u64,
    score: ScoreArg,
    grid: Option<ParamGrid>,
    solver: IrlsConfig,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            target: "y".into(),
            loss: LossArg::Mr,
            kernel: KernelArg::Rbf,
            sigma: None,
            lambda: 1e-3,
            bandwidth: None,
            degree: 2,
            folds: 5,
            seed: 0,
            score: ScoreArg::Mse,
            grid: None,
            solver: IrlsConfig::default(),
        }
    }
}

#[derive(Args)]
struct FitFlags {
    /// JSON file with fit settings; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Name of the response column.
    #[arg(long)]
    target: Option<String>,
    #[arg(long, value_enum)]
    loss: Option<LossArg>,
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    /// Scale of the MR and Huber losses (default 1).
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Gaussian kernel bandwidth (default: median pairwise distance).
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Held-out score for cross-validation.
    #[arg(long, value_enum)]
    score: Option<ScoreArg>,
    /// Comma-separated grid values for cross-validation.
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    bandwidths: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    /// Start IRLS from the LAD fit instead of zero.
    #[arg(long)]
    lad_start: bool,
}

impl FitFlags {
    fn resolve(&self) -> Result<FitOptions, CliError> {
        let mut o = match &self.config {
            Some(p) => read_config::<FitOptions>(p)?,
            None => FitOptions::default(),
        };
        if let Some(v) = &self.target {
            o.target = v.clone();
        }
        if let Some(v) = self.loss {
            o.loss = v;
        }
        if let Some(v) = self.kernel {
            o.kernel = v;
        }
        if self.sigma.is_some() {
            o.sigma = self.sigma;
        }
        if let Some(v) = self.lambda {
            o.lambda = v;
        }
        if self.bandwidth.is_some() {
            o.bandwidth = self.bandwidth;
        }
        if let Some(v) = self.degree {
            o.degree = v;
        }
        if let Some(v) = self.folds {
            o.folds = v;
        }
        if let Some(v) = self.seed {
            o.seed = v;
        }
        if let Some(v) = self.score {
            o.score = v;
        }
        if self.lambdas.is_some() || self.bandwidths.is_some() || self.sigmas.is_some() {
            let mut g = o.grid.take().unwrap_or(ParamGrid {
                lambdas: vec![o.lambda],
                bandwidths: Vec::new(),
                sigmas: vec![o.sigma.unwrap_or(1.0)],
            });
            if let Some(v) = &self.lambdas {
                g.lambdas = v.clone();
            }
            if let Some(v) = &self.bandwidths {
                g.bandwidths = v.clone();
            }
            if let Some(v) = &self.sigmas {
                g.sigmas = v.clone();
            }
            o.grid = Some(g);
        }
        if self.lad_start {
            o.solver.init = Initialization::LeastAbsolute;
        }
        Ok(o)
    }
}

impl FitOptions {
    fn loss_spec(&self, sigma: Option<f64>) -> Result<LossSpec, Error> {
        match self.loss.kind() {
            LossKind::Lad => Ok(LossSpec::lad()),
            k => LossSpec::new(k, sigma.or(self.sigma).unwrap_or(1.0)),
        }
    }

    fn kernel_for(&self, x: &[Point], h: Option<f64>) -> Result<MercerKernel, Error> {
        let k = match self.kernel {
            KernelArg::Rbf => MercerKernel::GaussianRbf {
                h: h.or(self.bandwidth).unwrap_or_else(|| median_heuristic(x)),
            },
            KernelArg::Linear => MercerKernel::Linear,
            KernelArg::Poly => MercerKernel::Polynomial { degree: self.degree },
        };
        k.validate()?;
        Ok(k)
    }

    fn grid_for(&self, x: &[Point]) -> ParamGrid {
        let mut g = self.grid.clone().unwrap_or_else(|| ParamGrid::default_for(x));
        match self.kernel {
            KernelArg::Rbf if g.bandwidths.is_empty() => {
                g.bandwidths = vec![self.bandwidth.unwrap_or_else(|| median_heuristic(x))]
            }
            KernelArg::Rbf => {}
            _ => g.bandwidths.clear(),
        }
        g
    }

    fn cv_score(&self) -> CvScore {
        match self.score {
            ScoreArg::Mse => CvScore::Mse,
            ScoreArg::ModalKde => CvScore::ModalKde { bandwidth: None },
        }
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct FitArgs {
    /// Training CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    flags: FitFlags,
    /// Select parameters by k-fold cross-validation before the final fit.
    #[arg(long)]
    cv: bool,
    /// Model JSON; the fit report goes to `<stem>.report.json` and, with
    /// `--cv`, the grid table to `<stem>.cv.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Model JSON written by `fit`.
    #[arg(long)]
    model: PathBuf,
    /// CSV of inputs; with `--target` that column is held out and scored.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    target: Option<String>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct CvArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    flags: FitFlags,
    /// Grid table CSV; the selected cell is printed as JSON on stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, value_delimiter = ',')]
    loss: Option<Vec<LossArg>>,
    #[arg(long)]
    folds: Option<usize>,
    /// Input CSV of the custom experiment.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// An error with its exit code.
struct CliError {
    code: u8,
    kind: &'static str,
    message: String,
    field: Option<String>,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "config",
            message: message.into(),
            field: None,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind, field) = match &e {
            Error::InvalidParameter { name, .. } => (2, "invalid_parameter", Some(name.to_string())),
            Error::InvalidPairing { .. } => (2, "invalid_pairing", Some("noise".to_string())),
            Error::Json(_) => (2, "config", None),
            Error::Parse { .. } | Error::Csv(_) => (1, "data", None),
            Error::Io(_) => (1, "io", None),
            _ => (1, "runtime", None),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
            field,
        }
    }
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    std::fs::write(path, text).map_err(Error::from)?;
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> Result<(), CliError> {
    let model = match a.model {
        ModelArg::Toy1 => ToyModel::Toy1,
        ModelArg::Toy2 => ToyModel::Toy2,
    };
    let noise = match (a.noise, model) {
        (Some(NoiseArg::MixtureSkewed), _) | (None, ToyModel::Toy1) => NoiseCase::MixtureSkewed,
        (Some(NoiseArg::Gaussian), _) | (None, ToyModel::Toy2) => NoiseCase::Gaussian,
        (Some(NoiseArg::StudentT3), _) => NoiseCase::StudentT3,
        (Some(NoiseArg::ContaminatedGaussian), _) => NoiseCase::ContaminatedGaussian,
    };
    let spec = SyntheticSpec::new(model, noise, a.n)?.with_noise_scale(a.noise_scale)?;
    let ds = generate(&spec, a.seed)?;
    match a.out {
        Some(p) => ds.save_csv(p)?,
        None => ds.write_csv(std::io::stdout().lock())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct FitSummary<'a> {
    loss: LossKind,
    lambda: f64,
    sigma: Option<f64>,
    kernel: MercerKernel,
    report: &'a modal_regression::solver::FitReport,
    train_mse: f64,
    best_params: Option<modal_regression::model_select::Cell>,
}

fn cmd_fit(a: FitArgs) -> Result<(), CliError> {
    let o = a.flags.resolve()?;
    let ds = load_csv(&a.data, &o.target)?;
    let (kernel, loss, lambda, cv) = if a.cv {
        let grid = o.grid_for(ds.x());
        let template = o.kernel_for(ds.x(), grid.bandwidths.first().copied())?;
        let cv = cv_search(ds.x(), ds.y(), &o.loss_spec(None)?, &template, &grid, o.folds, o.seed, &o.solver, o.cv_score())?;
        let best = cv.best;
        (o.kernel_for(ds.x(), best.h)?, o.loss_spec(best.sigma)?, best.lambda, Some(cv))
    } else {
        (o.kernel_for(ds.x(), None)?, o.loss_spec(None)?, o.lambda, None)
    };
    let (model, report) = irls_fit(ds.x(), ds.y(), &kernel, &loss, lambda, &o.solver)?;
    let pred = model.predict(ds.x())?;
    write_json(&a.out, &model)?;
    let summary = FitSummary {
        loss: loss.kind,
        lambda,
        sigma: loss.kind.has_scale().then_some(loss.sigma),
        kernel,
        report: &report,
        train_mse: mse(&pred, ds.y())?,
        best_params: cv.as_ref().map(|c| c.best),
    };
    write_json(&sibling(&a.out, ".report.json"), &summary)?;
    if let Some(cv) = &cv {
        std::fs::write(sibling(&a.out, ".cv.csv"), cv.to_csv()).map_err(Error::from)?;
    }
    Ok(())
}

/// Reads a CSV of numeric columns; returns the header and rows.
fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), Error> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, c)| {
                c.trim().parse::<f64>().map_err(|_| Error::Parse {
                    row: i + 1,
                    column: j + 1,
                    message: format!("expected a number, found `{c}`"),
                })
            })
            .collect::<Result<Vec<f64>, Error>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn cmd_predict(a: PredictArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.model).map_err(Error::from)?;
    let model: KernelModel = serde_json::from_str(&text).map_err(|e| CliError {
        code: 1,
        kind: "model",
        message: format!("cannot parse model {}: {e}", a.model.display()),
        field: None,
    })?;
    let (x, y, names) = match &a.target {
        Some(t) => {
            let ds = load_csv(&a.data, t)?;
            (ds.x().to_vec(), Some(ds.y().to_vec()), ds.feature_names().to_vec())
        }
        None => {
            let (header, rows) = read_table(&a.data)?;
            (rows, None, header)
        }
    };
    let pred = model.predict(&x)?;
    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(Error::from)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(&mut out);
    let mut header = names;
    header.push("prediction".into());
    w.write_record(&header).map_err(Error::from)?;
    for (p, v) in x.iter().zip(&pred) {
        let mut rec: Vec<String> = p.iter().map(|c| c.to_string()).collect();
        rec.push(v.to_string());
        w.write_record(&rec).map_err(Error::from)?;
    }
    w.flush().map_err(Error::from)?;
    drop(w);
    if let Some(y) = y {
        let scores = serde_json::json!({ "mse": mse(&pred, &y)?, "mae": mae(&pred, &y)? });
        eprintln!("{scores}");
    }
    Ok(())
}

fn cmd_cv(a: CvArgs) -> Result<(), CliError> {
    let o = a.flags.resolve()?;
    let ds = load_csv(&a.data, &o.target)?;
    let grid = o.grid_for(ds.x());
    let template = o.kernel_for(ds.x(), grid.bandwidths.first().copied())?;
    let cv = cv_search(ds.x(), ds.y(), &o.loss_spec(None)?, &template, &grid, o.folds, o.seed, &o.solver, o.cv_score())?;
    if let Some(p) = &a.out {
        std::fs::write(p, cv.to_csv()).map_err(Error::from)?;
    }
    let best = cv.best_row();
    println!(
        "{}",
        serde_json::json!({ "best_params": cv.best, "mean_score": best.mean_score, "std_score": best.std_score })
    );
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> Result<(), CliError> {
    let mut c = match &a.config {
        Some(p) => read_config::<ExperimentConfig>(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(e) = &a.experiment {
        c.experiment = e.parse::<ExperimentKind>()?;
    }
    if let Some(v) = a.reps {
        c.repetitions = v;
    }
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if let Some(v) = &a.loss {
        c.losses = v.iter().map(|l| l.kind()).collect();
    }
    if let Some(v) = a.folds {
        c.folds = v;
    }
    if a.data.is_some() {
        c.data = a.data.clone();
    }
    if a.target.is_some() {
        c.target = a.target.clone();
    }
    c.validate()?;
    let outcome = experiment::run(&c)?;
    let files = outcome.write(&a.out)?;
    for f in &files {
        println!("{}", f.display());
    }
    if outcome.too_many_failures() {
        return Err(CliError {
            code: 1,
            kind: "failures",
            message: format!(
                "{} of {} fits failed (limit {:.0}%)",
                outcome.failed,
                outcome.attempted,
                100.0 * experiment::MAX_FAILURE_FRACTION
            ),
            field: None,
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({
                "error": { "kind": e.kind, "message": e.message, "field": e.field }
            });
            eprintln!("{body}");
            ExitCode::from(e.code)
        }
    }
}
