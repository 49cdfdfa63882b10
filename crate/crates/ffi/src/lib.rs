//! C ABI for the modal regression library.
//!
//! Objects cross the boundary as opaque handles created by `mr_*_new`-style
//! constructors and released with the matching `mr_*_free`. Every fallible
//! function returns an [`MrStatus`]; on failure the message is available from
//! [`mr_last_error_message`] on the same thread until the next failing call.
//! Panics never unwind into the caller; they are reported as
//! `MR_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use modal_regression::data::{generate, Dataset, NoiseCase, SyntheticSpec, ToyModel};
use modal_regression::kernels::MercerKernel;
use modal_regression::losses::{LossKind, LossSpec};
use modal_regression::solver::{irls_fit, Initialization, IrlsConfig, KernelModel};
use modal_regression::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrStatus {
    Ok = 0,
    /// A parameter is out of range or inconsistent.
    InvalidArgument = 1,
    /// A required pointer was null.
    NullPointer = 2,
    /// The solver failed (singular system, vanishing weights, ...).
    Numerical = 3,
    /// Malformed JSON or text input.
    Parse = 4,
    /// A caller-provided buffer is too small.
    BufferTooSmall = 5,
    /// An internal panic was caught.
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrLoss {
    /// Correntropy-induced loss (modal regression).
    Mr = 0,
    Huber = 1,
    Lad = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrToyModel {
    Toy1 = 0,
    Toy2 = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrNoise {
    MixtureSkewed = 0,
    Gaussian = 1,
    StudentT3 = 2,
    ContaminatedGaussian = 3,
}

/// Parameters of [`mr_fit`]. Start from [`mr_fit_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MrFitParams {
    pub loss: MrLoss,
    /// Scale of the MR and Huber losses; ignored for LAD.
    pub sigma: f64,
    pub lambda: f64,
    /// Gaussian kernel bandwidth.
    pub bandwidth: f64,
    pub max_iter: u32,
    pub tol: f64,
    /// Start from the LAD fit instead of zero.
    pub lad_start: bool,
}

/// A dataset of inputs and responses.
pub struct MrDataset(Dataset);

/// A fitted kernel model.
pub struct MrModel(KernelModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: MrStatus, message: impl Into<String>) -> MrStatus {
    set_error(message.into());
    status
}

fn status_of(e: &Error) -> MrStatus {
    match e {
        Error::InvalidParameter { .. }
        | Error::InvalidPairing { .. }
        | Error::DimensionMismatch { .. }
        | Error::LengthMismatch { .. }
        | Error::EmptyInput(_)
        | Error::NonFinite(_)
        | Error::Normalization(_) => MrStatus::InvalidArgument,
        Error::Json(_) | Error::Parse { .. } | Error::Csv(_) => MrStatus::Parse,
        _ => MrStatus::Numerical,
    }
}

fn guard<F: FnOnce() -> Result<(), MrStatus>>(f: F) -> MrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MrStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(MrStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: Result<T, Error>) -> Result<T, MrStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), MrStatus> {
    if p.is_null() {
        Err(fail(MrStatus::NullPointer, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

fn loss_kind(l: MrLoss) -> LossKind {
    match l {
        MrLoss::Mr => LossKind::Correntropy,
        MrLoss::Huber => LossKind::Huber,
        MrLoss::Lad => LossKind::Lad,
    }
}

fn loss_spec(l: MrLoss, sigma: f64) -> Result<LossSpec, Error> {
    match loss_kind(l) {
        LossKind::Lad => Ok(LossSpec::lad()),
        k => LossSpec::new(k, sigma),
    }
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn mr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Defaults: MR loss, `sigma = 1`, `lambda = 1e-3`, `bandwidth = 1`,
/// 100 iterations, tolerance `1e-8`, zero start.
#[no_mangle]
pub extern "C" fn mr_fit_params_default() -> MrFitParams {
    let cfg = IrlsConfig::default();
    MrFitParams {
        loss: MrLoss::Mr,
        sigma: 1.0,
        lambda: 1e-3,
        bandwidth: 1.0,
        max_iter: cfg.max_iter as u32,
        tol: cfg.tol,
        lad_start: false,
    }
}

/// Draws a synthetic dataset of `n` points.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mr_dataset_generate(
    model: MrToyModel,
    noise: MrNoise,
    n: usize,
    seed: u64,
    out: *mut *mut MrDataset,
) -> MrStatus {
    guard(|| {
        non_null(out, "out")?;
        let model = match model {
            MrToyModel::Toy1 => ToyModel::Toy1,
            MrToyModel::Toy2 => ToyModel::Toy2,
        };
        let noise = match noise {
            MrNoise::MixtureSkewed => NoiseCase::MixtureSkewed,
            MrNoise::Gaussian => NoiseCase::Gaussian,
            MrNoise::StudentT3 => NoiseCase::StudentT3,
            MrNoise::ContaminatedGaussian => NoiseCase::ContaminatedGaussian,
        };
        let spec = lift(SyntheticSpec::new(model, noise, n))?;
        let ds = lift(generate(&spec, seed))?;
        *out = Box::into_raw(Box::new(MrDataset(ds)));
        Ok(())
    })
}

/// Builds a dataset from `n` row-major inputs of dimension `d` and `n`
/// responses. The arrays are copied.
///
/// # Safety
/// `x` must point to `n * d` doubles, `y` to `n` doubles and `out` to
/// writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mr_dataset_from_arrays(
    x: *const f64,
    y: *const f64,
    n: usize,
    d: usize,
    out: *mut *mut MrDataset,
) -> MrStatus {
    guard(|| {
        non_null(x, "x")?;
        non_null(y, "y")?;
        non_null(out, "out")?;
        if n == 0 || d == 0 {
            return Err(fail(MrStatus::InvalidArgument, "n and d must be positive"));
        }
        let xs = std::slice::from_raw_parts(x, n * d);
        let ys = std::slice::from_raw_parts(y, n);
        let points = xs.chunks(d).map(<[f64]>::to_vec).collect();
        let ds = lift(Dataset::new(points, ys.to_vec()))?;
        *out = Box::into_raw(Box::new(MrDataset(ds)));
        Ok(())
    })
}

/// Number of observations; 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn mr_dataset_len(ds: *const MrDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.n())
}

/// Input dimension; 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn mr_dataset_dim(ds: *const MrDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.dim())
}

/// Copies the inputs row-major into `buf`, which holds `len` doubles.
///
/// # Safety
/// `ds` must be a live dataset handle and `buf` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mr_dataset_copy_x(ds: *const MrDataset, buf: *mut f64, len: usize) -> MrStatus {
    guard(|| {
        non_null(ds, "ds")?;
        non_null(buf, "buf")?;
        let d = &(*ds).0;
        let need = d.n() * d.dim();
        if len < need {
            return Err(fail(MrStatus::BufferTooSmall, format!("need {need} doubles, got {len}")));
        }
        let out = std::slice::from_raw_parts_mut(buf, need);
        for (dst, v) in out.iter_mut().zip(d.x().iter().flatten()) {
            *dst = *v;
        }
        Ok(())
    })
}

/// Copies the responses into `buf`, which holds `len` doubles.
///
/// # Safety
/// `ds` must be a live dataset handle and `buf` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mr_dataset_copy_y(ds: *const MrDataset, buf: *mut f64, len: usize) -> MrStatus {
    guard(|| {
        non_null(ds, "ds")?;
        non_null(buf, "buf")?;
        let d = &(*ds).0;
        if len < d.n() {
            return Err(fail(MrStatus::BufferTooSmall, format!("need {} doubles, got {len}", d.n())));
        }
        std::slice::from_raw_parts_mut(buf, d.n()).copy_from_slice(d.y());
        Ok(())
    })
}

/// Releases a dataset; null is ignored.
///
/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mr_dataset_free(ds: *mut MrDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Fits a Gaussian-kernel model by IRLS.
///
/// # Safety
/// `ds` must be a live dataset handle, `params` must point to a valid
/// parameter block and `out` to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mr_fit(ds: *const MrDataset, params: *const MrFitParams, out: *mut *mut MrModel) -> MrStatus {
    guard(|| {
        non_null(ds, "ds")?;
        non_null(params, "params")?;
        non_null(out, "out")?;
        let p = *params;
        let d = &(*ds).0;
        let kernel = lift(MercerKernel::rbf(p.bandwidth))?;
        let loss = lift(loss_spec(p.loss, p.sigma))?;
        let cfg = IrlsConfig {
            max_iter: p.max_iter as usize,
            tol: p.tol,
            record_trace: false,
            init: if p.lad_start {
                Initialization::LeastAbsolute
            } else {
                Initialization::Zero
            },
            ..IrlsConfig::default()
        };
        let (model, _) = lift(irls_fit(d.x(), d.y(), &kernel, &loss, p.lambda, &cfg))?;
        *out = Box::into_raw(Box::new(MrModel(model)));
        Ok(())
    })
}

/// Predicts at `n` row-major points of dimension `d` into `out` (`n` doubles).
///
/// # Safety
/// `model` must be a live model handle, `x` must point to `n * d` doubles and
/// `out` to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn mr_model_predict(
    model: *const MrModel,
    x: *const f64,
    n: usize,
    d: usize,
    out: *mut f64,
) -> MrStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(x, "x")?;
        non_null(out, "out")?;
        if d == 0 {
            return Err(fail(MrStatus::InvalidArgument, "d must be positive"));
        }
        let xs = std::slice::from_raw_parts(x, n * d);
        let points: Vec<Vec<f64>> = xs.chunks(d).map(<[f64]>::to_vec).collect();
        let pred = lift((*model).0.predict(&points))?;
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&pred);
        Ok(())
    })
}

/// Intercept `b`; NaN for a null handle.
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn mr_model_intercept(model: *const MrModel) -> f64 {
    model.as_ref().map_or(f64::NAN, |m| m.0.intercept)
}

/// Number of expansion coefficients; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn mr_model_len(model: *const MrModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.alpha.len())
}

/// Serializes a model to JSON. Release the string with [`mr_string_free`].
///
/// # Safety
/// `model` must be a live model handle and `out` must point to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mr_model_to_json(model: *const MrModel, out: *mut *mut c_char) -> MrStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(out, "out")?;
        let s = lift(serde_json::to_string(&(*model).0).map_err(Error::from))?;
        *out = CString::new(s).expect("JSON has no nul").into_raw();
        Ok(())
    })
}

/// Parses a model from JSON.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` must point to writable
/// storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mr_model_from_json(json: *const c_char, out: *mut *mut MrModel) -> MrStatus {
    guard(|| {
        non_null(json, "json")?;
        non_null(out, "out")?;
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| fail(MrStatus::Parse, "JSON is not valid UTF-8"))?;
        let model: KernelModel = lift(serde_json::from_str(text).map_err(Error::from))?;
        let model = lift(KernelModel::new(model.kernel, model.alpha, model.intercept, model.train_inputs))?;
        *out = Box::into_raw(Box::new(MrModel(model)));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mr_model_free(model: *mut MrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Evaluates a loss at residual `t`.
///
/// # Safety
/// `out` must point to one writable double.
#[no_mangle]
pub unsafe extern "C" fn mr_loss_eval(loss: MrLoss, sigma: f64, t: f64, out: *mut f64) -> MrStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = lift(loss_spec(loss, sigma))?.eval(t);
        Ok(())
    })
}

/// IRLS weight `|L'(t)| / |t|` of a loss at residual `t`.
///
/// # Safety
/// `out` must point to one writable double.
#[no_mangle]
pub unsafe extern "C" fn mr_irls_weight(loss: MrLoss, sigma: f64, t: f64, out: *mut f64) -> MrStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = lift(loss_spec(loss, sigma))?.weight(t);
        Ok(())
    })
}
