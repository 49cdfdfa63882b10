use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::ptr;

use modal_regression::losses::LossSpec;
use modal_regression_ffi::*;

fn last_error() -> String {
    let p = mr_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn generate(seed: u64) -> *mut MrDataset {
    let mut ds = ptr::null_mut();
    let st = unsafe { mr_dataset_generate(MrToyModel::Toy2, MrNoise::Gaussian, 60, seed, &mut ds) };
    assert_eq!(st, MrStatus::Ok);
    assert!(!ds.is_null());
    ds
}

fn copy_arrays(ds: *const MrDataset) -> (Vec<f64>, Vec<f64>) {
    let n = unsafe { mr_dataset_len(ds) };
    let d = unsafe { mr_dataset_dim(ds) };
    let mut x = vec![0.0; n * d];
    let mut y = vec![0.0; n];
    assert_eq!(unsafe { mr_dataset_copy_x(ds, x.as_mut_ptr(), x.len()) }, MrStatus::Ok);
    assert_eq!(unsafe { mr_dataset_copy_y(ds, y.as_mut_ptr(), y.len()) }, MrStatus::Ok);
    (x, y)
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(mr_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn generated_data_is_deterministic() {
    let a = generate(5);
    let b = generate(5);
    let c = generate(6);
    assert_eq!(unsafe { mr_dataset_len(a) }, 60);
    assert_eq!(unsafe { mr_dataset_dim(a) }, 1);
    assert_eq!(copy_arrays(a), copy_arrays(b));
    assert_ne!(copy_arrays(a).1, copy_arrays(c).1);
    unsafe {
        mr_dataset_free(a);
        mr_dataset_free(b);
        mr_dataset_free(c);
    }
}

#[test]
fn fit_predict_and_json_round_trip() {
    let ds = generate(1);
    let (x, y) = copy_arrays(ds);
    let mut params = mr_fit_params_default();
    params.lad_start = true;
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { mr_fit(ds, &params, &mut model) }, MrStatus::Ok);
    assert_eq!(unsafe { mr_model_len(model) }, 60);
    assert!(unsafe { mr_model_intercept(model) }.is_finite());

    let mut pred = vec![0.0; y.len()];
    let st = unsafe { mr_model_predict(model, x.as_ptr(), y.len(), 1, pred.as_mut_ptr()) };
    assert_eq!(st, MrStatus::Ok);
    // Gaussian noise of unit scale around sinc: the fit explains much of it.
    let resid: f64 = pred.iter().zip(&y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / y.len() as f64;
    let var: f64 = {
        let m = y.iter().sum::<f64>() / y.len() as f64;
        y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / y.len() as f64
    };
    assert!(resid < var);

    let mut json: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { mr_model_to_json(model, &mut json) }, MrStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { mr_model_from_json(json, &mut back) }, MrStatus::Ok);
    let mut pred2 = vec![0.0; y.len()];
    let st = unsafe { mr_model_predict(back, x.as_ptr(), y.len(), 1, pred2.as_mut_ptr()) };
    assert_eq!(st, MrStatus::Ok);
    for (a, b) in pred.iter().zip(&pred2) {
        assert!((a - b).abs() <= 1e-12);
    }
    unsafe {
        mr_string_free(json);
        mr_model_free(model);
        mr_model_free(back);
        mr_dataset_free(ds);
    }
}

#[test]
fn arrays_round_trip_and_fit_a_line() {
    let n = 20;
    let x: Vec<f64> = (0..n).map(|i| i as f64 / 4.0).collect();
    let y: Vec<f64> = x.iter().map(|v| 0.5 * v - 1.0).collect();
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { mr_dataset_from_arrays(x.as_ptr(), y.as_ptr(), n, 1, &mut ds) }, MrStatus::Ok);
    assert_eq!(copy_arrays(ds), (x.clone(), y.clone()));

    let mut params = mr_fit_params_default();
    params.loss = MrLoss::Huber;
    params.lambda = 1e-6;
    params.bandwidth = 2.0;
    params.max_iter = 500;
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { mr_fit(ds, &params, &mut model) }, MrStatus::Ok);
    let mut pred = vec![0.0; n];
    assert_eq!(unsafe { mr_model_predict(model, x.as_ptr(), n, 1, pred.as_mut_ptr()) }, MrStatus::Ok);
    for (p, t) in pred.iter().zip(&y) {
        assert!((p - t).abs() < 1e-2, "{p} vs {t}");
    }
    unsafe {
        mr_model_free(model);
        mr_dataset_free(ds);
    }
}

#[test]
fn null_pointers_are_reported() {
    let mut ds = ptr::null_mut();
    let st = unsafe { mr_dataset_from_arrays(ptr::null(), ptr::null(), 3, 1, &mut ds) };
    assert_eq!(st, MrStatus::NullPointer);
    assert!(last_error().contains('x'));
    assert!(ds.is_null());

    let params = mr_fit_params_default();
    let st = unsafe { mr_fit(ptr::null(), &params, ptr::null_mut()) };
    assert_eq!(st, MrStatus::NullPointer);
    assert_eq!(unsafe { mr_dataset_len(ptr::null()) }, 0);
    assert!(unsafe { mr_model_intercept(ptr::null()) }.is_nan());
    unsafe {
        mr_dataset_free(ptr::null_mut());
        mr_model_free(ptr::null_mut());
        mr_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_arguments_are_reported() {
    let mut ds = ptr::null_mut();
    let st = unsafe { mr_dataset_generate(MrToyModel::Toy1, MrNoise::Gaussian, 50, 0, &mut ds) };
    assert_eq!(st, MrStatus::InvalidArgument);
    assert!(!last_error().is_empty());

    let ds = generate(2);
    let mut params = mr_fit_params_default();
    params.sigma = -1.0;
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { mr_fit(ds, &params, &mut model) }, MrStatus::InvalidArgument);
    assert!(last_error().contains("sigma"));
    params.sigma = 1.0;
    params.lambda = 0.0;
    assert_eq!(unsafe { mr_fit(ds, &params, &mut model) }, MrStatus::InvalidArgument);
    assert!(model.is_null());

    let mut small = vec![0.0; 10];
    assert_eq!(unsafe { mr_dataset_copy_y(ds, small.as_mut_ptr(), small.len()) }, MrStatus::BufferTooSmall);
    assert!(last_error().contains("60"));
    unsafe { mr_dataset_free(ds) };
}

#[test]
fn malformed_json_is_a_parse_error() {
    let text = CString::new("{\"kernel\": 3}").unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { mr_model_from_json(text.as_ptr(), &mut model) }, MrStatus::Parse);
    assert!(model.is_null());
}

#[test]
fn scalar_loss_functions_match_the_core_crate() {
    for &t in &[-3.0, -0.2, 0.0, 0.7, 5.0] {
        let mut v = 0.0;
        let mut w = 0.0;
        assert_eq!(unsafe { mr_loss_eval(MrLoss::Mr, 0.8, t, &mut v) }, MrStatus::Ok);
        assert_eq!(unsafe { mr_irls_weight(MrLoss::Mr, 0.8, t, &mut w) }, MrStatus::Ok);
        let core = LossSpec::correntropy(0.8).unwrap();
        assert_eq!(v, core.eval(t));
        assert_eq!(w, core.weight(t));
        assert_eq!(unsafe { mr_loss_eval(MrLoss::Lad, f64::NAN, t, &mut v) }, MrStatus::Ok);
        assert_eq!(v, LossSpec::lad().eval(t));
    }
    let mut v = 0.0;
    assert_eq!(unsafe { mr_loss_eval(MrLoss::Huber, 0.0, 1.0, &mut v) }, MrStatus::InvalidArgument);
}

#[test]
fn header_declares_the_exported_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/modal_regression.h")).unwrap();
    for name in [
        "mr_version",
        "mr_last_error_message",
        "mr_dataset_generate",
        "mr_fit",
        "mr_model_predict",
        "mr_model_to_json",
        "mr_model_free",
        "MR_STATUS_BUFFER_TOO_SMALL",
        "typedef struct MrModel MrModel",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"modal_regression.h\"\n\
         int main(void) {\n\
           MrFitParams p = mr_fit_params_default();\n\
           MrDataset *ds = 0;\n\
           MrStatus s = mr_dataset_generate(MR_TOY_MODEL_TOY2, MR_NOISE_GAUSSIAN, 10, 1, &ds);\n\
           (void)p; (void)s;\n\
           return 0;\n\
         }\n",
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc);
        }
    }
    Err(())
}
