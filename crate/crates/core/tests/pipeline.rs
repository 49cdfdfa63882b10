use modal_regression::data::{generate, load_csv, scale_unit, Dataset, NoiseCase, ScalingRecord, SyntheticSpec, ToyModel};
use modal_regression::kernels::MercerKernel;
use modal_regression::losses::LossSpec;
use modal_regression::metrics::mse;
use modal_regression::solver::{irls_fit, Initialization, IrlsConfig, KernelModel};

#[test]
fn csv_round_trip_is_exact() {
    let spec = SyntheticSpec::new(ToyModel::Toy1, NoiseCase::MixtureSkewed, 80).unwrap();
    let ds = generate(&spec, 17).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    ds.save_csv(&path).unwrap();
    let back = load_csv(&path, "y").unwrap();
    assert_eq!(back.x(), ds.x());
    assert_eq!(back.y(), ds.y());
}

#[test]
fn scaling_record_round_trips_and_reapplies() {
    let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, -(i as f64) * 3.0 + 7.0]).collect();
    let y: Vec<f64> = (0..30).map(|i| i as f64).collect();
    let ds = Dataset::new(x, y).unwrap();
    let (scaled, record) = scale_unit(&ds).unwrap();
    for j in 0..2 {
        let col: Vec<f64> = scaled.x().iter().map(|p| p[j]).collect();
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scale.json");
    record.save_json(&path).unwrap();
    let loaded = ScalingRecord::load_json(&path).unwrap();
    assert_eq!(loaded.apply(&ds).unwrap().x(), scaled.x());
}

#[test]
fn model_json_round_trip_predicts_identically() {
    let spec = SyntheticSpec::new(ToyModel::Toy2, NoiseCase::ContaminatedGaussian, 70).unwrap();
    let ds = generate(&spec, 3).unwrap();
    let cfg = IrlsConfig {
        init: Initialization::LeastAbsolute,
        ..IrlsConfig::default()
    };
    let (model, report) = irls_fit(ds.x(), ds.y(), &MercerKernel::rbf(1.0).unwrap(), &LossSpec::correntropy(1.0).unwrap(), 1e-3, &cfg).unwrap();
    assert!(report.objective_trace.len() >= 2);
    let text = serde_json::to_string(&model).unwrap();
    let back: KernelModel = serde_json::from_str(&text).unwrap();
    let a = model.predict(ds.x()).unwrap();
    let b = back.predict(ds.x()).unwrap();
    assert!(mse(&a, &b).unwrap() <= 1e-24);
}

#[test]
fn robust_fits_recover_sinc_under_contaminated_noise() {
    // The noise variance is 0.95 + 0.05 * 3.5^2 ≈ 1.56; both fits land far below it.
    let spec = SyntheticSpec::new(ToyModel::Toy2, NoiseCase::ContaminatedGaussian, 200).unwrap();
    let ds = generate(&spec, 8).unwrap();
    let grid: Vec<Vec<f64>> = (0..101).map(|i| vec![-4.0 + 8.0 * i as f64 / 100.0]).collect();
    let truth: Vec<f64> = grid.iter().map(|p| modal_regression::data::sinc(p[0])).collect();
    let cfg = IrlsConfig {
        init: Initialization::LeastAbsolute,
        record_trace: false,
        ..IrlsConfig::default()
    };
    for loss in [LossSpec::correntropy(1.0).unwrap(), LossSpec::huber(1.0).unwrap()] {
        let (model, _) = irls_fit(ds.x(), ds.y(), &MercerKernel::rbf(1.0).unwrap(), &loss, 1e-2, &cfg).unwrap();
        let err = mse(&model.predict(&grid).unwrap(), &truth).unwrap();
        assert!(err < 0.2, "{:?}: {err}", loss.kind);
    }
}
