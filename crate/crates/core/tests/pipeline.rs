use mtails::harness::{mc_validate, reports_to_csv, CertKind, Ensemble, McConfig};
use mtails::{io, rmm};
use nalgebra::DMatrix;
use serde_json::Value;

#[test]
fn matrix_csv_roundtrip_is_exact() {
    let m = DMatrix::from_row_slice(2, 3, &[0.1, -2.5e-300, 1.0 / 3.0, 7.0, f64::MAX, -0.0]);
    let text = io::matrix_to_csv_string(&m);
    let back = io::read_matrix_csv(text.as_bytes()).unwrap();
    assert_eq!(back.shape(), (2, 3));
    for (x, y) in m.iter().zip(back.iter()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn certificate_json_has_stable_shape() {
    let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.5, 1.0, 0.0]);
    let b = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 2.0]);
    let cert = rmm::certificate_precise(&a, &b, 50, 3.0).unwrap();
    let v: Value = serde_json::from_str(&io::to_json_string(&cert).unwrap()).unwrap();
    for key in ["deviation", "probability", "t", "variant"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["t"].as_f64(), Some(3.0));
}

#[test]
fn monte_carlo_is_deterministic_and_thread_free() {
    let e = Ensemble::rademacher(3).unwrap();
    let cert = CertKind::Bernstein { t: 3.0 };
    let mut cfg = McConfig::new(20, 3000, 77);
    let serial = mc_validate(&e, &cert, &McConfig { threads: Some(1), ..cfg }).unwrap();
    cfg.threads = Some(4);
    let parallel = mc_validate(&e, &cert, &cfg).unwrap();
    assert_eq!(reports_to_csv(&[serial.clone()]).unwrap(), reports_to_csv(&[parallel]).unwrap());
    assert!(serial.pass);
    assert!(serial.empirical <= serial.bound + serial.slack);
}

#[test]
fn sampled_product_tracks_exact_product() {
    let a = DMatrix::from_fn(4, 40, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
    let b = DMatrix::from_fn(3, 40, |i, j| ((i * 5 + j) % 7) as f64 - 3.0);
    let plan = rmm::build_plan(&a, &b).unwrap();
    let exact = &a * b.transpose();
    let est = rmm::approx_product(&a, &b, &plan, 20_000, 3).unwrap();
    let err = mtails::specmat::spectral_norm(&(&est - &exact)).unwrap();
    let threshold = rmm::certificate_precise(&a, &b, 20_000, 1000f64.ln())
        .unwrap()
        .absolute_deviation()
        .unwrap();
    assert!(err <= threshold, "error {err} above {threshold}");
    assert_eq!(est, rmm::approx_product(&a, &b, &plan, 20_000, 3).unwrap());
}
