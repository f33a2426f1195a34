use std::ffi::{CStr, CString};
use std::ptr;

use bathlab_ffi::*;

fn last_error() -> String {
    let p = bathlab_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn reference_model() -> *mut BathlabModel {
    let mut m = ptr::null_mut();
    let s = unsafe { bathlab_model_from_coupling_rhs(9.0, 1.0, (1.0f64 / 3.0).sqrt(), 4.0, 1.0, 1.0, 0.5, &mut m) };
    assert_eq!(s, BathlabStatus::Ok);
    assert!(!m.is_null());
    m
}

#[test]
fn roots_and_regime() {
    let m = reference_model();
    let mut roots = BathlabRoots::default();
    let mut regime = BathlabRegime::Boundary;
    assert_eq!(unsafe { bathlab_model_roots(m, &mut roots, &mut regime) }, BathlabStatus::Ok);
    assert_eq!(regime, BathlabRegime::LargeCoupling);
    for (got, want) in roots.re.iter().zip([-2.27227008, -1.56912979, 0.84139987]) {
        assert!((got - want).abs() < 1e-7, "{got} vs {want}");
    }
    assert_eq!(roots.im, [0.0; 3]);

    let (mut crit, mut pd) = (0.0, true);
    assert_eq!(unsafe { bathlab_model_stability(m, &mut crit, &mut pd) }, BathlabStatus::Ok);
    assert!((crit - 2.0 / std::f64::consts::PI).abs() < 1e-12 && !pd);
    unsafe { bathlab_model_free(m) };
}

#[test]
fn response_and_gaussian() {
    let m = reference_model();
    let (mut v, mut v1, mut v2) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { bathlab_model_response(m, 0.0, &mut v, &mut v1, &mut v2) }, BathlabStatus::Ok);
    assert!(v.abs() < 1e-14 && (v1 - 1.0).abs() < 1e-14);

    let (mut qs, mut ps, mut a, mut b, mut c) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let s = unsafe { bathlab_model_gaussian(m, 0.5, &mut qs, &mut ps, &mut a, &mut b, &mut c) };
    assert_eq!(s, BathlabStatus::Ok);
    assert!((a - 0.0145475).abs() < 1e-6 && (b - 0.0536661).abs() < 1e-6 && (c - 0.2149908).abs() < 1e-6);

    let mut rho = 0.0;
    assert_eq!(unsafe { bathlab_model_density(m, 0.5, qs, ps, &mut rho) }, BathlabStatus::Ok);
    let peak = 1.0 / (2.0 * std::f64::consts::PI * (a * c - b * b).sqrt());
    assert!((rho - peak).abs() < 1e-6 * peak);
    unsafe { bathlab_model_free(m) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut m = ptr::null_mut();
    let s = unsafe { bathlab_model_new(9.0, 1.0, 0.5, -1.0, 1.0, 0.0, 0.0, &mut m) };
    assert_eq!(s, BathlabStatus::InvalidArgument);
    assert!(m.is_null());
    assert!(last_error().contains("epsilon"), "{}", last_error());

    let s = unsafe { bathlab_model_new(9.0, 1.0, 0.5, 1.0, 1.0, 0.0, 0.0, ptr::null_mut()) };
    assert_eq!(s, BathlabStatus::NullPointer);

    let mut roots = BathlabRoots::default();
    let mut regime = BathlabRegime::Boundary;
    assert_eq!(unsafe { bathlab_model_roots(ptr::null(), &mut roots, &mut regime) }, BathlabStatus::NullPointer);

    let m = reference_model();
    let (mut v, mut v1, mut v2) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { bathlab_model_response(m, -1.0, &mut v, &mut v1, &mut v2) }, BathlabStatus::InvalidArgument);
    unsafe { bathlab_model_free(m) };
    unsafe { bathlab_model_free(ptr::null_mut()) };
}

#[test]
fn ensemble_handle() {
    let m = reference_model();
    let times = [0.5, 1.0];
    let mut e = ptr::null_mut();
    let s = unsafe {
        bathlab_ensemble_run(m, 200, 200.0, 400, times.as_ptr(), times.len(), 3, BathlabMethod::SolutionFormula, 0.0, &mut e)
    };
    assert_eq!(s, BathlabStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { bathlab_ensemble_len(e) }, 2);
    let mut mo = BathlabMoments::default();
    assert_eq!(unsafe { bathlab_ensemble_moments(e, 1, &mut mo) }, BathlabStatus::Ok);
    assert_eq!(mo.t, 1.0);
    assert!(mo.var_q > 0.0 && mo.se_q > 0.0);
    assert_eq!(unsafe { bathlab_ensemble_moments(e, 2, &mut mo) }, BathlabStatus::OutOfRange);

    let mut again = ptr::null_mut();
    unsafe {
        bathlab_ensemble_run(m, 200, 200.0, 400, times.as_ptr(), times.len(), 3, BathlabMethod::SolutionFormula, 0.0, &mut again)
    };
    let mut mo2 = BathlabMoments::default();
    unsafe { bathlab_ensemble_moments(again, 1, &mut mo2) };
    assert_eq!(mo.mean_q.to_bits(), mo2.mean_q.to_bits());
    unsafe {
        bathlab_ensemble_free(e);
        bathlab_ensemble_free(again);
        bathlab_model_free(m);
    }
}

#[test]
fn run_config_round_trip() {
    let cfg = CString::new(r#"{"kind": "roots", "a": 9, "b": 1, "omega": 0.5773502691896257, "coupling_rhs": 4}"#).unwrap();
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { bathlab_run_config(cfg.as_ptr(), &mut run) }, BathlabStatus::Ok);
    assert!(unsafe { bathlab_run_checks_passed(run) });
    let csv = unsafe { CStr::from_ptr(bathlab_run_csv(run)) }.to_str().unwrap();
    assert!(csv.starts_with("index,re,im\n"));
    let summary = unsafe { CStr::from_ptr(bathlab_run_summary(run)) }.to_str().unwrap();
    assert!(summary.contains("LargeCoupling"));
    unsafe { bathlab_run_free(run) };

    let bad = CString::new(r#"{"kind": "roots", "a": 9, "b": 1}"#).unwrap();
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { bathlab_run_config(bad.as_ptr(), &mut run) }, BathlabStatus::Config);
    assert!(run.is_null());
    assert!(last_error().contains("omega"));
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(bathlab_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let dir = tempfile_dir();
    let src = dir.join("probe.c");
    std::fs::write(
        &src,
        "#include \"bathlab.h\"\nint main(void) { BathlabModel *m = 0; return bathlab_model_new(9, 1, 0.5, 1, 1, 0, 0, &m) == BATHLAB_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = match std::process::Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", include]).arg(&src).status() {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler; skipping");
            return;
        }
    };
    assert!(status.success());
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("bathlab-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
