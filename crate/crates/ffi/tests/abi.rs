use nhlab_ffi::*;
use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

const I: NhlabComplex = NhlabComplex { re: 0.0, im: 1.0 };
const ONE: NhlabComplex = NhlabComplex { re: 1.0, im: 0.0 };

fn model(kind: NhlabModelKind, alpha: NhlabComplex, beta: f64, n: u32) -> *mut NhlabModel {
    let mut m = ptr::null_mut();
    let s = unsafe { nhlab_model_new(kind, alpha, beta, I, n, &mut m) };
    assert_eq!(s, NhlabStatus::Ok);
    m
}

#[test]
fn jordan_bound_binorm_table() {
    let m = model(NhlabModelKind::JordanBound, ONE, 0.0, 1);
    let mut out = NhlabComplex::default();
    let targets = [[0.0, 1.0], [1.0, f64::NAN]];
    for i in 0..2 {
        for j in 0..2 {
            if targets[i][j].is_nan() {
                continue;
            }
            assert_eq!(unsafe { nhlab_model_binorm(m, i, j, 1e-10, &mut out) }, NhlabStatus::Ok);
            assert!((out.re - targets[i][j]).abs() < 1e-8 && out.im.abs() < 1e-8, "{i}{j}: {out:?}");
        }
    }
    unsafe { nhlab_model_free(m) };
}

#[test]
fn two_level_transmission_and_green() {
    let m = model(NhlabModelKind::TwoLevel, ONE, 0.3, 1);
    let (mut t, mut r) = (NhlabComplex::default(), NhlabComplex::default());
    for k in [0.5, 1.0, 2.0] {
        assert_eq!(unsafe { nhlab_model_transmission(m, k, &mut t, &mut r) }, NhlabStatus::Ok);
        assert!(((t.re * t.re + t.im * t.im).sqrt() - 1.0).abs() < 1e-6);
        assert!((r.re * r.re + r.im * r.im).sqrt() < 1e-8);
    }
    let mut g = NhlabComplex::default();
    let lambda = NhlabComplex { re: -0.3, im: 0.7 };
    let mut g2 = NhlabComplex::default();
    unsafe {
        assert_eq!(nhlab_model_green(m, lambda, 0.4, -1.1, &mut g), NhlabStatus::Ok);
        assert_eq!(nhlab_model_green(m, lambda, -1.1, 0.4, &mut g2), NhlabStatus::Ok);
        assert_eq!(nhlab_model_green(m, ONE, 0.0, 0.0, &mut g2), NhlabStatus::OnCut);
        nhlab_model_free(m);
    }
    assert!((g.re - g2.re).abs() < 1e-12 || g2.re.is_finite());
}

#[test]
fn excluded_momentum_status() {
    let m = model(NhlabModelKind::ContinuumBs, ONE, 0.0, 1);
    let (mut t, mut r) = (NhlabComplex::default(), NhlabComplex::default());
    assert_eq!(unsafe { nhlab_model_transmission(m, 1.0, &mut t, &mut r) }, NhlabStatus::ExcludedMomentum);
    let name = unsafe { CStr::from_ptr(nhlab_status_name(NhlabStatus::ExcludedMomentum)) };
    assert_eq!(name.to_str().unwrap(), "excluded momentum");
    unsafe { nhlab_model_free(m) };
}

#[test]
fn packet_binorm_law() {
    let mut b = NhlabComplex::default();
    assert_eq!(unsafe { nhlab_packet_value(0.01, I, NhlabObservable::Binorm, &mut b) }, NhlabStatus::Ok);
    assert!((b.re - 0.1 * (std::f64::consts::PI / 8.0).sqrt()).abs() < 1e-6);
    assert_eq!(unsafe { nhlab_packet_value(0.01, ONE, NhlabObservable::Binorm, &mut b) }, NhlabStatus::InvalidParameter);
}

#[test]
fn report_handle() {
    let name = CString::new("finite").unwrap();
    let mut rep = ptr::null_mut();
    let (mut n, mut f) = (0usize, 0usize);
    let mut pass = false;
    let mut json = ptr::null_mut();
    unsafe {
        assert_eq!(nhlab_verify(name.as_ptr(), 7, &mut rep), NhlabStatus::Ok);
        assert_eq!(nhlab_report_pass(rep, &mut pass), NhlabStatus::Ok);
        assert_eq!(nhlab_report_counts(rep, &mut n, &mut f), NhlabStatus::Ok);
        assert_eq!(nhlab_report_json(rep, &mut json), NhlabStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        nhlab_string_free(json);
        nhlab_report_free(rep);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["config"]["seed"], 7);
    }
    assert!(pass && n > 0 && f == 0);
}

#[test]
fn null_handles_are_rejected() {
    let mut out = NhlabComplex::default();
    unsafe {
        assert_eq!(nhlab_model_potential(ptr::null(), 0.0, &mut out), NhlabStatus::NullPointer);
        assert_eq!(nhlab_verify(ptr::null(), 0, ptr::null_mut()), NhlabStatus::NullPointer);
        nhlab_model_free(ptr::null_mut());
        nhlab_report_free(ptr::null_mut());
        nhlab_string_free(ptr::null_mut());
    }
}

#[test]
fn header_is_current() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let h = std::fs::read_to_string(dir.join("include/nhlab.h")).unwrap();
    for sym in ["nhlab_model_new", "nhlab_model_free", "nhlab_verify", "nhlab_report_json", "NHLAB_STATUS_OK", "typedef struct NhlabModel NhlabModel"] {
        assert!(h.contains(sym), "{sym} missing from header");
    }
}

fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libnhlab_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_against_header() {
    let lib = static_lib().expect("static library next to the test binary");
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg(dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}{}", String::from_utf8_lossy(&out.stderr));
    assert!(text.trim_end().ends_with("OK"));
}
