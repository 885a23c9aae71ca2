use std::ffi::{c_char, CStr, CString};
use std::process::Command;
use std::ptr;

use rddi_ffi::*;

fn last_error() -> String {
    let n = rddi_last_error_length();
    let mut buf = vec![0 as c_char; n + 1];
    assert_eq!(unsafe { rddi_last_error_message(buf.as_mut_ptr(), buf.len()) }, RddiStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn fig1() -> *mut RddiCoupling {
    let mut h = ptr::null_mut();
    let st = unsafe { rddi_coupling_from_coefficients(1.07, 1.07, 0.04, 0.06, 1e3, 1e3, &mut h) };
    assert_eq!(st, RddiStatus::Ok);
    h
}

#[test]
fn coefficients_round_trip() {
    let h = fig1();
    let mut v = RddiCouplingValues::default();
    assert_eq!(unsafe { rddi_coupling_values(h, &mut v) }, RddiStatus::Ok);
    assert_eq!((v.gamma_aa, v.gamma_ab, v.delta_ab), (1.07, 0.04, 0.06));
    assert_eq!((v.kappa_ab_re, v.kappa_ab_im), (-0.02, 0.06));
    unsafe { rddi_coupling_free(h) };
}

#[test]
fn weak_dynamics_conserves_probability() {
    let h = fig1();
    let mut pa = vec![0.0; 101];
    let mut pb = vec![0.0; 101];
    let st = unsafe { rddi_dynamics_weak(h, 5.0, 100, pa.as_mut_ptr(), pb.as_mut_ptr(), 101) };
    assert_eq!(st, RddiStatus::Ok);
    assert_eq!(pa[0], 1.0);
    assert!(pa.iter().zip(&pb).all(|(a, b)| a + b <= 1.0 + 1e-12));
    assert!(pb[50] > 0.0);
    let st = unsafe { rddi_dynamics_weak(h, 5.0, 100, pa.as_mut_ptr(), pb.as_mut_ptr(), 100) };
    assert_eq!(st, RddiStatus::BufferTooSmall);
    unsafe { rddi_coupling_free(h) };
}

#[test]
fn rates_regime_ii_ratio() {
    let h = fig1();
    let mut r = RddiRates::default();
    assert_eq!(unsafe { rddi_rates(h, f64::NAN, &mut r) }, RddiStatus::Ok);
    assert!((r.ratio - (2f64.sqrt() - 1.0)).abs() < 1e-9);
    unsafe { rddi_coupling_free(h) };
}

#[test]
fn vacuum_geometry_is_symmetric() {
    let a = RddiAtom { position: [0.0; 3], dipole: [0.0, 0.0, 1.0], dipole_debye: 1.0, omega: 3e15 };
    let b = RddiAtom { position: [5e-8, 0.0, 0.0], ..a };
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { rddi_coupling_vacuum(&a, &b, false, &mut h) }, RddiStatus::Ok);
    let mut v = RddiCouplingValues::default();
    assert_eq!(unsafe { rddi_coupling_values(h, &mut v) }, RddiStatus::Ok);
    assert!(v.gamma_aa > 0.0 && (v.gamma_aa - v.gamma_bb).abs() < 1e-9 * v.gamma_aa);
    assert!(v.gamma_ab.abs() <= v.gamma_aa);
    unsafe { rddi_coupling_free(h) };
}

#[test]
fn errors_carry_status_and_message() {
    let mut h = ptr::null_mut();
    let st = unsafe { rddi_coupling_from_coefficients(-1.0, 1.0, 0.0, 0.0, 1.0, 1.0, &mut h) };
    assert_ne!(st, RddiStatus::Ok);
    assert!(h.is_null());
    assert!(!last_error().is_empty());

    let st = unsafe { rddi_coupling_values(ptr::null(), ptr::null_mut()) };
    assert_eq!(st, RddiStatus::NullPointer);
    assert!(last_error().contains("null"));

    let path = CString::new("/nonexistent/scenario.toml").unwrap();
    let mut s = ptr::null_mut();
    let st = unsafe { rddi_scenario_load(path.as_ptr(), &mut s) };
    assert_eq!(st, RddiStatus::Io);

    let mut small = [0 as c_char; 2];
    assert_eq!(unsafe { rddi_last_error_message(small.as_mut_ptr(), 2) }, RddiStatus::BufferTooSmall);
    unsafe {
        rddi_coupling_free(ptr::null_mut());
        rddi_scenario_free(ptr::null_mut());
    }
}

#[test]
fn scenario_runs_through_handle() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.toml");
    std::fs::write(
        &file,
        "[reference]\nomega = 3.0e15\n[atoms.override]\ngamma_aa = 1.07\ngamma_bb = 1.07\ngamma_ab = 0.04\ndelta_ab = 0.06\n[analysis]\nrun = [\"rates\"]\n",
    )
    .unwrap();
    let path = CString::new(file.to_str().unwrap()).unwrap();
    let out = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rddi_scenario_load(path.as_ptr(), &mut s) }, RddiStatus::Ok);
    assert_eq!(unsafe { rddi_scenario_run(s, out.as_ptr(), false) }, RddiStatus::Ok);
    assert!(dir.path().join("out/rates.csv").exists());
    assert_eq!(unsafe { rddi_scenario_run(s, out.as_ptr(), false) }, RddiStatus::Config);
    unsafe { rddi_scenario_free(s) };
}

#[test]
fn selftest_and_version() {
    let mut failures = usize::MAX;
    assert_eq!(unsafe { rddi_selftest(7, 5, &mut failures) }, RddiStatus::Ok);
    assert_eq!(failures, 0);
    let v = unsafe { CStr::from_ptr(rddi_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"rddi.h\"\nint main(void) { RddiCoupling *h = 0; RddiStatus s = rddi_coupling_from_coefficients(1, 1, 0, 0, 1, 1, &h); rddi_coupling_free(h); return s == RDDI_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = match Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-I", include]).arg(&src).status() {
        Ok(s) => s,
        Err(_) => return,
    };
    assert!(status.success());
}
