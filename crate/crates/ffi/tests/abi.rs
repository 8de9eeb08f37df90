use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use opgeo_ffi::*;

fn matrix(n: usize, re: &[f64], im: Option<&[f64]>) -> *mut OpgeoMatrix {
    let mut m = ptr::null_mut();
    let st = unsafe { opgeo_matrix_new(n, re.as_ptr(), im.map_or(ptr::null(), |v| v.as_ptr()), &mut m) };
    assert_eq!(st, OpgeoStatus::Ok);
    m
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(opgeo_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn round_trip_entries() {
    let re = [1.0, 2.0, 3.0, 4.0];
    let im = [0.5, -0.5, 0.0, 1.5];
    let m = matrix(2, &re, Some(&im));
    let (mut r, mut i) = ([0.0; 4], [0.0; 4]);
    unsafe {
        assert_eq!(opgeo_matrix_dim(m), 2);
        assert_eq!(opgeo_matrix_read(m, r.as_mut_ptr(), i.as_mut_ptr()), OpgeoStatus::Ok);
        opgeo_matrix_free(m);
    }
    assert_eq!((r, i), (re, im));
}

#[test]
fn spd_distance_of_diagonals() {
    let p = matrix(2, &[1.0, 0.0, 0.0, 1.0], None);
    let q = matrix(2, &[4.0, 0.0, 0.0, 9.0], None);
    let mut d = 0.0;
    unsafe {
        assert_eq!(opgeo_spd_distance(p, q, &mut d), OpgeoStatus::Ok);
        opgeo_matrix_free(p);
        opgeo_matrix_free(q);
    }
    let want = (4f64.ln().powi(2) + 9f64.ln().powi(2)).sqrt();
    assert!((d - want).abs() < 1e-14);
}

#[test]
fn errors_map_to_status_codes() {
    let bad = matrix(2, &[1.0, 0.0, 0.0, -1.0], None);
    let mut d = 0.0;
    unsafe {
        assert_eq!(opgeo_spd_distance(bad, bad, &mut d), OpgeoStatus::NotPositiveDefinite);
        assert!(last_error().contains("NotPositiveDefinite"));
        assert_eq!(opgeo_schatten_norm(bad, 0.5, &mut d), OpgeoStatus::InvalidP);
        assert_eq!(opgeo_spd_distance(ptr::null(), bad, &mut d), OpgeoStatus::NullPointer);
        assert_eq!(opgeo_schatten_norm(bad, f64::INFINITY, &mut d), OpgeoStatus::Ok);
        assert_eq!(last_error(), "");
        opgeo_matrix_free(bad);
    }
    assert!((d - 1.0).abs() < 1e-15);
    let nan = [f64::NAN, 0.0, 0.0, 1.0];
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { opgeo_matrix_new(2, nan.as_ptr(), ptr::null(), &mut m) }, OpgeoStatus::NonFinite);
    assert!(m.is_null());
}

#[test]
fn polar_factors_multiply_back() {
    let g = matrix(2, &[1.0, 2.0, -0.5, 3.0], Some(&[0.2, 0.0, 0.1, -0.3]));
    let (mut u, mut p) = (ptr::null_mut(), ptr::null_mut());
    let (mut ur, mut ui, mut pr, mut pi) = ([0.0; 4], [0.0; 4], [0.0; 4], [0.0; 4]);
    unsafe {
        assert_eq!(opgeo_polar_decompose(g, &mut u, &mut p), OpgeoStatus::Ok);
        opgeo_matrix_read(u, ur.as_mut_ptr(), ui.as_mut_ptr());
        opgeo_matrix_read(p, pr.as_mut_ptr(), pi.as_mut_ptr());
        for h in [g, u, p] {
            opgeo_matrix_free(h);
        }
    }
    let c = |r: &[f64; 4], i: &[f64; 4], k: usize| num_complex::Complex64::new(r[k], i[k]);
    let want = [(1.0, 0.2), (2.0, 0.0), (-0.5, 0.1), (3.0, -0.3)];
    for a in 0..2 {
        for b in 0..2 {
            let z = c(&ur, &ui, 2 * a) * c(&pr, &pi, b) + c(&ur, &ui, 2 * a + 1) * c(&pr, &pi, 2 + b);
            let (wr, wi) = want[2 * a + b];
            assert!((z.re - wr).abs() < 1e-12 && (z.im - wi).abs() < 1e-12);
        }
    }
}

#[test]
fn geodesic_endpoints_and_exp() {
    let p = matrix(2, &[2.0, 0.5, 0.5, 1.0], None);
    let q = matrix(2, &[1.0, 0.0, 0.0, 3.0], None);
    let mut end = ptr::null_mut();
    let mut e = ptr::null_mut();
    let z = matrix(2, &[0.0; 4], None);
    let (mut r, mut r2) = ([0.0; 4], [0.0; 4]);
    unsafe {
        assert_eq!(opgeo_spd_geodesic(p, q, 1.0, &mut end), OpgeoStatus::Ok);
        opgeo_matrix_read(end, r.as_mut_ptr(), ptr::null_mut());
        assert_eq!(opgeo_matrix_exp(z, &mut e), OpgeoStatus::Ok);
        opgeo_matrix_read(e, r2.as_mut_ptr(), ptr::null_mut());
        let mut g = ptr::null_mut();
        assert_eq!(opgeo_polar_geodesic(p, q, f64::NAN, &mut g), OpgeoStatus::InvalidArgument);
        let mut c = 0.0;
        assert_eq!(opgeo_bound_constant(p, p, &mut c), OpgeoStatus::Ok);
        assert!(c >= 1.0);
        for h in [p, q, end, e, z] {
            opgeo_matrix_free(h);
        }
    }
    for (a, b) in r.iter().zip([1.0, 0.0, 0.0, 3.0]) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(r2, [1.0, 0.0, 0.0, 1.0]);
}

#[test]
fn suite_report_over_the_boundary() {
    let suite = CString::new("closed_form").unwrap();
    let cfg = CString::new(r#"{"trials": 3, "n": 2, "manifold": "spd", "seed": 9}"#).unwrap();
    let mut json = ptr::null_mut();
    let mut passed = false;
    unsafe {
        assert_eq!(opgeo_run_suite(suite.as_ptr(), cfg.as_ptr(), &mut json, &mut passed), OpgeoStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        opgeo_string_free(json);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["suite"], "closed_form");
        assert_eq!(v["pass"], passed);
        assert!(passed);
        let unknown = CString::new("nope").unwrap();
        assert_eq!(opgeo_run_suite(unknown.as_ptr(), ptr::null(), &mut json, &mut passed), OpgeoStatus::UnknownSuite);
        assert!(json.is_null());
        let bad = CString::new(r#"{"colour": 1}"#).unwrap();
        assert_eq!(opgeo_run_suite(suite.as_ptr(), bad.as_ptr(), &mut json, &mut passed), OpgeoStatus::ConfigInvalid);
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/opgeo.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(text.contains(&format!("{name}(")), "{name} missing from header");
    }
}

/// Compiles and runs a small C program against the static library.
#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else { return };
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = lib_dir.join("libopgeo_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let c_src = dir.path().join("main.c");
    std::fs::write(
        &c_src,
        r#"
#include <math.h>
#include <stdio.h>
#include "opgeo.h"
int main(void) {
    double p[4] = {1, 0, 0, 1}, q[4] = {4, 0, 0, 9};
    OpgeoMatrix *a = NULL, *b = NULL;
    if (opgeo_matrix_new(2, p, NULL, &a) != OPGEO_STATUS_OK) return 10;
    if (opgeo_matrix_new(2, q, NULL, &b) != OPGEO_STATUS_OK) return 11;
    double d = 0;
    if (opgeo_spd_distance(a, b, &d) != OPGEO_STATUS_OK) return 12;
    if (fabs(d - sqrt(log(4) * log(4) + log(9) * log(9))) > 1e-14) return 13;
    if (opgeo_schatten_norm(a, 0.5, &d) != OPGEO_STATUS_INVALID_P) return 14;
    printf("%s\n", opgeo_last_error());
    opgeo_matrix_free(a);
    opgeo_matrix_free(b);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let status = Command::new(&cc)
        .arg(&c_src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).contains("InvalidP"));
}

fn which_cc() -> Result<String, ()> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    match Command::new(&cc).arg("--version").output() {
        Ok(o) if o.status.success() => Ok(cc),
        _ => Err(()),
    }
}
