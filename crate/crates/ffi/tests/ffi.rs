use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use darboux_ffi::*;

#[test]
fn kvg_round_trip_through_the_c_interface() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(darboux_kvg_new(0.944, 0.232, 1.22, &mut h), DarbouxStatus::Ok);
        let mut eta = 0.0;
        assert_eq!(darboux_kvg_eta(h, &mut eta), DarbouxStatus::Ok);
        assert!((eta - 0.018081).abs() < 1e-6);

        let (mut re, mut im) = ([0.0; 4], [0.0; 4]);
        assert_eq!(darboux_kvg_smatrix(h, 0.5, re.as_mut_ptr(), im.as_mut_ptr()), DarbouxStatus::Ok);
        let closed = [re[0], im[0], re[3], im[3]];

        let mut pot = ptr::null_mut();
        assert_eq!(darboux_kvg_potential(h, 1e-3, 20.0, 5000, true, &mut pot), DarbouxStatus::Ok);
        let (mut len, mut n) = (0usize, 0usize);
        assert_eq!(darboux_potential_shape(pot, &mut len, &mut n), DarbouxStatus::Ok);
        assert_eq!((len, n), (5000, 2));
        let (mut r, mut v, mut pole) = (0.0, [0.0; 4], true);
        assert_eq!(darboux_potential_sample(pot, len - 1, &mut r, v.as_mut_ptr(), &mut pole), DarbouxStatus::Ok);
        assert!((r - 20.0).abs() < 1e-9 && !pole);
        assert!((v[0] - 6.0 / 400.0).abs() < 1e-6 && v[3].abs() < 1e-6);
        assert_eq!(darboux_potential_sample(pot, len, &mut r, v.as_mut_ptr(), &mut pole), DarbouxStatus::InvalidArgument);

        // numerical S is (d, s)-ordered, the closed form (s, d)
        let l = [2u32, 0];
        assert_eq!(darboux_potential_smatrix(pot, 0.5, l.as_ptr(), 2, re.as_mut_ptr(), im.as_mut_ptr()), DarbouxStatus::Ok);
        let numeric = [re[3], im[3], re[0], im[0]];
        for (a, b) in closed.iter().zip(numeric) {
            assert!((a - b).abs() < 1e-3, "{closed:?} vs {numeric:?}");
        }
        darboux_potential_free(pot);
        darboux_kvg_free(h);
    }
}

#[test]
fn run_config_returns_json_tables() {
    let cfg = CString::new(
        r#"{"command": "potential", "grid": {"r_min": 0.5, "r_max": 2, "count": 3},
        "chain": {"n": 2, "m": 1, "links": [{"kind": "singular", "entries": [[{"basis": "cosh", "k": 0.8}]]}]}}"#,
    )
    .unwrap();
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(darboux_run_config(cfg.as_ptr(), &mut out), DarbouxStatus::Ok);
        let text = CStr::from_ptr(out).to_str().unwrap().to_owned();
        darboux_string_free(out);
        let tables = darboux::cli::from_json(&text).unwrap();
        assert_eq!(tables[0].rows.len(), 3);

        let bad = CString::new(r#"{"command": "potential", "chain": {"n": 1, "m": 1, "links": []}}"#).unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(darboux_run_config(bad.as_ptr(), &mut out), DarbouxStatus::Config);
        assert!(out.is_null());
        let msg = CStr::from_ptr(darboux_last_error()).to_str().unwrap();
        assert!(msg.contains("chain.links"), "{msg}");
    }
}

#[test]
fn version_matches_the_package() {
    let v = unsafe { CStr::from_ptr(darboux_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "darboux.h"

int main(void) {
    DarbouxKvg *h = NULL;
    if (darboux_kvg_new(0.944, 0.232, 1.22, &h) != DARBOUX_STATUS_OK) return 1;
    double eta = 0.0;
    if (darboux_kvg_eta(h, &eta) != DARBOUX_STATUS_OK) return 2;
    darboux_kvg_free(h);
    if (darboux_kvg_new(1.0, 1.0, 1.0, &h) != DARBOUX_STATUS_INVALID_ARGUMENT) return 3;
    printf("%.6f %s\n", eta, darboux_last_error());
    return 0;
}
"#;

/// Compiles a small C program against the generated header and the static
/// library.
#[test]
fn header_compiles_and_links_from_c() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    assert!(lib_dir.join("libdarboux_ffi.a").exists(), "static library not found in {}", lib_dir.display());
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let src = dir.join("smoke.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let bin = dir.join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(lib_dir.join("libdarboux_ffi.a"))
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .expect("a C compiler");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("0.018081 "), "{text}");
    assert!(text.contains("k1 and k2 must differ"), "{text}");
}
