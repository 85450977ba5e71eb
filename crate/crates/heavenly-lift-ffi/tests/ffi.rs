use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use heavenly_lift_ffi::*;

fn spec(family: u32) -> *mut HlSpec {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { hl_spec_default(family, &mut s) }, HlStatus::Ok);
    assert!(!s.is_null());
    s
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(hl_last_error()) }.to_string_lossy().into_owned()
}

const X: [f64; 4] = [1.2, 0.1, 1.1, -0.2];

const SOL1: &str = r#"
[solution]
family = "sol1"
b = { kind = "polynomial", coeffs = [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]] }
r = { kind = "trig", a = 1.0, b = 0.0, omega = 1.0 }
"#;

#[test]
fn residuals_vanish_for_every_family() {
    for f in [HL_FAMILY_SOL1, HL_FAMILY_SOL2, HL_FAMILY_SOL3, HL_FAMILY_SPECIAL1, HL_FAMILY_SPECIAL2] {
        let s = spec(f);
        let mut r = HlResiduals::default();
        assert_eq!(unsafe { hl_residuals(s, X.as_ptr(), &mut r) }, HlStatus::Ok, "{}", last_error());
        assert!(r.leghcma < 1e-8 && r.bf < 1e-8, "{f}: {r:?}");
        if f >= HL_FAMILY_SPECIAL1 {
            assert!(r.legrot < 1e-8 && r.backlund < 1e-7, "{f}: {r:?}");
        } else {
            assert!(r.legrot.is_nan() && r.backlund.is_nan());
        }
        unsafe { hl_spec_free(s) };
    }
}

#[test]
fn metric_is_symmetric_and_ricci_flat() {
    let s = spec(HL_FAMILY_SPECIAL1);
    let (mut g, mut c) = ([0.0; 16], [0.0; 16]);
    unsafe {
        assert_eq!(hl_metric(s, X.as_ptr(), 0, g.as_mut_ptr()), HlStatus::Ok);
        assert_eq!(hl_metric(s, X.as_ptr(), 1, c.as_mut_ptr()), HlStatus::Ok);
    }
    for a in 0..4 {
        for b in 0..4 {
            assert_eq!(g[4 * a + b], g[4 * b + a]);
        }
    }
    // the closed form agrees with the ψ metric up to the family's overall sign
    let d = g.iter().zip(&c).map(|(a, b)| (a.abs() - b.abs()).abs()).fold(0.0, f64::max);
    assert!(d < 1e-9, "{d}");
    let (mut ric, mut riem) = (0.0, 0.0);
    assert_eq!(unsafe { hl_curvature(s, X.as_ptr(), &mut ric, &mut riem) }, HlStatus::Ok);
    assert!(ric < 1e-8 && riem > 1e-3, "{ric} {riem}");
    unsafe { hl_spec_free(s) };
}

#[test]
fn errors_carry_status_and_message() {
    let mut out = 0.0;
    assert_eq!(unsafe { hl_psi(ptr::null(), X.as_ptr(), &mut out) }, HlStatus::NullPointer);
    assert!(!last_error().is_empty());

    let s = spec(HL_FAMILY_SOL1);
    let bad = [f64::NAN, 0.0, 1.0, 0.0];
    assert_eq!(unsafe { hl_psi(s, bad.as_ptr(), &mut out) }, HlStatus::InvalidArgument);
    let outside = [1.0, 0.0, -1.0, 0.0];
    assert_eq!(unsafe { hl_psi(s, outside.as_ptr(), &mut out) }, HlStatus::Domain, "{}", last_error());
    assert_eq!(unsafe { hl_psi(s, X.as_ptr(), &mut out) }, HlStatus::Ok);
    assert!(out.is_finite() && last_error().is_empty());
    unsafe { hl_spec_free(s) };

    let mut h = ptr::null_mut();
    assert_eq!(unsafe { hl_spec_default(99, &mut h) }, HlStatus::InvalidArgument);
    let text = CString::new("[solution]\nfamily = \"sol9\"\n").unwrap();
    assert_eq!(unsafe { hl_spec_from_toml(text.as_ptr(), &mut h) }, HlStatus::Config);
    assert!(h.is_null());
    unsafe { hl_spec_free(ptr::null_mut()) };
}

#[test]
fn classification_handles() {
    let text = CString::new(SOL1).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { hl_spec_from_toml(text.as_ptr(), &mut s) }, HlStatus::Ok);
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { hl_classify(s, &mut c) }, HlStatus::Ok, "{}", last_error());
    unsafe {
        assert_eq!(hl_classification_invariant(c), 0);
        assert_eq!(hl_classification_len(c), 3);
        let (mut d, mut k) = (0, 9);
        assert_eq!(hl_classification_report(c, 1, &mut d, &mut k), HlStatus::Ok);
        assert_eq!((d, k), (6, 0));
        assert_eq!(hl_classification_report(c, 3, &mut d, &mut k), HlStatus::InvalidArgument);
        assert_eq!(hl_classification_invariant(ptr::null()), -1);
        hl_classification_free(c);
        hl_spec_free(s);
    }
}

#[test]
fn run_returns_the_cli_report() {
    let text = CString::new(format!("{SOL1}\n[run]\npoints = 40\n")).unwrap();
    let (mut json, mut code) = (ptr::null_mut(), -1);
    assert_eq!(unsafe { hl_run(HL_COMMAND_VERIFY, text.as_ptr(), &mut json, &mut code) }, HlStatus::Ok);
    let s = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { hl_string_free(json) };
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v["schema"], "heavenly-lift/1");
    assert_eq!(unsafe { hl_run(7, text.as_ptr(), &mut json, &mut code) }, HlStatus::InvalidArgument);
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/heavenly_lift.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let names: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|l| l.split('(').next().unwrap())
        .collect();
    assert!(names.len() >= 14, "{names:?}");
    for n in names {
        assert!(h.contains(&format!("{n}(")), "{n} missing from header");
    }
    assert!(h.contains("typedef struct HlSpec HlSpec;"));
}

#[test]
fn c_program_links_against_the_shared_library() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler; skipped");
        return;
    };
    let dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    if !dir.join("libheavenly_lift_ffi.so").exists() {
        eprintln!("shared library not found in {}; skipped", dir.display());
        return;
    }
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::temp_dir().join(format!("hl_smoke_{}", std::process::id()));
    let st = Command::new(cc)
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg("-L")
        .arg(&dir)
        .arg("-lheavenly_lift_ffi")
        .arg(format!("-Wl,-rpath,{}", dir.display()))
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(st.success());
    let out = Command::new(&exe).output().unwrap();
    let _ = std::fs::remove_file(&exe);
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
