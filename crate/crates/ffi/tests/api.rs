use std::f64::consts::PI;
use std::ffi::{CStr, CString};
use std::ptr;

use meanfield_ffi::*;

fn last_error() -> String {
    let p = mf_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn domain(kind: &str, params: &[f64]) -> *mut MfDomain {
    let k = CString::new(kind).unwrap();
    let mut d = ptr::null_mut();
    let s = unsafe { mf_domain_new(k.as_ptr(), params.as_ptr(), params.len(), 0.0, 0.0, 0.0, &mut d) };
    assert_eq!(s, MfStatus::Ok);
    d
}

#[test]
fn disk_round_trip() {
    let d = domain("disk", &[1.0]);
    let mut area = 0.0;
    let mut gamma = 1.0;
    unsafe {
        assert_eq!(mf_domain_area(d, &mut area), MfStatus::Ok);
        assert_eq!(mf_robin(d, 0.5, 0.0, &mut gamma), MfStatus::Ok);
        mf_domain_free(d);
    }
    assert!((area - PI).abs() < 1e-12);
    assert!((gamma - (0.75f64).ln() / (2.0 * PI)).abs() < 1e-9);
    assert!(mf_last_error_message().is_null());
}

#[test]
fn robin_sup_and_energy_of_a_square() {
    let d = domain("square", &[PI.sqrt()]);
    let mut report = ptr::null_mut();
    let (mut g, mut x, mut y, mut ok, mut e) = (0.0, 1.0, 1.0, 0, 0.0);
    unsafe {
        assert_eq!(mf_robin_sup(d, &mut report), MfStatus::Ok);
        assert_eq!(mf_robin_report_sup(report, &mut g, &mut x, &mut y), MfStatus::Ok);
        assert_eq!(mf_robin_report_gates_passed(report, &mut ok), MfStatus::Ok);
        assert_eq!(mf_energy_estimate(d, &mut e), MfStatus::Ok);
        mf_robin_report_free(report);
        mf_domain_free(d);
    }
    assert!(g < -1e-3 && g > -1e-2);
    assert!(x.abs() < 1e-4 && y.abs() < 1e-4);
    assert_eq!(ok, 1);
    assert!((e - (-1.0 - 4.0 * PI * g)).abs() < 1e-9);
}

#[test]
fn mesh_access() {
    let d = domain("ellipse", &[1.0, 0.5]);
    let mut m = ptr::null_mut();
    let (mut nv, mut nt) = (0usize, 0usize);
    unsafe {
        assert_eq!(mf_triangulate(d, 0.1, &mut m), MfStatus::Ok);
        assert_eq!(mf_mesh_counts(m, &mut nv, &mut nt), MfStatus::Ok);
        let mut xy = vec![0.0; 2 * nv];
        assert_eq!(mf_mesh_vertices(m, xy.as_mut_ptr(), nv - 1), MfStatus::InvalidArgument);
        assert!(last_error().contains("capacity"));
        assert_eq!(mf_mesh_vertices(m, xy.as_mut_ptr(), nv), MfStatus::Ok);
        assert!(xy.chunks(2).all(|p| p[0] * p[0] + 4.0 * p[1] * p[1] <= 1.0 + 1e-9));
        mf_mesh_free(m);
        mf_domain_free(d);
    }
    assert!(nv > 50 && nt > nv);
}

#[test]
fn errors_carry_codes_and_messages() {
    let k = CString::new("blob").unwrap();
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(mf_domain_new(k.as_ptr(), [1.0].as_ptr(), 1, 0.0, 0.0, 0.0, &mut d), MfStatus::InvalidDomain);
        assert!(last_error().contains("blob"));
        assert!(d.is_null());
        assert_eq!(mf_domain_new(ptr::null(), ptr::null(), 0, 0.0, 0.0, 0.0, &mut d), MfStatus::NullPointer);
        let mut v = 0.0;
        assert_eq!(mf_domain_area(ptr::null(), &mut v), MfStatus::NullPointer);
        assert_eq!(mf_disk_energy(8.0 * PI, &mut v), MfStatus::InvalidArgument);
        assert_eq!(mf_disk_energy(4.0 * PI, &mut v), MfStatus::Ok);
        assert!(mf_last_error_message().is_null());
        assert!((v - (2f64.ln() - 1.0)).abs() < 1e-12);

        let disk = domain("disk", &[2.0]);
        assert_eq!(mf_energy_estimate(disk, &mut v), MfStatus::InvalidArgument);
        assert_eq!(mf_robin(disk, 3.0, 0.0, &mut v), MfStatus::OutsideDomain);
        let mut unit = ptr::null_mut();
        assert_eq!(mf_domain_normalize_area(disk, PI, &mut unit), MfStatus::Ok);
        assert_eq!(mf_energy_estimate(unit, &mut v), MfStatus::Ok);
        assert!((v + 1.0).abs() < 1e-9);
        mf_domain_free(unit);
        mf_domain_free(disk);
        mf_domain_free(ptr::null_mut());
    }
    let version = unsafe { CStr::from_ptr(mf_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/meanfield.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> =
        src.lines().filter_map(|l| l.split("extern \"C\" fn ").nth(1)).map(|l| l.split('(').next().unwrap()).collect();
    assert!(exports.len() >= 15);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"meanfield.h\"\nint main(void) { MfDomain *d = 0; double a; return mf_domain_area(d, &a) == MF_STATUS_NULL_POINTER ? 0 : 1; }\n",
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
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
