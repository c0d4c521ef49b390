use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use vhetnet_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = vh_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn config_lifecycle() {
    unsafe {
        let cfg = vh_config_default();
        assert_eq!(
            vh_config_set(cfg, c("h").as_ptr(), c("150").as_ptr()),
            VhStatus::Ok
        );
        assert!(vh_last_error().is_null());

        assert_eq!(
            vh_config_set(cfg, c("bogus").as_ptr(), c("1").as_ptr()),
            VhStatus::UnknownKey
        );
        assert!(last_error().contains("bogus"));
        assert_eq!(
            vh_config_set(cfg, c("m_ABS").as_ptr(), c("0.2").as_ptr()),
            VhStatus::InvalidConfig
        );
        assert!(last_error().contains("m_ABS"));

        let mut json = ptr::null_mut();
        assert_eq!(vh_config_to_json(cfg, &mut json), VhStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        vh_string_free(json);
        assert!(text.contains("\"h\":150"), "{text}");

        let mut copy = ptr::null_mut();
        assert_eq!(
            vh_config_from_json(c(&text).as_ptr(), &mut copy),
            VhStatus::Ok
        );
        assert!(!copy.is_null());
        vh_config_free(copy);
        vh_config_free(cfg);
    }
}

#[test]
fn bad_input_reports_status() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(
            vh_config_from_json(c("{\"H\": 1}").as_ptr(), &mut out),
            VhStatus::InvalidConfig
        );
        assert!(out.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(
            vh_config_from_json(ptr::null(), &mut out),
            VhStatus::NullPointer
        );
        let bytes = [0xffu8, 0];
        assert_eq!(
            vh_config_from_json(bytes.as_ptr().cast(), &mut out),
            VhStatus::InvalidUtf8
        );

        let mut cov = VhCoverage::default();
        assert_eq!(
            vh_coverage_simulate(ptr::null(), 0.0, VhPolicy::Comp3SameTier, 1000, 1, &mut cov),
            VhStatus::NullPointer
        );
        let cfg = vh_config_default();
        assert_eq!(
            vh_coverage_simulate(cfg, f64::NAN, VhPolicy::Comp3SameTier, 1000, 1, &mut cov),
            VhStatus::InvalidArgument
        );
        assert_eq!(
            vh_coverage_simulate(cfg, 0.0, VhPolicy::Comp3SameTier, 1, 1, &mut cov),
            VhStatus::Computation
        );
        assert_eq!(
            vh_association_mc(cfg, 1000, 1, ptr::null_mut()),
            VhStatus::NullPointer
        );
        vh_config_free(cfg);
        vh_config_free(ptr::null_mut());
        vh_string_free(ptr::null_mut());
    }
}

#[test]
fn computations_match_core() {
    unsafe {
        let cfg = vh_config_default();
        let mut a = VhCoverage::default();
        let mut b = VhCoverage::default();
        assert_eq!(
            vh_coverage_simulate(cfg, -4.0, VhPolicy::StrongestThree, 4000, 9, &mut a),
            VhStatus::Ok
        );
        assert_eq!(
            vh_coverage_simulate(cfg, -4.0, VhPolicy::StrongestThree, 4000, 9, &mut b),
            VhStatus::Ok
        );
        assert_eq!(a.p_total.to_bits(), b.p_total.to_bits());
        assert_eq!(a.trials, 4000);
        assert!((0.0..=1.0).contains(&a.p_total));

        let mut assoc = VhAssociation::default();
        assert_eq!(vh_association_mc(cfg, 5000, 9, &mut assoc), VhStatus::Ok);
        assert!((assoc.p_top3_abs + assoc.p_top3_tbs + assoc.p_mixed - 1.0).abs() < 1e-12);

        let opts = VhAnalyticOptions {
            moment_trials: 20_000,
            assoc_trials: 5_000,
            triples: 2_000,
        };
        let mut an = VhCoverage::default();
        assert_eq!(
            vh_coverage_analytic(cfg, -4.0, 3, &opts, &mut an),
            VhStatus::Ok,
            "{}",
            last_error()
        );
        assert!(an.p_total > 0.0 && an.p_total <= 1.0);
        let mix = an.p_assoc_abs * an.p_abs_cond + (1.0 - an.p_assoc_abs) * an.p_tbs_cond;
        assert!((mix - an.p_total).abs() < 1e-9);
        vh_config_free(cfg);
    }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(vh_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/vhetnet.h");
    let src = format!("#include \"{header}\"\nint main(void) {{ VhConfig *c = vh_config_default(); vh_config_free(c); return VH_STATUS_OK; }}\n");
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("probe.c");
    std::fs::write(&file, src).unwrap();
    let status = match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(&file)
        .status()
    {
        Ok(s) => s,
        Err(_) => return eprintln!("no C compiler on PATH, skipping"),
    };
    assert!(status.success());
}
