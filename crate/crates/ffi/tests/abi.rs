use std::ffi::{CStr, CString};
use std::ptr;

use percspeed_ffi::*;

fn parse(spec: &str) -> *mut PsLaw {
    let c = CString::new(spec).unwrap();
    let mut law = ptr::null_mut();
    assert_eq!(unsafe { ps_law_parse(c.as_ptr(), &mut law) }, PsStatus::Ok);
    assert!(!law.is_null());
    law
}

fn last_error() -> String {
    let p = ps_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

#[test]
fn binary_model_values() {
    let law = parse("pmf:0,0,1");
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(ps_model_new(law, 0.75, 0.0, &mut model), PsStatus::Ok);
        ps_law_free(law);
        let mut x = 0.0;
        assert_eq!(ps_model_rho(model, &mut x), PsStatus::Ok);
        assert!((x - 1.0 / 9.0).abs() < 1e-12);
        assert_eq!(ps_model_lambda(model, &mut x), PsStatus::Ok);
        assert!((x - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(ps_model_m_hat(model, &mut x), PsStatus::Ok);
        assert!((x - 0.5).abs() < 1e-12);
        assert_eq!(ps_model_cluster_speed(model, &mut x), PsStatus::Ok);
        assert!((x - 2.0 / 15.0).abs() < 1e-12);
        assert_eq!(ps_model_backbone_speed(model, &mut x), PsStatus::Ok);
        assert!((x - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(ps_model_rho_derivative(model, &mut x), PsStatus::Ok);
        assert!((x + 32.0 / 27.0).abs() < 1e-10);
        assert_eq!(ps_model_mean_excursions(model, 1, &mut x), PsStatus::Ok);
        assert!((x - 0.125).abs() < 1e-12);
        assert_eq!(ps_model_bush_mean_size(model, &mut x), PsStatus::Ok);
        assert!((x - 2.0).abs() < 1e-12);
        assert_eq!(ps_model_backbone_pmf(model, 1, &mut x), PsStatus::Ok);
        assert!((x - 0.5).abs() < 1e-12);
        assert_eq!(ps_model_thinned_pmf(model, 2, &mut x), PsStatus::Ok);
        assert!((x - 0.5625).abs() < 1e-12);
        assert_eq!(ps_model_bush_pmf(model, 0, &mut x), PsStatus::Ok);
        assert!(x > 0.0 && x < 1.0);

        let mut est = PsWalkEstimate::default();
        assert_eq!(ps_estimate_speed(model, 2_000, 8, 3, &mut est), PsStatus::Ok);
        let mut again = PsWalkEstimate::default();
        assert_eq!(ps_estimate_speed(model, 2_000, 8, 3, &mut again), PsStatus::Ok);
        assert_eq!(est.speed_hat, again.speed_hat);
        assert_eq!((est.replicas, est.horizon, est.seed), (8, 2_000, 3));
        ps_model_free(model);
    }
    assert!(ps_last_error_message().is_null());
}

#[test]
fn law_functions() {
    let law = parse("poisson:2");
    unsafe {
        let mut x = 0.0;
        assert_eq!(ps_law_mean(law, &mut x), PsStatus::Ok);
        assert_eq!(x, 2.0);
        assert_eq!(ps_law_pgf_derivative(law, 0.9, 1, &mut x), PsStatus::Ok);
        assert!((x - 1.6374615061559636).abs() < 1e-14);
        let mut ok = -1;
        assert_eq!(ps_check_condition(law, 1_000, &mut ok, &mut x), PsStatus::Ok);
        assert_eq!(ok, 1);
        assert_eq!(ps_eq1_speed(law, &mut x), PsStatus::Undefined);
        ps_law_free(law);
    }
    let mut v = 0.0;
    assert_eq!(unsafe { ps_pipes_speed(1.0, &mut v) }, PsStatus::Ok);
    assert_eq!(v, 0.0);
    let mut est = PsWalkEstimate::default();
    assert_eq!(unsafe { ps_simulate_pipes(0.75, 2_000, 4, 1, &mut est) }, PsStatus::Ok);
    assert!(est.speed_hat > 0.0);
}

#[test]
fn error_codes() {
    let bad = CString::new("bogus:1").unwrap();
    let mut law = ptr::null_mut();
    assert_eq!(unsafe { ps_law_parse(bad.as_ptr(), &mut law) }, PsStatus::Parse);
    assert!(law.is_null());
    assert!(last_error().contains("bogus"));

    assert_eq!(unsafe { ps_law_parse(ptr::null(), &mut law) }, PsStatus::NullPointer);

    let binary = parse("pmf:0,0,1");
    let geo = parse("geometric:0.5");
    let one = parse("pmf:0,1");
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(ps_model_new(binary, 0.4, 0.0, &mut model), PsStatus::Subcritical);
        assert_eq!(ps_model_new(geo, 0.9, 0.0, &mut model), PsStatus::Subcritical);
        assert_eq!(ps_model_new(one, 0.9, 0.0, &mut model), PsStatus::Degenerate);
        assert_eq!(ps_model_new(binary, 1.5, 0.0, &mut model), PsStatus::InvalidArgument);
        assert!(model.is_null());
        assert_eq!(ps_model_new(binary, 1.0, 0.0, &mut model), PsStatus::Ok);
        let mut x = 0.0;
        assert_eq!(ps_model_bush_mean_size(model, &mut x), PsStatus::Ok);
        assert_eq!(ps_model_bush_pmf(model, 0, &mut x), PsStatus::Undefined);
        assert_eq!(ps_model_rho(ptr::null(), &mut x), PsStatus::NullPointer);
        assert_eq!(ps_model_rho(model, ptr::null_mut()), PsStatus::NullPointer);
        let mut est = PsWalkEstimate::default();
        assert_eq!(ps_estimate_speed(model, 10, 8, 1, &mut est), PsStatus::InvalidArgument);
        ps_model_free(model);
        ps_model_free(ptr::null_mut());
        ps_law_free(binary);
        ps_law_free(geo);
        ps_law_free(one);
        ps_law_free(ptr::null_mut());
    }
}

#[test]
fn header_is_generated() {
    let header = include_str!("../include/percspeed.h");
    for needle in [
        "typedef struct PsLaw PsLaw;",
        "typedef struct PsModel PsModel;",
        "PS_STATUS_OK = 0",
        "PS_STATUS_PANIC = 8",
        "} PsWalkEstimate;",
        "PsStatus ps_law_parse(const char *spec, PsLaw **out);",
        "PsStatus ps_model_new(const PsLaw *law, double p, double tol, PsModel **out);",
        "const char *ps_last_error_message(void);",
        "PsStatus ps_simulate_pipes(",
    ] {
        assert!(header.contains(needle), "missing `{needle}`");
    }
}
