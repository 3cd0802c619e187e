use std::ffi::CString;
use std::ptr;

use tailenv_ffi::*;

fn quadratic() -> *mut TailenvPhi {
    let mut h = ptr::null_mut();
    let s = unsafe { tailenv_phi_quadratic(1.0, 0.0, f64::INFINITY, &mut h) };
    assert_eq!(s, TailenvStatus::Ok);
    assert!(!h.is_null());
    h
}

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { tailenv_last_error(buf.as_mut_ptr() as *mut _, buf.len()) };
    buf.truncate(n.min(255));
    String::from_utf8(buf).unwrap()
}

#[test]
fn eval_and_conjugate_of_quadratic() {
    let h = quadratic();
    let mut v = 0.0;
    assert_eq!(unsafe { tailenv_phi_eval(h, 3.0, &mut v) }, TailenvStatus::Ok);
    assert_eq!(v, 4.5);
    let xs = [1.0, 2.0, 5.0];
    let mut out = [0.0; 3];
    assert_eq!(unsafe { tailenv_conjugate(h, xs.as_ptr(), 3, out.as_mut_ptr()) }, TailenvStatus::Ok);
    for (x, c) in xs.iter().zip(out) {
        assert!((c - x * x / 2.0).abs() < 1e-9);
    }
    unsafe { tailenv_phi_free(h) };
}

#[test]
fn chernoff_value_at_two() {
    let h = quadratic();
    let xs = [2.0];
    let mut out = [0.0];
    assert_eq!(unsafe { tailenv_chernoff_upper(h, xs.as_ptr(), 1, out.as_mut_ptr()) }, TailenvStatus::Ok);
    assert!((out[0] - (-2f64).exp()).abs() < 1e-12);
    unsafe { tailenv_phi_free(h) };
}

#[test]
fn out_of_domain_sets_status_and_message() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { tailenv_phi_quadratic(1.0, 1.0, f64::INFINITY, &mut h) }, TailenvStatus::Ok);
    let mut v = 0.0;
    assert_eq!(unsafe { tailenv_phi_eval(h, 0.5, &mut v) }, TailenvStatus::OutOfDomain);
    assert!(last_error().contains("0.5"), "{}", last_error());
    unsafe { tailenv_phi_free(h) };
}

#[test]
fn null_pointers_are_rejected() {
    let mut v = 0.0;
    assert_eq!(unsafe { tailenv_phi_eval(ptr::null(), 1.0, &mut v) }, TailenvStatus::NullPointer);
    unsafe { tailenv_phi_free(ptr::null_mut()) };
}

#[test]
fn k_diverges_for_logarithmic_exponent() {
    let expr = CString::new("ln(1 + lambda)").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { tailenv_phi_expression(expr.as_ptr(), 0.0, f64::INFINITY, &mut h) }, TailenvStatus::Ok);
    let mut k = 0.0;
    assert_eq!(unsafe { tailenv_k_epsilon(h, 0.5, &mut k) }, TailenvStatus::Divergent);
    unsafe { tailenv_phi_free(h) };
}

#[test]
fn lower_envelopes_sit_below_chernoff() {
    let h = quadratic();
    let xs: Vec<f64> = (2..=8).map(f64::from).collect();
    let n = xs.len();
    let (mut up, mut uni, mut clo, mut ric) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut a, mut c2) = (0.0, 0.0);
    unsafe {
        assert_eq!(tailenv_chernoff_upper(h, xs.as_ptr(), n, up.as_mut_ptr()), TailenvStatus::Ok);
        assert_eq!(tailenv_unilateral_lower(h, 0.2, 0.0, xs.as_ptr(), n, uni.as_mut_ptr(), &mut a), TailenvStatus::Ok);
        assert_eq!(tailenv_closure_lower(h, h, xs.as_ptr(), n, clo.as_mut_ptr()), TailenvStatus::Ok);
        assert_eq!(tailenv_richter_lower(h, xs.as_ptr(), n, ric.as_mut_ptr(), &mut c2), TailenvStatus::Ok);
        tailenv_phi_free(h);
    }
    assert!((a - 4.887).abs() < 1e-3);
    assert!(c2 >= 0.892);
    for i in 0..n {
        for low in [uni[i], clo[i], ric[i]] {
            assert!(!low.is_nan() && low <= up[i]);
        }
    }
}

#[test]
fn grid_handle_round_trip() {
    let l = [0.0, 1.0, 2.0];
    let v = [0.0, 0.5, 2.0];
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { tailenv_phi_grid(l.as_ptr(), v.as_ptr(), 3, &mut h) }, TailenvStatus::Ok);
    let mut out = 0.0;
    assert_eq!(unsafe { tailenv_phi_eval(h, 1.5, &mut out) }, TailenvStatus::Ok);
    assert_eq!(out, 1.25);
    unsafe { tailenv_phi_free(h) };
    let bad = [1.0, 0.0];
    assert_eq!(
        unsafe { tailenv_phi_grid(bad.as_ptr(), v.as_ptr(), 2, &mut h) },
        TailenvStatus::InvalidArgument
    );
}
