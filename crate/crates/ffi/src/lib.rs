//! C interface to `tailenv`.
//!
//! Functions return a [`TailenvStatus`]; on anything other than
//! `TAILENV_STATUS_OK` the message is available from
//! [`tailenv_last_error`] on the same thread. Functions are opaque handles
//! created by the `tailenv_phi_*` constructors and released with
//! [`tailenv_phi_free`]. Output arrays are caller-allocated with the same
//! length as the abscissa array; grid points an envelope does not cover are
//! written as NaN.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tailenv::bi_lower::{closure_lower_envelope, richter_sandwich, ClosureOptions};
use tailenv::saddle::{k_epsilon, m_surrogate_from_upper};
use tailenv::uni_lower::{unilateral_lower_envelope, UniOptions};
use tailenv::funcore::conjugate_extended;
use tailenv::{chernoff_upper, Domain, Error, PhiFunction, TailEnvelope};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailenvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfDomain = 3,
    Divergent = 4,
    NotConverged = 5,
    Unbounded = 6,
    CertificationFailed = 7,
    Internal = 99,
}

/// Opaque function handle.
pub struct TailenvPhi {
    inner: PhiFunction,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> TailenvStatus {
    match e {
        Error::OutOfDomain { .. } | Error::EmptyDomain { .. } => TailenvStatus::OutOfDomain,
        Error::Divergent(_) => TailenvStatus::Divergent,
        Error::NotConverged(_) => TailenvStatus::NotConverged,
        Error::UnboundedObjective { .. } => TailenvStatus::Unbounded,
        Error::NotInClassW(_)
        | Error::AbsorptionFailed { .. }
        | Error::GeometryInvalid(_)
        | Error::RegularityFailed(_)
        | Error::NonUniqueArgmax { .. }
        | Error::NonInvertible(_)
        | Error::NonPositiveEnvelope { .. } => TailenvStatus::CertificationFailed,
        Error::InvalidGrid(_)
        | Error::InvalidArgument(_)
        | Error::Csv { .. }
        | Error::NegativeInput { .. }
        | Error::Io(_) => TailenvStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and converting panics.
fn guard<F: FnOnce() -> Result<(), Error>>(f: F) -> TailenvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            TailenvStatus::Ok
        }
        Ok(Err(e)) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            TailenvStatus::Internal
        }
    }
}

fn null(what: &str) -> TailenvStatus {
    set_error(format!("{what} is null"));
    TailenvStatus::NullPointer
}

unsafe fn slice<'a>(p: *const f64, n: usize) -> Option<&'a [f64]> {
    if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, n))
    }
}

unsafe fn slice_mut<'a>(p: *mut f64, n: usize) -> Option<&'a mut [f64]> {
    if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts_mut(p, n))
    }
}

fn domain(lower: f64, upper: f64) -> Result<Domain, Error> {
    if upper.is_infinite() {
        Domain::from(lower)
    } else {
        Domain::new(lower, upper)
    }
}

unsafe fn emit(phi: PhiFunction, out: *mut *mut TailenvPhi) {
    *out = Box::into_raw(Box::new(TailenvPhi { inner: phi }));
}

fn scatter(env: &TailEnvelope, xs: &[f64], out: &mut [f64]) {
    for (x, o) in xs.iter().zip(out.iter_mut()) {
        *o = env.at(*x).map_or(f64::NAN, |p| p.value);
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tailenv_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `scale·λ²/2` on `[lambda_min, lambda_max)`; pass `INFINITY` for no bound.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tailenv_phi_quadratic(
    scale: f64,
    lambda_min: f64,
    lambda_max: f64,
    out: *mut *mut TailenvPhi,
) -> TailenvStatus {
    if out.is_null() {
        return null("out");
    }
    guard(|| {
        let f = PhiFunction::scaled_quadratic(scale, domain(lambda_min, lambda_max)?)?;
        emit(f, out);
        Ok(())
    })
}

/// `λ^p/p · ln(e + λ)^r`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tailenv_phi_power_log(
    p: f64,
    r: f64,
    lambda_min: f64,
    lambda_max: f64,
    out: *mut *mut TailenvPhi,
) -> TailenvStatus {
    if out.is_null() {
        return null("out");
    }
    guard(|| {
        let f = PhiFunction::power_log(p, r, domain(lambda_min, lambda_max)?)?;
        emit(f, out);
        Ok(())
    })
}

/// Expression in the variable `lambda`, e.g. `"lambda^2/2"`.
///
/// # Safety
/// `expr` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tailenv_phi_expression(
    expr: *const c_char,
    lambda_min: f64,
    lambda_max: f64,
    out: *mut *mut TailenvPhi,
) -> TailenvStatus {
    if expr.is_null() {
        return null("expr");
    }
    if out.is_null() {
        return null("out");
    }
    guard(|| {
        let src = CStr::from_ptr(expr)
            .to_str()
            .map_err(|_| Error::InvalidArgument("expression is not UTF-8".into()))?;
        let f = PhiFunction::expression(src, "lambda", domain(lambda_min, lambda_max)?)?;
        emit(f, out);
        Ok(())
    })
}

/// Piecewise-linear function through `n` knots.
///
/// # Safety
/// `lambda` and `value` must point to `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tailenv_phi_grid(
    lambda: *const f64,
    value: *const f64,
    n: usize,
    out: *mut *mut TailenvPhi,
) -> TailenvStatus {
    let (Some(l), Some(v)) = (slice(lambda, n), slice(value, n)) else {
        return null("knot array");
    };
    if out.is_null() {
        return null("out");
    }
    guard(|| {
        let f = PhiFunction::grid(tailenv::funcore::Grid::new(l.to_vec(), v.to_vec())?);
        emit(f, out);
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `phi` must come from a `tailenv_phi_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn tailenv_phi_free(phi: *mut TailenvPhi) {
    if !phi.is_null() {
        drop(Box::from_raw(phi));
    }
}

/// Evaluates the function.
///
/// # Safety
/// `phi` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tailenv_phi_eval(phi: *const TailenvPhi, lambda: f64, out: *mut f64) -> TailenvStatus {
    if phi.is_null() || out.is_null() {
        return null("argument");
    }
    guard(|| {
        *out = (*phi).inner.eval(lambda)?;
        Ok(())
    })
}

/// `φ*(x)` at each abscissa; `INFINITY` where the supremum is unbounded.
///
/// # Safety
/// `x` and `out` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn tailenv_conjugate(
    phi: *const TailenvPhi,
    x: *const f64,
    n: usize,
    out: *mut f64,
) -> TailenvStatus {
    let (Some(xs), Some(o)) = (slice(x, n), slice_mut(out, n)) else {
        return null("array");
    };
    if phi.is_null() {
        return null("phi");
    }
    guard(|| {
        let r = conjugate_extended(&(*phi).inner, xs)?;
        o.copy_from_slice(&r.values);
        Ok(())
    })
}

/// Chernoff envelope `exp(−max(φ*(x), 0))`.
///
/// # Safety
/// `x` and `out` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn tailenv_chernoff_upper(
    phi: *const TailenvPhi,
    x: *const f64,
    n: usize,
    out: *mut f64,
) -> TailenvStatus {
    let (Some(xs), Some(o)) = (slice(x, n), slice_mut(out, n)) else {
        return null("array");
    };
    if phi.is_null() {
        return null("phi");
    }
    guard(|| {
        let env = chernoff_upper(&(*phi).inner, xs)?;
        scatter(&env, xs, o);
        Ok(())
    })
}

/// `K(ε) = ∫₀^∞ exp(−ε·ζ(x)) dx` for `ζ` given by the handle;
/// `TAILENV_STATUS_DIVERGENT` when infinite.
///
/// # Safety
/// `zeta` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tailenv_k_epsilon(zeta: *const TailenvPhi, epsilon: f64, out: *mut f64) -> TailenvStatus {
    if zeta.is_null() || out.is_null() {
        return null("argument");
    }
    guard(|| {
        *out = k_epsilon(&(*zeta).inner, epsilon)?.value;
        Ok(())
    })
}

/// Unilateral lower envelope from the upper MGF exponent `phi`.
/// `m_surrogate ≤ 0` selects the default bound derived from `phi`.
///
/// # Safety
/// `x` and `out` must point to `n` doubles; `dilation` may be null.
#[no_mangle]
pub unsafe extern "C" fn tailenv_unilateral_lower(
    phi: *const TailenvPhi,
    epsilon: f64,
    m_surrogate: f64,
    x: *const f64,
    n: usize,
    out: *mut f64,
    dilation: *mut f64,
) -> TailenvStatus {
    let (Some(xs), Some(o)) = (slice(x, n), slice_mut(out, n)) else {
        return null("array");
    };
    if phi.is_null() {
        return null("phi");
    }
    guard(|| {
        let f = &(*phi).inner;
        let m = if m_surrogate > 0.0 { m_surrogate } else { m_surrogate_from_upper(f, epsilon)? };
        let (env, cert) = unilateral_lower_envelope(f, epsilon, m, xs, &UniOptions::default())?;
        scatter(&env, xs, o);
        if !dilation.is_null() {
            *dilation = cert.dilation;
        }
        Ok(())
    })
}

/// Bilateral closure envelope from `phi1 ≤ ln MGF ≤ phi2`.
///
/// # Safety
/// `x` and `out` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn tailenv_closure_lower(
    phi1: *const TailenvPhi,
    phi2: *const TailenvPhi,
    x: *const f64,
    n: usize,
    out: *mut f64,
) -> TailenvStatus {
    let (Some(xs), Some(o)) = (slice(x, n), slice_mut(out, n)) else {
        return null("array");
    };
    if phi1.is_null() || phi2.is_null() {
        return null("phi");
    }
    guard(|| {
        let (env, _) = closure_lower_envelope(&(*phi1).inner, &(*phi2).inner, xs, &ClosureOptions::default())?;
        scatter(&env, xs, o);
        Ok(())
    })
}

/// `exp(−φ*(x) − c₂x)` for an exact MGF exponent.
///
/// # Safety
/// `x` and `out` must point to `n` doubles; `c2` may be null.
#[no_mangle]
pub unsafe extern "C" fn tailenv_richter_lower(
    phi: *const TailenvPhi,
    x: *const f64,
    n: usize,
    out: *mut f64,
    c2: *mut f64,
) -> TailenvStatus {
    let (Some(xs), Some(o)) = (slice(x, n), slice_mut(out, n)) else {
        return null("array");
    };
    if phi.is_null() {
        return null("phi");
    }
    guard(|| {
        let r = richter_sandwich(&(*phi).inner, xs)?;
        scatter(&r.lower, xs, o);
        if !c2.is_null() {
            *c2 = r.c2;
        }
        Ok(())
    })
}
