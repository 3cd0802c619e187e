//! Unilateral inversion: from a lower MGF exponent `φ` to a lower tail
//! envelope `exp(−φ*(a·x))` through the auxiliary function `φ₁` and the
//! class-W dilation constant.

use rayon::prelude::*;
use serde::Serialize;

use crate::envelope::{EnvelopePoint, Side, TailEnvelope};
use crate::error::{Error, Result};
use crate::funcore::{check_abscissae, conjugate_at, geomspace, linspace, PhiFunction};
use crate::logspace::ln_expm1;
use crate::tolerance::Tolerances;

/// `ln((e^{φ(λ)} − 1)/λ)`, evaluated without overflow.
pub fn phi1(phi: &PhiFunction, lambda: f64) -> Result<f64> {
    let v = phi.eval(lambda)?;
    if lambda <= 0.0 {
        return Err(Error::InvalidArgument(format!("phi1 needs lambda > 0, got {lambda}")));
    }
    Ok(ln_expm1(v) - lambda.ln())
}

/// `φ₁` as a function on the domain of `φ`.
pub fn phi1_function(phi: &PhiFunction) -> PhiFunction {
    let inner = phi.clone();
    PhiFunction::custom(
        &format!("phi1({})", phi.name()),
        move |l| phi1(&inner, l).unwrap_or(f64::NAN),
        phi.domain(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WCertificate {
    pub certified: bool,
    /// Largest feasible grid value; zero when not certified.
    pub c1: f64,
    pub lambda_range: (f64, f64),
    /// `min(φ₁(λ) − φ(c1·λ))` over the verification grid.
    pub margin: f64,
    pub grid_points: usize,
    pub reason: String,
}

const VERIFY_POINTS: usize = 400;

/// Points on `[lo, hi]` used to verify an inequality in λ: geometric on an
/// unbounded domain, clustered at the open end of a bounded one.
fn verification_grid(phi: &PhiFunction, lo: f64, hi: f64) -> Vec<f64> {
    let d = phi.domain();
    if d.is_bounded() && !d.upper_closed && hi >= d.upper {
        let b = d.upper;
        (0..VERIFY_POINTS)
            .map(|i| b - (b - lo) * 1e-8f64.powf(i as f64 / (VERIFY_POINTS - 1) as f64))
            .collect()
    } else if lo > 0.0 {
        geomspace(lo, hi, VERIFY_POINTS)
    } else {
        linspace(lo, hi, VERIFY_POINTS)
    }
}

/// Smallest `λ` in the domain with `φ(λ) ≥ 1` (bisection, `φ` nondecreasing).
pub fn unit_level(phi: &PhiFunction) -> Result<f64> {
    let d = phi.domain();
    if phi.eval(d.lower)? >= 1.0 {
        return Ok(d.lower);
    }
    let mut hi = if d.is_bounded() { d.last_point() } else { d.lower.max(1.0) };
    while phi.eval(hi)? < 1.0 {
        if d.is_bounded() {
            return Err(Error::NotInClassW(format!(
                "{} stays below 1 on its domain",
                phi.name()
            )));
        }
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NotInClassW(format!("{} stays below 1", phi.name())));
        }
    }
    let mut lo = d.lower;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi.eval(mid)? >= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn default_hi(phi: &PhiFunction, lo: f64) -> f64 {
    let d = phi.domain();
    if d.is_bounded() {
        d.upper
    } else {
        (2f64.powi(15)).max(64.0 * lo)
    }
}

/// Largest index in `0..n` for which `feasible` holds, assuming feasibility
/// is monotone (true up to some index, false afterwards) when `monotone`.
fn largest_feasible<F: Fn(usize) -> bool + Sync>(n: usize, monotone: bool, feasible: F) -> Option<usize> {
    if n == 0 {
        return None;
    }
    if !monotone {
        return (0..n).into_par_iter().filter(|i| feasible(*i)).max();
    }
    if !feasible(0) {
        return None;
    }
    let (mut good, mut bad) = (0usize, n);
    while bad - good > 1 {
        let mid = (good + bad) / 2;
        if feasible(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Some(good)
}

fn is_nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

/// Largest `c1` in `c_grid` (ascending) with `φ₁(λ) ≥ φ(c1·λ)` on a
/// verification grid over `lambda_range`.
///
/// The range defaults to `[λ*, λ_hi]` where `λ*` is the smallest point with
/// `φ(λ*) ≥ 1`.
pub fn certify_class_w(
    phi: &PhiFunction,
    lambda_range: Option<(f64, f64)>,
    c_grid: Option<&[f64]>,
) -> Result<WCertificate> {
    let (lo, hi) = match lambda_range {
        Some(r) => r,
        None => {
            let lo = unit_level(phi)?;
            (lo, default_hi(phi, lo))
        }
    };
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("bad lambda range [{lo}, {hi}]")));
    }
    let default_c: Vec<f64>;
    let c_grid = match c_grid {
        Some(c) => c,
        None => {
            default_c = (1..=1000).map(|k| k as f64 / 1000.0).collect();
            &default_c
        }
    };
    let grid = verification_grid(phi, lo, hi);
    let p1 = grid.iter().map(|l| phi1(phi, *l)).collect::<Result<Vec<_>>>()?;
    let values = grid.iter().map(|l| phi.eval(*l)).collect::<Result<Vec<_>>>()?;
    let margin_at = |c: f64| -> Option<f64> {
        let mut m = f64::INFINITY;
        for (l, p) in grid.iter().zip(&p1) {
            let v = phi.eval(c * l).ok()?;
            m = m.min(p - v);
        }
        Some(m)
    };
    let feasible = |i: usize| margin_at(c_grid[i]).is_some_and(|m| m >= 0.0);
    let monotone = is_nondecreasing(&values) && is_nondecreasing(c_grid);
    // Dilations that push c·λ below the domain are infeasible outright.
    let skip = c_grid
        .iter()
        .position(|c| phi.domain().contains(c * lo))
        .unwrap_or(c_grid.len());
    let best = largest_feasible(c_grid.len() - skip, monotone, |i| feasible(i + skip))
        .map(|i| i + skip);
    Ok(match best {
        Some(i) => WCertificate {
            certified: true,
            c1: c_grid[i],
            lambda_range: (lo, hi),
            margin: margin_at(c_grid[i]).unwrap_or(f64::NAN),
            grid_points: grid.len(),
            reason: "phi1(lambda) >= phi(c1 lambda) on the verification grid".into(),
        },
        None => {
            let c0 = c_grid.first().copied().unwrap_or(f64::NAN);
            let worst = p1.iter().cloned().fold(f64::INFINITY, f64::min);
            WCertificate {
                certified: false,
                c1: 0.0,
                lambda_range: (lo, hi),
                margin: margin_at(c0).unwrap_or(f64::NEG_INFINITY),
                grid_points: grid.len(),
                reason: format!("no c on the grid is feasible; min phi1 = {worst}"),
            }
        }
    })
}

#[derive(Debug, Clone, Default)]
pub struct UniOptions {
    /// Verification range for the class-W certificate.
    pub w_range: Option<(f64, f64)>,
    pub c_grid: Option<Vec<f64>>,
    /// `Some(false)` marks an input without a finite MGF near zero; the
    /// resulting bound then holds trivially.
    pub cramer: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerEnvelopeCertificate {
    pub epsilon: f64,
    pub m_bound: f64,
    pub c1: f64,
    pub c2: f64,
    /// `a = 1/(c2·(1−ε))`.
    pub dilation: f64,
    pub lambda1: f64,
    pub x_valid_from: f64,
    /// The unknown tail exponent is assumed equal to its biconjugate; this
    /// cannot be checked from the MGF bound alone.
    pub super_convexity_assumed: bool,
    pub w: WCertificate,
    pub annotations: Vec<String>,
}

fn lambda1_candidates(phi: &PhiFunction, lo: f64) -> Vec<f64> {
    let d = phi.domain();
    if d.is_bounded() {
        (0..=14).map(|k| d.upper - (d.upper - lo) * 2f64.powi(-k)).collect()
    } else {
        (1..=14).map(|k| 2f64.powi(k)).filter(|l| *l >= lo).collect()
    }
}

/// Runs the conjugate chain and emits `exp(−φ*(a·x))` for grid points
/// `x ≥ x_valid_from`.
pub fn unilateral_lower_envelope(
    phi: &PhiFunction,
    eps: f64,
    m_surrogate: f64,
    x_grid: &[f64],
    opts: &UniOptions,
) -> Result<(TailEnvelope, LowerEnvelopeCertificate)> {
    check_abscissae(x_grid)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} is not in (0, 1)")));
    }
    if !(m_surrogate.is_finite() && m_surrogate > 0.0) {
        return Err(Error::Divergent(format!("M surrogate {m_surrogate} is not finite and positive")));
    }
    let w = certify_class_w(phi, opts.w_range, opts.c_grid.as_deref())?;
    if !w.certified {
        return Err(Error::NotInClassW(w.reason.clone()));
    }
    let c1 = w.c1;
    let ln_m = m_surrogate.ln();
    let (w_lo, w_hi) = w.lambda_range;

    let c2_grid: Vec<f64> = (1..=200).map(|j| c1 * j as f64 / 200.0).collect();
    let mut found = None;
    for l1 in lambda1_candidates(phi, w_lo) {
        if l1 >= w_hi {
            break;
        }
        let grid = verification_grid(phi, l1, w_hi);
        let lhs = grid
            .iter()
            .map(|l| phi.eval(c1 * l).map(|v| v - ln_m))
            .collect::<Result<Vec<_>>>()?;
        let feasible = |j: usize| {
            grid.iter()
                .zip(&lhs)
                .all(|(l, left)| phi.eval(c2_grid[j] * l).is_ok_and(|v| *left >= v))
        };
        let skip = c2_grid
            .iter()
            .position(|c| phi.domain().contains(c * l1))
            .unwrap_or(c2_grid.len());
        if let Some(j) = largest_feasible(c2_grid.len() - skip, true, |j| feasible(j + skip)) {
            found = Some((l1, c2_grid[j + skip]));
            break;
        }
    }
    let (lambda1, c2) = found.ok_or(Error::AbsorptionFailed { ln_m })?;
    let a = 1.0 / (c2 * (1.0 - eps));
    let mu1 = lambda1 / (1.0 - eps);

    let tol = Tolerances::default();
    let conj: Vec<f64> = x_grid
        .par_iter()
        .map(|x| match conjugate_at(phi, a * x, &tol) {
            Ok(p) => Ok(p.value),
            Err(Error::UnboundedObjective { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut start = x_grid.len();
    for i in (0..x_grid.len()).rev() {
        if x_grid[i] >= 1.0 && conj[i] >= mu1 * x_grid[i] {
            start = i;
        } else {
            break;
        }
    }
    let points: Vec<EnvelopePoint> = (start..x_grid.len())
        .map(|i| EnvelopePoint::from_ln(x_grid[i], -conj[i]))
        .collect();
    let x_valid_from = x_grid.get(start).copied().unwrap_or(f64::INFINITY).max(1.0);

    let mut annotations = Vec::new();
    if opts.cramer == Some(false) {
        annotations.push("no_cramer: the MGF is infinite, so the bound holds trivially".into());
    }
    let env = TailEnvelope::new(Side::Lower, "unilateral", points)
        .with_constant("c1", c1)
        .with_constant("c2", c2)
        .with_constant("dilation", a)
        .with_constant("lambda1", lambda1)
        .with_constant("epsilon", eps)
        .monotone();
    let cert = LowerEnvelopeCertificate {
        epsilon: eps,
        m_bound: m_surrogate,
        c1,
        c2,
        dilation: a,
        lambda1,
        x_valid_from,
        super_convexity_assumed: true,
        w,
        annotations,
    };
    Ok((env, cert))
}
