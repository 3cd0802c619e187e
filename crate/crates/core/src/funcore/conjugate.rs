use serde::Serialize;

use super::phi::{Domain, Form, PhiFunction};
use super::search::{golden_max, scan_points};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Value and maximizer of `sup_λ (λx − f(λ))` at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupPoint {
    pub value: f64,
    pub argmax: f64,
}

/// Tabulated conjugate. A value of `+inf` marks an unbounded objective
/// (serialized as `null`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugateResult {
    pub x_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub argmax: Vec<f64>,
    pub source_domain: Domain,
}

impl ConjugateResult {
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn check_abscissae(x_grid: &[f64]) -> Result<()> {
    if x_grid.is_empty() {
        return Err(Error::InvalidGrid("empty x grid".into()));
    }
    for (i, x) in x_grid.iter().enumerate() {
        if !x.is_finite() || *x < 0.0 {
            return Err(Error::InvalidGrid(format!("abscissa {x} must be finite and >= 0")));
        }
        if i > 0 && *x <= x_grid[i - 1] {
            return Err(Error::InvalidGrid(format!(
                "abscissae not strictly increasing at index {i}"
            )));
        }
    }
    Ok(())
}

/// `f*(x)` at a single point; unbounded objectives are an error.
pub fn conjugate_at(f: &PhiFunction, x: f64, tol: &Tolerances) -> Result<SupPoint> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("conjugate at non-finite x = {x}")));
    }
    let domain = f.domain();
    if let Form::Grid(g) = f.form() {
        let mut best = SupPoint { value: f64::NEG_INFINITY, argmax: g.knots()[0] };
        for (l, v) in g.knots().iter().zip(g.values()) {
            let o = l * x - v;
            if o > best.value {
                best = SupPoint { value: o, argmax: *l };
            }
        }
        return Ok(best);
    }

    let objective = |l: f64| {
        let v = f.eval_unchecked(l);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            l * x - v
        }
    };
    let lo = domain.lower;
    let hi = if domain.is_bounded() {
        domain.last_point()
    } else {
        if let Some(s) = f.asymptotic_slope() {
            if x > s {
                let witness = (0..8).map(|k| lo + 2f64.powi(4 * k)).collect();
                return Err(Error::UnboundedObjective { x, witness });
            }
        }
        expand(&objective, lo, x, tol)?
    };

    let n = if f.is_certified_convex() {
        tol.scan_points
    } else {
        tol.scan_points * 8
    };
    let pts = scan_points(lo, hi, n);
    let vals: Vec<f64> = pts.iter().map(|l| objective(*l)).collect();

    let mut candidates: Vec<usize> = if f.is_certified_convex() {
        vec![argmax_index(&vals)]
    } else {
        local_maxima(&vals, 3)
    };
    candidates.sort_unstable();
    candidates.dedup();

    let mut best = SupPoint { value: objective(lo), argmax: lo };
    let end = objective(hi);
    if end > best.value {
        best = SupPoint { value: end, argmax: hi };
    }
    for i in candidates {
        let a = pts[i.saturating_sub(1)];
        let b = pts[(i + 1).min(pts.len() - 1)];
        let (l, v) = golden_max(objective, a, b, tol.search_width);
        if v > best.value {
            best = SupPoint { value: v, argmax: l };
        }
    }
    if !best.value.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "conjugate of {} at x = {x} is not finite",
            f.name()
        )));
    }
    Ok(best)
}

/// Grows the search interval geometrically until the objective turns down.
fn expand<F: Fn(f64) -> f64>(objective: &F, lo: f64, x: f64, tol: &Tolerances) -> Result<f64> {
    let unit = lo.max(1.0);
    let mut history = vec![(lo, objective(lo))];
    for k in 0..64 {
        let l = lo + unit * 2f64.powi(k);
        let v = objective(l);
        let prev = history.last().expect("history is seeded").1;
        history.push((l, v));
        if v < prev - tol.abs * (1.0 + prev.abs()) || v.is_nan() || v == f64::NEG_INFINITY {
            return Ok(l);
        }
    }
    let n = history.len();
    let (l_end, v_end) = history[n - 1];
    let v_back = history[n - 11].1;
    if v_end - v_back > tol.abs * (1.0 + v_end.abs()) {
        let witness = history.iter().rev().take(8).rev().map(|h| h.0).collect();
        return Err(Error::UnboundedObjective { x, witness });
    }
    Ok(l_end)
}

fn argmax_index(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn local_maxima(v: &[f64], keep: usize) -> Vec<usize> {
    let n = v.len();
    let mut idx: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || v[i] >= v[i - 1];
            let right = i == n - 1 || v[i] >= v[i + 1];
            left && right
        })
        .collect();
    idx.sort_by(|a, b| v[*b].partial_cmp(&v[*a]).unwrap_or(std::cmp::Ordering::Equal));
    idx.truncate(keep);
    if idx.is_empty() {
        idx.push(argmax_index(v));
    }
    idx
}

/// Conjugate over a grid of abscissae. Unbounded objectives are an error.
pub fn conjugate(f: &PhiFunction, x_grid: &[f64]) -> Result<ConjugateResult> {
    conjugate_with(f, x_grid, &Tolerances::default(), false)
}

/// Conjugate that records unbounded objectives as `+inf` instead of failing.
pub fn conjugate_extended(f: &PhiFunction, x_grid: &[f64]) -> Result<ConjugateResult> {
    conjugate_with(f, x_grid, &Tolerances::default(), true)
}

pub fn conjugate_with(
    f: &PhiFunction,
    x_grid: &[f64],
    tol: &Tolerances,
    allow_infinite: bool,
) -> Result<ConjugateResult> {
    check_abscissae(x_grid)?;
    let mut values = Vec::with_capacity(x_grid.len());
    let mut argmax = Vec::with_capacity(x_grid.len());
    for x in x_grid {
        match conjugate_at(f, *x, tol) {
            Ok(p) => {
                values.push(p.value);
                argmax.push(p.argmax);
            }
            Err(Error::UnboundedObjective { .. }) if allow_infinite => {
                values.push(f64::INFINITY);
                argmax.push(f64::INFINITY);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ConjugateResult {
        x_grid: x_grid.to_vec(),
        values,
        argmax,
        source_domain: f.domain(),
    })
}

/// `f*` as a function of `x ≥ 0`; `+inf` where the objective is unbounded.
pub fn conjugate_function(f: &PhiFunction) -> PhiFunction {
    let inner = f.clone();
    let tol = Tolerances::default();
    let d = f.clone();
    PhiFunction::custom(
        &format!("conj({})", f.name()),
        move |x| match conjugate_at(&inner, x, &tol) {
            Ok(p) => p.value,
            Err(Error::UnboundedObjective { .. }) => f64::INFINITY,
            Err(_) => f64::NAN,
        },
        Domain::from(0.0).expect("half-line is a valid domain"),
    )
    .with_derivative(move |x| match conjugate_at(&d, x, &tol) {
        Ok(p) => p.argmax,
        Err(_) => f64::NAN,
    })
    .assume_convex()
}

/// `(f*)*` on `lambda_grid`, the closed convex envelope of `f`.
pub fn biconjugate(f: &PhiFunction, lambda_grid: &[f64]) -> Result<ConjugateResult> {
    let g = conjugate_function(f);
    let mut res = conjugate_with(&g, lambda_grid, &Tolerances::default(), false)?;
    res.source_domain = g.domain();
    Ok(res)
}

/// Maximizer of `S(λ, x) = λx − φ2*(x)` over `x ≥ 0`.
///
/// Fails with [`Error::NonUniqueArgmax`] when the maximizing set is wider than
/// one percent of the maximizer's scale.
pub fn saddle_x0(phi2: &PhiFunction, lambda: f64) -> Result<f64> {
    phi2.eval(lambda)?;
    let tol = Tolerances::default();
    let g = conjugate_function(phi2);
    let top = conjugate_at(&g, lambda, &tol)?;
    let s = |x: f64| lambda * x - g.eval_unchecked(x);
    let level = top.value - 1e-9 * (1.0 + top.value.abs());
    let scale = top.argmax.abs().max(1.0);
    let edge = |dir: f64| -> f64 {
        let mut inside = 0.0;
        let mut step = 1e-6 * scale;
        let mut outside = None;
        while step < 1e3 * scale {
            let x = top.argmax + dir * step;
            if x < 0.0 {
                return top.argmax;
            }
            if s(x) >= level {
                inside = step;
                step *= 2.0;
            } else {
                outside = Some(step);
                break;
            }
        }
        let Some(mut out) = outside else {
            return top.argmax + dir * inside;
        };
        for _ in 0..60 {
            let mid = 0.5 * (inside + out);
            if s(top.argmax + dir * mid) >= level {
                inside = mid;
            } else {
                out = mid;
            }
        }
        (top.argmax + dir * inside).max(0.0)
    };
    let lo = edge(-1.0);
    let hi = edge(1.0);
    if hi - lo > 1e-2 * scale {
        return Err(Error::NonUniqueArgmax { lambda, lo, hi });
    }
    Ok(0.5 * (lo + hi))
}

/// `(S(λ, x), ∂S/∂x)` with `S(λ, x) = λx − φ2*(x)`.
///
/// The derivative uses the conjugate's maximizer, which equals `(φ2*)′(x)`
/// wherever the conjugate is differentiable.
pub fn s_value(phi2: &PhiFunction, lambda: f64, x: f64) -> Result<(f64, f64)> {
    let p = conjugate_at(phi2, x, &Tolerances::default())?;
    Ok((lambda * x - p.value, lambda - p.argmax))
}
