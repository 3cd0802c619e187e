//! Auxiliary integrals `K(ε)`, `R(ε)`, `M(ε)` and the compound upper estimate
//! of `I(λ) = ∫₀^∞ exp(λx − ζ(x)) dx`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcore::search::golden_max;
use crate::funcore::{conjugate_at, conjugate_function, geomspace, Domain, PhiFunction};
use crate::oracle::quadrature::{integrate_half_line, Quadrature};
use crate::tolerance::Tolerances;

/// A quadrature outcome that may legitimately be infinite.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum IntegralValue {
    Finite {
        value: f64,
        abs_error: f64,
        truncation: f64,
    },
    Divergent {
        diagnostic: String,
    },
}

impl IntegralValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            IntegralValue::Finite { value, .. } => Some(*value),
            IntegralValue::Divergent { .. } => None,
        }
    }

    fn from_result(r: Result<Quadrature>) -> Result<Self> {
        match r {
            Ok(q) => Ok(IntegralValue::Finite {
                value: q.value,
                abs_error: q.abs_error,
                truncation: q.truncation,
            }),
            Err(Error::Divergent(d)) => Ok(IntegralValue::Divergent { diagnostic: d }),
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonReport {
    pub epsilon: f64,
    pub k: IntegralValue,
    pub r: IntegralValue,
    /// `min(K, R)` over the finite entries; `None` when both diverge.
    pub m: Option<f64>,
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} is not in (0, 1]")));
    }
    Ok(())
}

fn check_nonnegative(zeta: &PhiFunction, x: f64) -> Result<f64> {
    let v = zeta.eval(x)?;
    if v < -1e-12 {
        return Err(Error::NegativeInput { x, value: v });
    }
    Ok(v)
}

/// Rejects integrands `exp(−g(x))` whose exponent grows no faster than `ln x`.
fn divergence_pretest<G: Fn(f64) -> Result<f64>>(g: G) -> Result<()> {
    let mut ratios = Vec::new();
    for k in 2..=15 {
        let x = 10f64.powi(k);
        let v = g(x)?;
        if v == f64::INFINITY {
            return Ok(());
        }
        ratios.push((x, v / x.ln()));
    }
    let tail = &ratios[ratios.len() - 3..];
    if tail.iter().all(|(_, r)| *r <= 1.0 + 1e-3) {
        let (x, r) = tail[tail.len() - 1];
        return Err(Error::Divergent(format!(
            "exponent is only {r:.6}·ln x at x = {x:e}; integrand decays no faster than 1/x"
        )));
    }
    Ok(())
}

fn integrate_exponent<G: Fn(f64) -> f64>(g: G) -> Result<Quadrature> {
    let tol = Tolerances::default();
    integrate_half_line(|x| (-g(x)).exp(), 0.0, 0.0, 1.0, tol.quad_rel).map_err(|e| match e {
        Error::NotConverged(d) => Error::Divergent(d),
        other => other,
    })
}

/// `K(ε) = ∫₀^∞ exp(−ε ζ(x)) dx`.
pub fn k_epsilon(zeta: &PhiFunction, eps: f64) -> Result<Quadrature> {
    check_epsilon(eps)?;
    check_nonnegative(zeta, 0.0)?;
    divergence_pretest(|x| Ok(eps * check_nonnegative(zeta, x)?))?;
    integrate_exponent(|x| eps * zeta.eval_unchecked(x))
}

/// `R(ε) = ∫₀^∞ exp(ζ((1−ε)x) − ζ(x)) dx`.
pub fn r_epsilon(zeta: &PhiFunction, eps: f64) -> Result<Quadrature> {
    check_epsilon(eps)?;
    check_nonnegative(zeta, 0.0)?;
    let exponent = |x: f64| {
        let a = zeta.eval_unchecked(x);
        if a == f64::INFINITY {
            return f64::INFINITY;
        }
        a - zeta.eval_unchecked((1.0 - eps) * x)
    };
    divergence_pretest(|x| {
        check_nonnegative(zeta, x)?;
        Ok(exponent(x))
    })?;
    integrate_exponent(exponent)
}

pub fn epsilon_report(zeta: &PhiFunction, eps: f64) -> Result<EpsilonReport> {
    let k = IntegralValue::from_result(k_epsilon(zeta, eps))?;
    let r = IntegralValue::from_result(r_epsilon(zeta, eps))?;
    let m = match (k.value(), r.value()) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    Ok(EpsilonReport { epsilon: eps, k, r, m })
}

/// `ln I(λ)` by quadrature centred on the maximizer of `λx − ζ(x)`.
pub fn ln_laplace_integral(zeta: &PhiFunction, lambda: f64) -> Result<f64> {
    let tol = Tolerances::default();
    let top = conjugate_at(zeta, lambda, &tol).map_err(|e| match e {
        Error::UnboundedObjective { x, .. } => {
            Error::Divergent(format!("lambda x - zeta(x) is unbounded at lambda = {x}"))
        }
        other => other,
    })?;
    let c = top.argmax;
    let h = 1e-3 * (1.0 + c);
    let curvature = match (zeta.derivative(c + h), zeta.derivative((c - h).max(0.0))) {
        (Ok(a), Ok(b)) => (a - b) / (c + h - (c - h).max(0.0)),
        _ => 1.0,
    };
    let width = if curvature > 0.0 && curvature.is_finite() {
        (1.0 / curvature.sqrt()).clamp(1e-6 * (1.0 + c), 1.0 + c)
    } else {
        1.0 + c
    };
    let q = integrate_half_line(
        |x| (lambda * x - zeta.eval_unchecked(x) - top.value).exp(),
        0.0,
        c,
        width,
        tol.quad_rel,
    )
    .map_err(|e| match e {
        Error::NotConverged(d) => Error::Divergent(d),
        other => other,
    })?;
    Ok(top.value + q.value.ln())
}

/// The compound estimate at one `ε`, in logarithms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompoundBound {
    pub lambda: f64,
    pub epsilon: f64,
    pub k: Option<f64>,
    pub r: Option<f64>,
    pub m: f64,
    /// `ζ*(λ/(1−ε))`.
    pub conjugate: f64,
    /// `ln(M · exp(ζ*(λ/(1−ε))))`.
    pub ln_bound: f64,
    /// `ln(K · exp(ζ*(λ/(1−ε))))`.
    pub ln_k_bound: Option<f64>,
    /// `ln(K · exp((1−ε) ζ*(λ/(1−ε))))`, the sharpest of the three.
    pub ln_damped_bound: Option<f64>,
}

impl CompoundBound {
    pub fn bound(&self) -> f64 {
        self.ln_bound.exp()
    }
}

/// `M(ε)·exp(ζ*(λ/(1−ε)))` together with its two `K`-based variants.
pub fn compound_upper(zeta: &PhiFunction, lambda: f64, eps: f64) -> Result<CompoundBound> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} is not in (0, 1)")));
    }
    let report = epsilon_report(zeta, eps)?;
    let m = report.m.ok_or_else(|| {
        Error::Divergent(format!("both K and R diverge at epsilon = {eps}"))
    })?;
    let arg = lambda / (1.0 - eps);
    let conj = conjugate_at(zeta, arg, &Tolerances::default())?.value;
    let k = report.k.value();
    Ok(CompoundBound {
        lambda,
        epsilon: eps,
        k,
        r: report.r.value(),
        m,
        conjugate: conj,
        ln_bound: m.ln() + conj,
        ln_k_bound: k.map(|k| k.ln() + conj),
        ln_damped_bound: k.map(|k| k.ln() + (1.0 - eps) * conj),
    })
}

/// `ln(μ(X)·exp(ζ*(λ)))`: the bound on `∫_X exp(λx − ζ(x)) μ(dx)` when the
/// measure is finite. `ζ` lives on `X` (its domain).
pub fn ln_finite_measure_upper(zeta: &PhiFunction, measure: f64, lambda: f64) -> Result<f64> {
    if !(measure > 0.0 && measure.is_finite()) {
        return Err(Error::InvalidArgument(format!("measure {measure} is not finite and positive")));
    }
    Ok(measure.ln() + conjugate_at(zeta, lambda, &Tolerances::default())?.value)
}

/// Which compound variant to minimize over `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    Min,
    K,
    Damped,
}

impl BoundVariant {
    fn pick(&self, b: &CompoundBound) -> Option<f64> {
        match self {
            BoundVariant::Min => Some(b.ln_bound),
            BoundVariant::K => b.ln_k_bound,
            BoundVariant::Damped => b.ln_damped_bound,
        }
    }
}

/// Minimizes the chosen variant over a geometric `ε` grid on `[0.01, 0.99]`,
/// refined by golden-section search in `ln ε` around the best grid point.
pub fn optimize_epsilon(
    zeta: &PhiFunction,
    lambda: f64,
    variant: BoundVariant,
) -> Result<CompoundBound> {
    let grid = geomspace(0.01, 0.99, 33);
    let evals: Vec<Option<f64>> = grid
        .par_iter()
        .map(|e| {
            compound_upper(zeta, lambda, *e)
                .ok()
                .and_then(|b| variant.pick(&b))
        })
        .collect();
    let best = evals
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Divergent("no epsilon on the grid gives a finite bound".into()))?
        .0;
    let lo = grid[best.saturating_sub(1)].ln();
    let hi = grid[(best + 1).min(grid.len() - 1)].ln();
    let (t, _) = golden_max(
        |t| {
            compound_upper(zeta, lambda, t.exp())
                .ok()
                .and_then(|b| variant.pick(&b))
                .map(|v| -v)
                .unwrap_or(f64::NEG_INFINITY)
        },
        lo,
        hi,
        1e-6,
    );
    let refined = compound_upper(zeta, lambda, t.exp())?;
    let at_grid = compound_upper(zeta, lambda, grid[best])?;
    if variant.pick(&refined) <= variant.pick(&at_grid) {
        Ok(refined)
    } else {
        Ok(at_grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CramerCertificate {
    pub certified: bool,
    pub epsilons: Vec<f64>,
    /// `K(ε)` per tested `ε`; `None` marks divergence.
    pub k_values: Vec<Option<f64>>,
    /// Largest `μ` with `G(x) ≥ μx` on the tested ladder `x ≥ 1`.
    pub mu: Option<f64>,
    /// `G(x)/x` on the ladder `x = 10^k`.
    pub slope_ladder: Vec<(f64, f64)>,
    pub reason: String,
}

pub const CRAMER_EPSILONS: [f64; 9] = [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.2, 0.5];

/// Checks Cramér's condition for a tail exponent `G`: integrability of
/// `exp(−εG)` for every tested `ε`, and a slope `G(x)/x` that stays away
/// from zero along a decade ladder.
pub fn cramer_check(g: &PhiFunction) -> CramerCertificate {
    let k_values: Vec<Option<f64>> = CRAMER_EPSILONS
        .par_iter()
        .map(|e| k_epsilon(g, *e).ok().map(|q| q.value))
        .collect();
    let slope_ladder: Vec<(f64, f64)> = (0..=12)
        .map(|k| {
            let x = 10f64.powi(k);
            (x, g.eval(x).map(|v| v / x).unwrap_or(f64::NAN))
        })
        .collect();
    let all_finite = k_values.iter().all(|k| k.is_some());
    let n = slope_ladder.len();
    let (last, prev) = (slope_ladder[n - 1].1, slope_ladder[n - 2].1);
    let slope_holds = last == f64::INFINITY || (last > 0.0 && last >= 0.9 * prev);
    let mu = slope_ladder
        .iter()
        .map(|(_, r)| *r)
        .fold(f64::INFINITY, f64::min);
    let mu = (mu > 0.0 && mu.is_finite()).then_some(mu);
    let certified = all_finite && slope_holds && mu.is_some();
    let reason = if !all_finite {
        let e = CRAMER_EPSILONS[k_values.iter().position(|k| k.is_none()).unwrap_or(0)];
        format!("K diverges at epsilon = {e}")
    } else if !slope_holds {
        format!("G(x)/x decays along the ladder ({prev:e} -> {last:e})")
    } else if mu.is_none() {
        "no positive slope witness on the ladder".into()
    } else {
        "exp(-eps G) integrable for every tested eps; G(x) >= mu x on the ladder".into()
    };
    CramerCertificate {
        certified,
        epsilons: CRAMER_EPSILONS.to_vec(),
        k_values,
        mu,
        slope_ladder,
        reason,
    }
}

/// Cramér check for an upper MGF exponent `ν`, through `G ≥ max(ν*, 0)`.
pub fn cramer_check_mgf(nu: &PhiFunction) -> CramerCertificate {
    cramer_check(&positive_conjugate(nu))
}

/// `x ↦ max(ν*(x), 0)` on `[0, ∞)`.
pub fn positive_conjugate(nu: &PhiFunction) -> PhiFunction {
    let conj = conjugate_function(nu);
    PhiFunction::custom(
        &format!("max(conj({}), 0)", nu.name()),
        move |x| conj.eval_unchecked(x).max(0.0),
        Domain::from(0.0).expect("half-line is a valid domain"),
    )
    .assume_convex()
}

/// The surrogate `K[max(ν*,0)](ε)`, an upper bound for `K[G](ε)` because
/// the true tail exponent dominates the Chernoff exponent.
pub fn m_surrogate_from_upper(nu: &PhiFunction, eps: f64) -> Result<f64> {
    Ok(k_epsilon(&positive_conjugate(nu), eps)?.value)
}
