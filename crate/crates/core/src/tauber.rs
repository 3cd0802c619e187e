//! Numerical check of the Tauberian equivalence between the MGF-side limit
//! `φ⁻¹(ln E e^{λξ})/λ → K` and the tail-side limit
//! `(φ*)⁻¹(|ln T(x)|)/x → 1/K`.

use rayon::prelude::*;
use serde::Serialize;

use crate::bi_lower::{verify_regularity, RegularityReport};
use crate::error::{Error, Result};
use crate::funcore::{conjugate_at, PhiFunction};
use crate::oracle::{empirical_tail, OracleDistribution};
use crate::tolerance::Tolerances;

/// Where the MGF and tail values come from.
#[derive(Debug, Clone)]
pub enum TauberSource {
    /// `scale·X` with `X` drawn from a reference law.
    Oracle { law: OracleDistribution, scale: f64 },
    /// Empirical exceedances; the MGF side is not available.
    Samples(Vec<f64>),
    /// Externally supplied `ln E e^{λξ}` and `−ln T(x)`.
    Exponents {
        ln_mgf: Option<PhiFunction>,
        neg_ln_tail: Option<PhiFunction>,
    },
}

impl TauberSource {
    fn ln_mgf(&self, lambda: f64) -> Option<f64> {
        match self {
            TauberSource::Oracle { law, scale } => law.ln_mgf(scale * lambda),
            TauberSource::Samples(_) => None,
            TauberSource::Exponents { ln_mgf, .. } => ln_mgf.as_ref()?.eval(lambda).ok(),
        }
    }

    fn has_mgf(&self) -> bool {
        match self {
            TauberSource::Oracle { .. } => true,
            TauberSource::Samples(_) => false,
            TauberSource::Exponents { ln_mgf, .. } => ln_mgf.is_some(),
        }
    }

    fn neg_ln_tails(&self, xs: &[f64]) -> Option<Vec<f64>> {
        match self {
            TauberSource::Oracle { law, scale } => {
                Some(xs.iter().map(|x| -law.ln_tail(x / scale)).collect())
            }
            TauberSource::Samples(s) => Some(
                empirical_tail(s, xs)
                    .rows
                    .iter()
                    .map(|r| if r.count == 0 { f64::INFINITY } else { -r.fraction.ln() })
                    .collect(),
            ),
            TauberSource::Exponents { neg_ln_tail, .. } => {
                let g = neg_ln_tail.as_ref()?;
                Some(xs.iter().map(|x| g.eval(*x).unwrap_or(f64::NAN)).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ladders {
    pub lambda: Vec<f64>,
    pub x: Vec<f64>,
}

impl Ladders {
    /// `cap·2^{−k/2}` for `k = 0..n`, returned increasing.
    pub fn geometric(cap: f64, n: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|k| cap * 2f64.powf(-(k as f64) / 2.0)).collect();
        v.reverse();
        v
    }
}

impl Default for Ladders {
    fn default() -> Self {
        Ladders {
            lambda: Self::geometric(50.0, 8),
            x: Self::geometric(8.0, 8),
        }
    }
}

/// One side of the check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub ladder: Vec<f64>,
    /// Ratio at each ladder point; `None` where it could not be formed.
    pub ratios: Vec<Option<f64>>,
    /// Three-point extrapolation from the top of the ladder.
    pub estimate: f64,
    /// Ratio at the ladder top.
    pub top_ratio: f64,
    /// `|r_top − r_prev| / r_top`.
    pub last_step_change: f64,
    /// Relative change between extrapolations from the last two triples.
    pub extrapolation_change: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauberianReport {
    pub k_mgf: Option<LimitEstimate>,
    pub k_tail: Option<LimitEstimate>,
    /// `K_mgf·K_tail` when both sides are available.
    pub product: Option<f64>,
    pub tolerance: f64,
    pub consistent: Option<bool>,
    pub regularity: Option<RegularityReport>,
}

/// Fits `K + a·ln t/t² + b/t²` through three points and returns `K`.
pub fn extrapolate(points: [(f64, f64); 3]) -> Option<f64> {
    let rows: Vec<[f64; 4]> = points
        .iter()
        .map(|(t, r)| [1.0, t.ln() / (t * t), 1.0 / (t * t), *r])
        .collect();
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let a = [
        [rows[0][0], rows[0][1], rows[0][2]],
        [rows[1][0], rows[1][1], rows[1][2]],
        [rows[2][0], rows[2][1], rows[2][2]],
    ];
    let d = det3(a);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut k = a;
    for (i, row) in k.iter_mut().enumerate() {
        row[0] = rows[i][3];
    }
    let v = det3(k) / d;
    v.is_finite().then_some(v)
}

/// Solves `f(t) = y` for nondecreasing `f` by bisection from `lo`, growing
/// the bracket as needed.
fn invert<F: Fn(f64) -> Result<f64>>(f: F, y: f64, lo: f64, hi_cap: f64) -> Result<f64> {
    let f_lo = f(lo)?;
    if y < f_lo {
        return Err(Error::NonInvertible(format!("level {y} lies below the value {f_lo} at {lo}")));
    }
    let mut hi = (2.0 * lo).max(1.0);
    while f(hi)? < y {
        if hi >= hi_cap {
            return Err(Error::NonInvertible(format!("level {y} not reached below {hi_cap}")));
        }
        hi = (2.0 * hi).min(hi_cap);
    }
    let mut a = lo;
    while hi - a > 1e-10 * hi.abs().max(1e-300) {
        let mid = 0.5 * (a + hi);
        if f(mid)? < y {
            a = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (a + hi))
}

/// `φ⁻¹(y)` on the domain of `φ`.
pub fn phi_inverse(phi: &PhiFunction, y: f64) -> Result<f64> {
    let d = phi.domain();
    invert(|l| phi.eval(l), y, d.lower, d.last_point())
}

/// `(φ*)⁻¹(y)` on `x ≥ 0`.
pub fn conjugate_inverse(phi: &PhiFunction, y: f64) -> Result<f64> {
    let tol = Tolerances::default();
    invert(|x| Ok(conjugate_at(phi, x, &tol)?.value), y, 0.0, 1e12)
}

fn estimate(ladder: &[f64], ratios: Vec<Option<f64>>) -> Result<LimitEstimate> {
    let finite: Vec<(f64, f64)> = ladder
        .iter()
        .zip(&ratios)
        .filter_map(|(t, r)| r.filter(|v| v.is_finite() && *v > 0.0).map(|v| (*t, v)))
        .collect();
    let n = finite.len();
    if n < 3 {
        return Err(Error::NotConverged(format!("only {n} usable ladder points")));
    }
    let triple = |end: usize| extrapolate([finite[end - 3], finite[end - 2], finite[end - 1]]);
    let top_ratio = finite[n - 1].1;
    let last_step_change = (top_ratio - finite[n - 2].1).abs() / top_ratio;
    let estimate = triple(n).unwrap_or(top_ratio);
    let extrapolation_change = if n >= 4 {
        triple(n - 1).map(|p| (estimate - p).abs() / estimate.abs())
    } else {
        None
    };
    let converged = estimate.is_finite()
        && estimate > 0.0
        && extrapolation_change.map_or(last_step_change <= 0.25, |c| c <= 0.05);
    Ok(LimitEstimate {
        ladder: ladder.to_vec(),
        ratios,
        estimate,
        top_ratio,
        last_step_change,
        extrapolation_change,
        converged,
    })
}

/// Estimates both limits and checks `K_mgf·K_tail = 1` within `tolerance`.
pub fn tauberian_check(
    phi: &PhiFunction,
    source: &TauberSource,
    ladders: &Ladders,
    tolerance: f64,
) -> Result<TauberianReport> {
    let regularity = verify_regularity(phi).ok();
    let k_mgf = if source.has_mgf() && !ladders.lambda.is_empty() {
        let ratios: Vec<Option<f64>> = ladders
            .lambda
            .par_iter()
            .map(|l| {
                let y = source.ln_mgf(*l)?;
                phi_inverse(phi, y).ok().map(|v| v / l)
            })
            .collect();
        Some(estimate(&ladders.lambda, ratios)?)
    } else {
        None
    };
    let k_tail = match source.neg_ln_tails(&ladders.x) {
        Some(g) if !ladders.x.is_empty() => {
            let ratios: Vec<Option<f64>> = ladders
                .x
                .par_iter()
                .zip(g.par_iter())
                .map(|(x, y)| {
                    if !y.is_finite() || *y <= 0.0 {
                        return None;
                    }
                    conjugate_inverse(phi, *y).ok().map(|v| v / x)
                })
                .collect();
            Some(estimate(&ladders.x, ratios)?)
        }
        _ => None,
    };
    let product = match (&k_mgf, &k_tail) {
        (Some(a), Some(b)) => Some(a.estimate * b.estimate),
        _ => None,
    };
    Ok(TauberianReport {
        consistent: product.map(|p| (p - 1.0).abs() <= tolerance),
        k_mgf,
        k_tail,
        product,
        tolerance,
        regularity,
    })
}
