use serde::Serialize;

use super::closure::{closure_lower_envelope, ClosureOptions, ClosureReport};
use crate::envelope::{chernoff_upper, EnvelopePoint, Side, TailEnvelope};
use crate::error::{Error, Result};
use crate::funcore::{check_abscissae, conjugate_at, PhiFunction};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RichterSandwich {
    pub lower: TailEnvelope,
    pub upper: TailEnvelope,
    pub c2: f64,
    /// `(−ln Ḡ₋(x) − φ*(x))/x` where the closure is positive.
    pub per_x_c2: Vec<(f64, Option<f64>)>,
    pub closure: ClosureReport,
}

/// `exp(−φ*(x) − c₂x) ≤ T(x) ≤ exp(−φ*(x))` for an exact MGF exponent `φ`.
///
/// `c₂` is the largest excess rate of the bilateral closure (with
/// `φ1 = φ2 = φ` and the `Δ = c/λ` family) over the Chernoff exponent,
/// taken over the range where the closure is positive.
pub fn richter_sandwich(phi: &PhiFunction, x_grid: &[f64]) -> Result<RichterSandwich> {
    check_abscissae(x_grid)?;
    let upper = chernoff_upper(phi, x_grid)?;
    let opts = ClosureOptions::default().with_offsets();
    let (closure_env, closure) = closure_lower_envelope(phi, phi, x_grid, &opts)?;
    let tol = Tolerances::default();
    let conj = x_grid
        .iter()
        .map(|x| conjugate_at(phi, *x, &tol).map(|p| p.value))
        .collect::<Result<Vec<_>>>()?;
    let per_x_c2: Vec<(f64, Option<f64>)> = closure_env
        .points
        .iter()
        .zip(&conj)
        .map(|(p, f)| {
            let c = p.ln_value.filter(|_| p.x > 0.0).map(|ln| ((-ln - f) / p.x).max(0.0));
            (p.x, c)
        })
        .collect();
    let mut start = per_x_c2.len();
    while start > 0 && per_x_c2[start - 1].1.is_some() {
        start -= 1;
    }
    let c2 = per_x_c2[start..]
        .iter()
        .filter_map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    if !c2.is_finite() {
        return Err(Error::NotConverged(
            "the bilateral closure is clamped at the largest abscissa".into(),
        ));
    }
    let points = (start..x_grid.len())
        .map(|i| EnvelopePoint::from_ln(x_grid[i], -conj[i] - c2 * x_grid[i]))
        .collect();
    let lower = TailEnvelope::new(Side::Lower, "richter", points)
        .with_constant("c2", c2)
        .monotone();
    Ok(RichterSandwich { lower, upper, c2, per_x_c2, closure })
}
