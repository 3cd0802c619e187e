use rayon::prelude::*;
use serde::Serialize;

use super::geometry::{g_minus, GeometryRule, SaddleGeometry};
use crate::envelope::{EnvelopePoint, Side, TailEnvelope};
use crate::error::{Error, Result};
use crate::funcore::search::golden_max;
use crate::funcore::{check_abscissae, conjugate_at, geomspace, PhiFunction};
use crate::tolerance::Tolerances;

/// A family of `(λ, μ₊)` choices given `μ₋`, the multiplier with
/// `x₀(μ₋) = z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", content = "values", rename_all = "snake_case")]
pub enum GeometryFamily {
    /// All pairs `(Δ1, Δ2)` from the list: `λ = μ₋/(1−Δ1)`, `μ₊ = λ(1+Δ2)`.
    DeltaGrid(Vec<f64>),
    /// Explicit `(Δ1, Δ2)` pairs.
    DeltaPairs(Vec<(f64, f64)>),
    /// All pairs `(c, c′)` from the list with `Δ1 = c/λ`, `Δ2 = c′/λ`,
    /// i.e. `λ = μ₋ + c`, `μ₊ = λ + c′`.
    Offsets(Vec<f64>),
    /// For a bounded domain `[., b)`: `λ = b − (b − μ₋)r`, `μ₊ = b − (b − λ)r′`.
    BoundaryRatios(Vec<f64>),
}

impl GeometryFamily {
    fn candidates(&self, mu: f64, b: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        match self {
            GeometryFamily::DeltaGrid(d) => {
                for d1 in d {
                    for d2 in d {
                        let l = mu / (1.0 - d1);
                        out.push((l, l * (1.0 + d2)));
                    }
                }
            }
            GeometryFamily::DeltaPairs(p) => {
                for (d1, d2) in p {
                    let l = mu / (1.0 - d1);
                    out.push((l, l * (1.0 + d2)));
                }
            }
            GeometryFamily::Offsets(c) => {
                for c1 in c {
                    for c2 in c {
                        let l = mu + c1;
                        out.push((l, l + c2));
                    }
                }
            }
            GeometryFamily::BoundaryRatios(r) => {
                if b.is_finite() {
                    for r1 in r {
                        for r2 in r {
                            let l = b - (b - mu) * r1;
                            out.push((l, b - (b - l) * r2));
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureOptions {
    pub families: Vec<GeometryFamily>,
    /// Local search in `(ln Δ1, ln Δ2)` around the best grid geometry.
    pub refine: bool,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        ClosureOptions {
            families: vec![GeometryFamily::DeltaGrid(geomspace(1e-3, 0.5, 16))],
            refine: true,
        }
    }
}

impl ClosureOptions {
    /// Adds the `Δ = c/λ` family used in the exact-MGF case.
    pub fn with_offsets(mut self) -> Self {
        self.families.push(GeometryFamily::Offsets(geomspace(0.05, 20.0, 24)));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosurePoint {
    pub z: f64,
    pub ln_value: Option<f64>,
    pub lambda: Option<f64>,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub x_minus: Option<f64>,
    pub x_plus: Option<f64>,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    pub points: Vec<ClosurePoint>,
    /// Abscissae where every tested geometry clamped to zero.
    pub all_clamped: Vec<f64>,
}

/// Multiplier `μ` with `x₀(μ) ≥ z`, as close to equality as possible.
fn multiplier_for(phi2: &PhiFunction, z: f64) -> Result<Option<f64>> {
    let tol = Tolerances::default();
    let p = conjugate_at(phi2, z, &tol)?;
    let d = phi2.domain();
    let mut mu = p.argmax;
    let mut step = 1e-13 * mu.abs().max(1e-300);
    for _ in 0..80 {
        if !d.contains(mu) {
            return Ok(None);
        }
        if phi2.derivative(mu)? >= z {
            return Ok(Some(mu));
        }
        mu += step;
        step *= 2.0;
    }
    Ok(None)
}

struct Best {
    ln: f64,
    geometry: SaddleGeometry,
}

fn evaluate(phi1: &PhiFunction, phi2: &PhiFunction, mu: f64, l: f64, mu_plus: f64) -> Option<Best> {
    let d2 = phi2.domain();
    if !(d2.contains(mu_plus) && phi1.domain().contains(l)) {
        return None;
    }
    let rule = GeometryRule::Asymmetric {
        delta1: 1.0 - mu / l,
        delta2: mu_plus / l - 1.0,
    };
    let g = SaddleGeometry::from_multipliers(phi2, mu, l, mu_plus, rule).ok()?;
    let v = g_minus(phi1, &g).ok()?;
    v.ln_value.map(|ln| Best { ln, geometry: g })
}

fn best_at(
    phi1: &PhiFunction,
    phi2: &PhiFunction,
    z: f64,
    opts: &ClosureOptions,
) -> Result<ClosurePoint> {
    let empty = ClosurePoint {
        z,
        ln_value: None,
        lambda: None,
        delta1: None,
        delta2: None,
        x_minus: None,
        x_plus: None,
        clamped: true,
    };
    let Some(mu) = multiplier_for(phi2, z)? else {
        return Ok(empty);
    };
    let b = phi2.domain().upper;
    let mut best: Option<Best> = None;
    fn consider(best: &mut Option<Best>, cand: Option<Best>) {
        if let Some(c) = cand {
            if best.as_ref().map_or(true, |b| c.ln > b.ln) {
                *best = Some(c);
            }
        }
    }
    let mut families = opts.families.clone();
    if b.is_finite() && !families.iter().any(|f| matches!(f, GeometryFamily::BoundaryRatios(_))) {
        families.push(GeometryFamily::BoundaryRatios(geomspace(1e-3, 0.5, 16)));
    }
    for fam in &families {
        for (l, mp) in fam.candidates(mu, b) {
            consider(&mut best, evaluate(phi1, phi2, mu, l, mp));
        }
    }
    if opts.refine {
        if let Some(start) = best.as_ref().map(|b| b.geometry) {
            let (mut u, mut v) = match start.rule {
                GeometryRule::Asymmetric { delta1, delta2 } => (delta1.ln(), delta2.ln()),
                _ => unreachable!("closure geometries are asymmetric"),
            };
            let at = |u: f64, v: f64| -> Option<Best> {
                let d1 = u.exp();
                if d1 >= 1.0 {
                    return None;
                }
                let l = mu / (1.0 - d1);
                evaluate(phi1, phi2, mu, l, l * (1.0 + v.exp()))
            };
            let score = |c: Option<Best>| c.map_or(f64::NEG_INFINITY, |b| b.ln);
            for _ in 0..3 {
                let (nu, _) = golden_max(|t| score(at(t, v)), u - 1.5, (u + 1.5).min(-1e-9), 1e-8);
                u = nu;
                let (nv, _) = golden_max(|t| score(at(u, t)), v - 1.5, v + 1.5, 1e-8);
                v = nv;
                consider(&mut best, at(u, v));
            }
        }
    }
    Ok(match best {
        None => empty,
        Some(b) => {
            let (d1, d2) = match b.geometry.rule {
                GeometryRule::Asymmetric { delta1, delta2 } => (delta1, delta2),
                _ => (f64::NAN, f64::NAN),
            };
            ClosurePoint {
                z,
                ln_value: Some(b.ln),
                lambda: Some(b.geometry.lambda),
                delta1: Some(d1),
                delta2: Some(d2),
                x_minus: Some(b.geometry.x_minus),
                x_plus: Some(b.geometry.x_plus),
                clamped: false,
            }
        }
    })
}

/// Supremum of `G₋` over the geometry families at each `z`, with the
/// running maximum from the right applied (the tail is nonincreasing).
///
/// `phi1 ≤ ln MGF ≤ phi2` is the caller's hypothesis; `phi2` must be
/// certified convex.
pub fn closure_lower_envelope(
    phi1: &PhiFunction,
    phi2: &PhiFunction,
    z_grid: &[f64],
    opts: &ClosureOptions,
) -> Result<(TailEnvelope, ClosureReport)> {
    check_abscissae(z_grid)?;
    if !phi2.is_certified_convex() {
        return Err(Error::InvalidArgument(format!(
            "{} is not certified convex",
            phi2.name()
        )));
    }
    let points = z_grid
        .par_iter()
        .map(|z| best_at(phi1, phi2, *z, opts))
        .collect::<Result<Vec<_>>>()?;
    let all_clamped = points.iter().filter(|p| p.clamped).map(|p| p.z).collect();
    let env_points = points
        .iter()
        .map(|p| EnvelopePoint::from_ln(p.z, p.ln_value.unwrap_or(f64::NEG_INFINITY)))
        .collect();
    let env = TailEnvelope::new(Side::Lower, "bilateral-closure", env_points).monotone();
    Ok((env, ClosureReport { points, all_clamped }))
}
