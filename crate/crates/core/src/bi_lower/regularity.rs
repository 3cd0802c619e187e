use rayon::prelude::*;
use serde::Serialize;

use super::closure::{closure_lower_envelope, ClosureOptions, GeometryFamily};
use crate::envelope::{EnvelopePoint, Side, TailEnvelope};
use crate::error::{Error, Result};
use crate::funcore::{check_abscissae, conjugate_at, geomspace, linspace, PhiFunction};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    /// Grid infimum of `[S(λ,x₀) − S(λ, x₀(λ(1+Δ)))] / [S(λ,x₀)·Δ²]`.
    pub v: f64,
    pub v_argmin: (f64, f64),
    /// Smallest `c₀` with
    /// `λx₀(λ(1+δ)) − (1−δ²)φ(λ) ≤ (1 + c₀δ)·φ*(x₀(λ(1−δ)))` on the grid.
    pub c0: Option<f64>,
    pub c0_argmax: Option<(f64, f64)>,
    pub lambda_range: (f64, f64),
    pub lambda_points: usize,
    pub delta_points: usize,
    pub passed: bool,
}

fn lambda_grid(phi: &PhiFunction) -> Result<Vec<f64>> {
    let d = phi.domain();
    let lo = std::f64::consts::E.max(d.lower);
    let hi = if d.is_bounded() { d.upper / 1.6 } else { 1e3 };
    if hi <= lo {
        return Err(Error::RegularityFailed(format!(
            "domain [{}, {}) does not reach past e with room for perturbation",
            d.lower, d.upper
        )));
    }
    Ok(geomspace(lo, hi, 40))
}

/// Estimates the regularity constant `V[φ]` and a feasible `c₀` on grids.
pub fn verify_regularity(phi: &PhiFunction) -> Result<RegularityReport> {
    if !phi.is_certified_convex() {
        return Err(Error::RegularityFailed(format!("{} is not certified convex", phi.name())));
    }
    let lambdas = lambda_grid(phi)?;
    let mags = geomspace(1e-3, 0.5, 24);
    let deltas: Vec<f64> = mags.iter().map(|d| -d).chain(mags.iter().cloned()).collect();
    let dom = phi.domain();

    let v_terms: Vec<(f64, f64, f64)> = lambdas
        .par_iter()
        .flat_map_iter(|&l| {
            let deltas = &deltas;
            deltas.iter().filter_map(move |&d| {
                let mu = l * (1.0 + d);
                if !dom.contains(mu) {
                    return None;
                }
                let f = phi.eval(l).ok()?;
                let num = f - phi.eval(mu).ok()? + l * d * phi.derivative(mu).ok()?;
                Some((num / (f * d * d), l, d))
            })
        })
        .collect();
    let (v, vl, vd) = v_terms
        .iter()
        .cloned()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::RegularityFailed("no admissible (lambda, delta) pair".into()))?;

    let c0_terms: Vec<(f64, f64, f64)> = lambdas
        .par_iter()
        .flat_map_iter(|&l| {
            mags.iter().filter(|d| **d < 0.5).filter_map(move |&d| {
                let (up, down) = (l * (1.0 + d), l * (1.0 - d));
                if !(dom.contains(up) && dom.contains(down)) {
                    return None;
                }
                let lhs = l * phi.derivative(up).ok()? - (1.0 - d * d) * phi.eval(l).ok()?;
                let xd = phi.derivative(down).ok()?;
                let rhs = down * xd - phi.eval(down).ok()?;
                (rhs > 0.0).then(|| ((lhs / rhs - 1.0) / d, l, d))
            })
        })
        .collect();
    let c0 = c0_terms.iter().cloned().max_by(|a, b| a.0.total_cmp(&b.0));
    Ok(RegularityReport {
        v,
        v_argmin: (vl, vd),
        c0: c0.map(|c| c.0.max(0.0)),
        c0_argmax: c0.map(|c| (c.1, c.2)),
        lambda_range: (lambdas[0], lambdas[lambdas.len() - 1]),
        lambda_points: lambdas.len(),
        delta_points: deltas.len(),
        passed: v > 0.0 && c0.is_some(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinedCertificate {
    pub delta: f64,
    /// Smallest grid value making the form dominated by the bilateral
    /// closure on the validity range; `None` if no abscissa qualifies.
    pub c: Option<f64>,
    /// `c` on the scale `(1 − cδ)`: the envelope equals
    /// `exp(−(1−cδ)φ*(z/(1−cδ)))`.
    pub shrink: Option<f64>,
    pub z_valid_from: Option<f64>,
    pub per_z_c: Vec<(f64, Option<f64>)>,
    pub regularity: RegularityReport,
}

/// Envelope `exp(−(1 − cδ)·φ*(z/(1 − cδ)))` for the pinch
/// `(1−δ²)φ ≤ ln MGF ≤ φ`, with `c` fitted against the closure built from
/// geometries `Δ = C₂δ`.
pub fn refined_envelope(
    phi: &PhiFunction,
    delta: f64,
    z_grid: &[f64],
) -> Result<(TailEnvelope, RefinedCertificate)> {
    check_abscissae(z_grid)?;
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidArgument(format!("delta {delta} is not in (0, 1/2)")));
    }
    let regularity = verify_regularity(phi)?;
    if regularity.v <= 0.0 {
        return Err(Error::RegularityFailed(format!("V = {} is not positive", regularity.v)));
    }
    if regularity.c0.is_none() {
        return Err(Error::RegularityFailed("no feasible c0 on the grid".into()));
    }
    let cap = 1.0 / (2.0 * delta);
    let zs: Vec<f64> = z_grid.iter().cloned().filter(|z| *z >= std::f64::consts::E).collect();
    if zs.is_empty() {
        return Err(Error::InvalidGrid("no abscissa z >= e".into()));
    }
    let c2: Vec<f64> = linspace(0.0, cap, 50)[1..49].to_vec();
    let deltas: Vec<f64> = c2.iter().map(|c| c * delta).collect();
    let opts = ClosureOptions {
        families: vec![GeometryFamily::DeltaGrid(deltas)],
        refine: false,
    };
    let phi1 = phi.scaled(1.0 - delta * delta);
    let (closure, _) = closure_lower_envelope(&phi1, phi, &zs, &opts)?;

    let c_grid: Vec<f64> = linspace(0.0, cap, 201)[1..200].to_vec();
    let tol = Tolerances::default();
    let form = |z: f64, c: f64| -> Result<f64> {
        let t = 1.0 - c * delta;
        Ok(-t * conjugate_at(phi, z / t, &tol)?.value)
    };
    let per_z: Vec<(f64, Option<f64>)> = zs
        .par_iter()
        .zip(closure.points.par_iter())
        .map(|(z, p)| {
            let bound = p.ln();
            if bound == f64::NEG_INFINITY {
                return Ok((*z, None));
            }
            let ok = |i: usize| form(*z, c_grid[i]).map(|v| v <= bound);
            if !ok(c_grid.len() - 1)? {
                return Ok((*z, None));
            }
            let (mut lo, mut hi) = (0usize, c_grid.len() - 1);
            if ok(0)? {
                return Ok((*z, Some(c_grid[0])));
            }
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if ok(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok((*z, Some(c_grid[hi])))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut start = per_z.len();
    while start > 0 && per_z[start - 1].1.is_some() {
        start -= 1;
    }
    let valid = &per_z[start..];
    let c = valid.iter().filter_map(|p| p.1).fold(None, |acc: Option<f64>, v| {
        Some(acc.map_or(v, |a| a.max(v)))
    });
    let points = match c {
        Some(c) => valid
            .iter()
            .map(|(z, _)| form(*z, c).map(|ln| EnvelopePoint::from_ln(*z, ln)))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let mut env = TailEnvelope::new(Side::Lower, "refined-bilateral", points)
        .with_constant("delta", delta);
    if let Some(c) = c {
        env = env.with_constant("c", c);
    }
    let cert = RefinedCertificate {
        delta,
        c,
        shrink: c.map(|c| 1.0 - c * delta),
        z_valid_from: valid.first().filter(|_| c.is_some()).map(|p| p.0),
        per_z_c: per_z,
        regularity,
    };
    Ok((env, cert))
}
