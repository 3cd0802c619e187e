//! Power-level inputs: envelopes on the norms `|ξ|_p = (E|ξ|^p)^{1/p}`.
//!
//! With `θ = ln|ξ|` the norm envelopes become MGF exponents
//! `φ(λ) = λ·ln(envelope(λ))` for `θ`, and tail bounds transfer through
//! `T_ξ(x) = T_θ(ln x)`.

use std::path::Path;

use serde::Serialize;

use crate::bi_lower::{closure_lower_envelope, ClosureOptions};
use crate::envelope::{chernoff_upper, EnvelopePoint, Side, TailEnvelope};
use crate::error::{Error, Result};
use crate::funcore::{certify_convex, check_abscissae, geomspace, linspace, Domain, Grid, PhiFunction};
use crate::saddle::{cramer_check, m_surrogate_from_upper, CramerCertificate};
use crate::uni_lower::{certify_class_w, unilateral_lower_envelope, unit_level, LowerEnvelopeCertificate, UniOptions};

/// Lower (and optionally upper) envelope of `p ↦ |ξ|_p`.
#[derive(Debug, Clone)]
pub struct MomentEnvelope {
    pub lower: PhiFunction,
    pub upper: Option<PhiFunction>,
}

fn sample_points(d: Domain) -> Vec<f64> {
    let hi = if d.is_bounded() { d.last_point() } else { d.lower.max(1.0) * 1e3 };
    if d.lower > 0.0 {
        geomspace(d.lower, hi, 200)
    } else {
        linspace(d.lower, hi, 200)
    }
}

fn check_positive(f: &PhiFunction) -> Result<()> {
    for p in sample_points(f.domain()) {
        let v = f.eval(p)?;
        if !(v > 0.0) {
            return Err(Error::NonPositiveEnvelope { p, value: v });
        }
    }
    Ok(())
}

impl MomentEnvelope {
    pub fn new(lower: PhiFunction, upper: Option<PhiFunction>) -> Result<Self> {
        if lower.domain().lower < 1.0 {
            return Err(Error::InvalidArgument("moment envelopes live on p >= 1".into()));
        }
        check_positive(&lower)?;
        if let Some(u) = &upper {
            check_positive(u)?;
            for p in sample_points(lower.domain()) {
                if let (Ok(a), Ok(b)) = (lower.eval(p), u.eval(p)) {
                    if a > b * (1.0 + 1e-12) {
                        return Err(Error::InvalidArgument(format!(
                            "lower envelope {a} exceeds upper {b} at p = {p}"
                        )));
                    }
                }
            }
        }
        Ok(MomentEnvelope { lower, upper })
    }

    /// `ζ(p) = C·(b − p)^{−β}` on `[1, b)`.
    pub fn power_pole(c: f64, b: f64, beta: f64) -> Result<Self> {
        if !(c > 0.0 && b > 1.0 && beta > 0.0 && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("need C > 0, b > 1, beta > 0; got {c}, {b}, {beta}")));
        }
        let f = PhiFunction::custom(
            &format!("{c}*({b}-p)^-{beta}"),
            move |p| c * (b - p).powf(-beta),
            Domain::new(1.0, b)?,
        )
        .with_derivative(move |p| c * beta * (b - p).powf(-beta - 1.0));
        Self::new(f, None)
    }

    /// `c_low·p^{1/m} ≤ |ξ|_p ≤ c_high·p^{1/m}` on `[1, ∞)`.
    pub fn weibull_type(m: f64, c_low: f64, c_high: f64) -> Result<Self> {
        if !(m > 0.0 && c_low > 0.0 && c_high >= c_low) {
            return Err(Error::InvalidArgument(format!(
                "need m > 0 and 0 < c_low <= c_high; got {m}, {c_low}, {c_high}"
            )));
        }
        let make = |c: f64| {
            PhiFunction::custom(&format!("{c}*p^(1/{m})"), move |p| c * p.powf(1.0 / m), Domain::default())
                .with_derivative(move |p| c / m * p.powf(1.0 / m - 1.0))
        };
        Self::new(make(c_low), Some(make(c_high)))
    }

    /// Loads `p,lower,upper` rows; the upper column may be absent or blank.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Csv { line: 1, message: e.to_string() })?
            .clone();
        let has_upper = match headers.iter().collect::<Vec<_>>().as_slice() {
            ["p", "lower"] => false,
            ["p", "lower", "upper"] => true,
            _ => {
                return Err(Error::Csv {
                    line: 1,
                    message: "expected header `p,lower,upper` or `p,lower`".into(),
                })
            }
        };
        let (mut ps, mut lo, mut hi) = (Vec::new(), Vec::new(), Vec::new());
        let mut any_upper = false;
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Csv {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let num = |i: usize| -> Result<Option<f64>> {
                match record.get(i) {
                    None | Some("") => Ok(None),
                    Some(s) => s.parse::<f64>().map(Some).map_err(|_| Error::Csv {
                        line,
                        message: format!("`{s}` is not a number"),
                    }),
                }
            };
            let p = num(0)?.ok_or(Error::Csv { line, message: "missing p".into() })?;
            let l = num(1)?.ok_or(Error::Csv { line, message: "missing lower".into() })?;
            if !(l > 0.0) {
                return Err(Error::Csv { line, message: format!("lower envelope {l} is not positive") });
            }
            if let Some(prev) = ps.last() {
                if p <= *prev {
                    return Err(Error::Csv { line, message: format!("p {p} does not exceed previous {prev}") });
                }
            }
            let u = if has_upper { num(2)? } else { None };
            if let Some(u) = u {
                if u < l {
                    return Err(Error::Csv { line, message: format!("upper {u} is below lower {l}") });
                }
                any_upper = true;
            }
            ps.push(p);
            lo.push(l);
            hi.push(u);
        }
        let lower = PhiFunction::grid(Grid::new(ps.clone(), lo).map_err(|e| Error::Csv {
            line: 0,
            message: e.to_string(),
        })?);
        let upper = if any_upper {
            if hi.iter().any(|u| u.is_none()) {
                return Err(Error::Csv {
                    line: 0,
                    message: "upper column must be filled on every row or none".into(),
                });
            }
            let vals = hi.into_iter().map(|u| u.unwrap_or(f64::NAN)).collect();
            Some(PhiFunction::grid(Grid::new(ps, vals)?))
        } else {
            None
        };
        Self::new(lower, upper)
    }
}

/// `λ·ln(envelope(λ))` with its analytic derivative.
fn log_moment_exponent(env: &PhiFunction, domain: Domain) -> Result<PhiFunction> {
    let f = env.clone();
    let d = env.clone();
    let phi = PhiFunction::custom(
        &format!("lambda*ln({})", env.name()),
        move |l| l * f.eval_unchecked(l).ln(),
        domain,
    )
    .with_derivative(move |l| {
        let v = d.eval_unchecked(l);
        v.ln() + l * d.derivative_unchecked(l) / v
    });
    Ok(certify_convex(&phi, &sample_points(domain))?.unwrap_or(phi))
}

#[derive(Debug, Clone)]
pub struct ExponentialForm {
    pub phi1: PhiFunction,
    pub phi2: Option<PhiFunction>,
    /// `φ1` vanishes identically on the sample grid.
    pub degenerate: bool,
}

/// `φᵢ(λ) = λ·ln(envelopeᵢ(λ))` on the part of the domain where the lower
/// envelope is at least 1 (so both exponents are nonnegative).
pub fn to_exponential(m: &MomentEnvelope) -> Result<ExponentialForm> {
    check_positive(&m.lower)?;
    let d = m.lower.domain();
    let lower_at_least_one = PhiFunction::custom("ln zeta", {
        let z = m.lower.clone();
        move |p| z.eval_unchecked(p).ln() + 1.0
    }, d);
    let start = unit_level(&lower_at_least_one).map_err(|_| {
        Error::NonPositiveEnvelope { p: d.lower, value: 0.0 }
    })?;
    let domain = Domain { lower: start, ..d };
    let phi1 = log_moment_exponent(&m.lower, domain)?;
    let phi2 = m
        .upper
        .as_ref()
        .map(|u| log_moment_exponent(u, domain))
        .transpose()?;
    let degenerate = sample_points(domain)
        .iter()
        .all(|l| phi1.eval(*l).map_or(false, |v| v.abs() <= 1e-15));
    Ok(ExponentialForm { phi1, phi2, degenerate })
}

#[derive(Debug, Clone, Default)]
pub struct PowerTailOptions {
    pub epsilon: Option<f64>,
    /// Required when the envelope has no upper side.
    pub m_surrogate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerTailResult {
    /// `C·x^{−γ}` on the validity range.
    pub envelope: TailEnvelope,
    /// The chain envelope `exp(−φ1*(a·ln x))` it is derived from.
    pub chain_envelope: TailEnvelope,
    pub c: f64,
    pub gamma: f64,
    pub b: f64,
    /// Whether `1 < γ < b`.
    pub gamma_in_open_range: bool,
    pub chain: LowerEnvelopeCertificate,
}

/// Power-law lower envelope for a moment envelope with a pole at `p = b`,
/// obtained by running the unilateral chain for `θ = ln|ξ|`.
pub fn power_tail_lower(m: &MomentEnvelope, x_grid: &[f64], opts: &PowerTailOptions) -> Result<PowerTailResult> {
    check_abscissae(x_grid)?;
    let ef = to_exponential(m)?;
    let b = ef.phi1.domain().upper;
    if !b.is_finite() {
        return Err(Error::InvalidArgument("power tails need a finite moment pole b".into()));
    }
    let eps = opts.epsilon.unwrap_or(0.2);
    let m_bound = match (&ef.phi2, opts.m_surrogate) {
        (_, Some(v)) => v,
        (Some(phi2), None) => m_surrogate_from_upper(phi2, eps)?,
        (None, None) => {
            return Err(Error::InvalidArgument(
                "an M surrogate is required without an upper moment envelope".into(),
            ))
        }
    };
    let phi = &ef.phi1;
    let mut lo = unit_level(phi)?;
    let mut w = None;
    for _ in 0..12 {
        let cert = certify_class_w(phi, Some((lo, b)), None)?;
        if cert.certified {
            w = Some(cert);
            break;
        }
        lo = b - 0.5 * (b - lo);
    }
    let w = w.ok_or_else(|| Error::NotInClassW("no verification range near the pole certifies".into()))?;

    let t_grid: Vec<f64> = x_grid.iter().filter(|x| **x >= std::f64::consts::E).map(|x| x.ln()).collect();
    if t_grid.is_empty() {
        return Err(Error::InvalidGrid("no abscissa x >= e".into()));
    }
    let uni_opts = UniOptions { w_range: Some(w.lambda_range), c_grid: None, cramer: None };
    let (env_t, chain) = unilateral_lower_envelope(phi, eps, m_bound, &t_grid, &uni_opts)?;
    let gamma = chain.dilation * b;
    let chain_points: Vec<EnvelopePoint> = env_t
        .points
        .iter()
        .map(|p| EnvelopePoint::from_ln(p.x.exp(), p.ln()))
        .collect();
    let ln_c = env_t
        .points
        .iter()
        .map(|p| p.ln() + gamma * p.x)
        .fold(f64::INFINITY, f64::min);
    let power_points = env_t
        .points
        .iter()
        .map(|p| EnvelopePoint::from_ln(p.x.exp(), ln_c - gamma * p.x))
        .collect();
    let chain_envelope = TailEnvelope::new(Side::Lower, "moment-chain", chain_points).monotone();
    let envelope = TailEnvelope::new(Side::Lower, "moment-power", power_points)
        .with_constant("C", ln_c.exp())
        .with_constant("gamma", gamma);
    Ok(PowerTailResult {
        envelope,
        chain_envelope,
        c: ln_c.exp(),
        gamma,
        b,
        gamma_in_open_range: gamma > 1.0 && gamma < b,
        chain,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeibullRecovery {
    pub m: f64,
    /// `exp(−C₁x^m)` dominating the raw Chernoff envelope on the grid.
    pub upper: TailEnvelope,
    /// `exp(−C₂x^m)` dominated by the raw closure envelope on its validity range.
    pub lower: Option<TailEnvelope>,
    pub c1: f64,
    pub c2: Option<f64>,
    pub raw_upper: TailEnvelope,
    pub raw_lower: TailEnvelope,
    /// Slope of `ln(−ln upper)` against `ln x` over the fit range.
    pub recovered_m: f64,
    /// Same fit on the raw lower envelope where it is positive.
    pub recovered_m_lower: Option<f64>,
    pub fit_range: (f64, f64),
    pub cramer: CramerCertificate,
}

fn slope_fit(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn loglog(env: &TailEnvelope, range: (f64, f64)) -> Option<f64> {
    let pts: Vec<(f64, f64)> = env
        .points
        .iter()
        .filter(|p| p.x >= range.0 && p.x <= range.1)
        .filter_map(|p| p.ln_value.filter(|l| *l < 0.0).map(|l| (p.x.ln(), (-l).ln())))
        .collect();
    slope_fit(&pts)
}

/// Bilateral envelopes `exp(−C₂x^m) ≤ T ≤ exp(−C₁x^m)` from
/// `c_low·p^{1/m} ≤ |ξ|_p ≤ c_high·p^{1/m}`.
pub fn weibull_recovery(
    m: f64,
    c_low: f64,
    c_high: f64,
    x_grid: &[f64],
    fit_range: (f64, f64),
) -> Result<WeibullRecovery> {
    check_abscissae(x_grid)?;
    let env = MomentEnvelope::weibull_type(m, c_low, c_high)?;
    let ef = to_exponential(&env)?;
    let phi2 = ef.phi2.clone().expect("weibull-type envelopes have an upper side");
    let xs: Vec<f64> = x_grid.iter().cloned().filter(|x| *x >= 1.0).collect();
    let ts: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ts_pos: Vec<f64> = ts.iter().cloned().filter(|t| *t > 0.0).collect();
    let up_t = chernoff_upper(&phi2, &ts_pos)?;
    let raw_upper = TailEnvelope::new(
        Side::Upper,
        "moment-chernoff",
        up_t.points.iter().map(|p| EnvelopePoint::from_ln(p.x.exp(), p.ln())).collect(),
    );
    let c1 = raw_upper
        .points
        .iter()
        .filter(|p| p.x >= std::f64::consts::E)
        .map(|p| -p.ln() / p.x.powf(m))
        .fold(f64::INFINITY, f64::min);
    if !c1.is_finite() {
        return Err(Error::InvalidGrid("no abscissa x >= e for the upper constant".into()));
    }
    let upper = TailEnvelope::new(
        Side::Upper,
        "moment-weibull-upper",
        xs.iter().map(|x| EnvelopePoint::from_ln(*x, -c1 * x.powf(m))).collect(),
    )
    .with_constant("C1", c1);

    let zs: Vec<f64> = ts.iter().cloned().filter(|t| *t >= 1.0).collect();
    let (low_t, _) = if zs.is_empty() {
        (TailEnvelope::new(Side::Lower, "moment-closure", Vec::new()), None)
    } else {
        let (e, r) = closure_lower_envelope(&ef.phi1, &phi2, &zs, &ClosureOptions::default())?;
        (e, Some(r))
    };
    let raw_lower = TailEnvelope::new(
        Side::Lower,
        "moment-closure",
        low_t.points.iter().map(|p| EnvelopePoint::from_ln(p.x.exp(), p.ln())).collect(),
    );
    let mut start = raw_lower.points.len();
    while start > 0 && raw_lower.points[start - 1].ln_value.is_some() {
        start -= 1;
    }
    let valid = &raw_lower.points[start..];
    let c2 = valid
        .iter()
        .map(|p| -p.ln() / p.x.powf(m))
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    let lower = c2.map(|c2| {
        TailEnvelope::new(
            Side::Lower,
            "moment-weibull-lower",
            valid.iter().map(|p| EnvelopePoint::from_ln(p.x, -c2 * p.x.powf(m))).collect(),
        )
        .with_constant("C2", c2)
    });
    let recovered_m = loglog(&raw_upper, fit_range)
        .ok_or_else(|| Error::InvalidGrid("too few abscissae in the fit range".into()))?;
    let recovered_m_lower = loglog(&raw_lower, fit_range);
    let g = PhiFunction::custom(
        &format!("{c1}*x^{m}"),
        move |x| c1 * x.powf(m),
        Domain::from(0.0).expect("half-line is a valid domain"),
    );
    let cramer = cramer_check(&g);
    Ok(WeibullRecovery {
        m,
        upper,
        lower,
        c1,
        c2,
        raw_upper,
        raw_lower,
        recovered_m,
        recovered_m_lower,
        fit_range,
        cramer,
    })
}
