//! Oracle sandwich suite: Chernoff upper ≥ exact tail ≥ every lower
//! envelope, with exact MGF exponents as input.

use serde::Serialize;

use crate::bi_lower::{closure_lower_envelope, richter_sandwich, ClosureOptions};
use crate::envelope::{chernoff_upper, TailEnvelope};
use crate::error::Result;
use crate::oracle::{empirical_tail, OracleDistribution};
use crate::saddle::m_surrogate_from_upper;
use crate::uni_lower::{unilateral_lower_envelope, UniOptions};

pub const DEFAULT_SEED: u64 = 42;

/// Allowed violation of an inequality between tail values.
pub const SLACK: f64 = 1e-12;

/// Allowed violation between log tail values, relative to `max(1, |ln T|)`.
pub const LN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub seed: u64,
    pub x_grid: Vec<f64>,
    pub samples: usize,
    pub epsilon: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            seed: DEFAULT_SEED,
            x_grid: (4..=32).map(|i| i as f64 * 0.25).collect(),
            samples: 200_000,
            epsilon: 0.2,
        }
    }
}

/// The laws checked when no single law is requested.
pub fn default_suite() -> Vec<OracleDistribution> {
    vec![
        OracleDistribution::standard_normal(),
        OracleDistribution::Exponential { rate: 1.0 },
        OracleDistribution::Weibull { shape: 2.0 },
        OracleDistribution::Weibull { shape: 4.0 },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Smallest `larger − smaller` over the compared points.
    pub worst_slack: Option<f64>,
    pub worst_x: Option<f64>,
    pub points: usize,
    pub error: Option<String>,
}

impl Check {
    fn failed(name: &str, error: String) -> Self {
        Check { name: name.into(), passed: false, worst_slack: None, worst_x: None, points: 0, error: Some(error) }
    }

    fn compare(name: &str, pairs: impl Iterator<Item = (f64, f64, f64)>, slack: f64) -> Self {
        let mut worst: Option<(f64, f64)> = None;
        let mut n = 0;
        for (x, big, small) in pairs {
            n += 1;
            let s = big - small;
            if worst.map_or(true, |w| s < w.0) {
                worst = Some((s, x));
            }
        }
        Check {
            name: name.into(),
            passed: worst.map_or(true, |w| w.0 >= -slack),
            worst_slack: worst.map(|w| w.0),
            worst_x: worst.map(|w| w.1),
            points: n,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawReport {
    pub law: OracleDistribution,
    pub name: String,
    pub cramer: bool,
    pub exact: Vec<(f64, f64)>,
    pub upper: Option<TailEnvelope>,
    pub lower: Vec<TailEnvelope>,
    pub constants: Vec<(String, f64)>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub samples: usize,
    pub epsilon: f64,
    pub x_grid: Vec<f64>,
    pub laws: Vec<LawReport>,
    pub passed: bool,
}

/// Pairs `(x, ln big, ln small)` rescaled so a uniform slack applies.
fn scaled_ln(x: f64, big: f64, small: f64) -> (f64, f64, f64) {
    let s = big.abs().max(1.0);
    (x, big / s, small / s)
}

fn lower_checks(name: &str, env: &TailEnvelope, law: &OracleDistribution, upper: &TailEnvelope) -> Vec<Check> {
    vec![
        Check::compare(
            &format!("{name} <= exact"),
            env.points.iter().map(|p| (p.x, law.tail(p.x), p.value)),
            SLACK,
        ),
        Check::compare(
            &format!("ln {name} <= ln exact"),
            env.points.iter().map(|p| scaled_ln(p.x, law.ln_tail(p.x), p.ln())),
            LN_SLACK,
        ),
        Check::compare(
            &format!("{name} <= chernoff"),
            env.points
                .iter()
                .filter_map(|p| upper.at(p.x).map(|u| (p.x, u.value, p.value))),
            SLACK,
        ),
    ]
}

/// Runs the sandwich checks for one law.
pub fn validate_law(law: OracleDistribution, opts: &ValidateOptions) -> Result<LawReport> {
    let xs = &opts.x_grid;
    let exact: Vec<(f64, f64)> = xs.iter().map(|x| (*x, law.tail(*x))).collect();
    let mut checks = Vec::new();
    let mut lower = Vec::new();
    let mut constants = Vec::new();

    let phi = law.mgf_exponent(0.0)?;
    let upper = chernoff_upper(&phi, xs)?;
    checks.push(Check::compare(
        "exact <= chernoff",
        upper.points.iter().zip(&exact).map(|(u, e)| (u.x, u.value, e.1)),
        SLACK,
    ));
    checks.push(Check::compare(
        "ln exact <= ln chernoff",
        upper.points.iter().map(|u| scaled_ln(u.x, u.ln(), law.ln_tail(u.x))),
        LN_SLACK,
    ));

    match m_surrogate_from_upper(&phi, opts.epsilon)
        .and_then(|m| unilateral_lower_envelope(&phi, opts.epsilon, m, xs, &UniOptions::default()))
    {
        Ok((env, cert)) => {
            constants.push(("unilateral.c1".into(), cert.c1));
            constants.push(("unilateral.c2".into(), cert.c2));
            constants.push(("unilateral.dilation".into(), cert.dilation));
            constants.push(("unilateral.x_valid_from".into(), cert.x_valid_from));
            checks.extend(lower_checks("unilateral", &env, &law, &upper));
            lower.push(env);
        }
        Err(e) => checks.push(Check::failed("unilateral", e.to_string())),
    }
    match closure_lower_envelope(&phi, &phi, xs, &ClosureOptions::default()) {
        Ok((env, _)) => {
            checks.extend(lower_checks("closure", &env, &law, &upper));
            lower.push(env);
        }
        Err(e) => checks.push(Check::failed("closure", e.to_string())),
    }
    match richter_sandwich(&phi, xs) {
        Ok(r) => {
            constants.push(("richter.c2".into(), r.c2));
            checks.extend(lower_checks("richter", &r.lower, &law, &upper));
            lower.push(r.lower);
        }
        Err(e) => checks.push(Check::failed("richter", e.to_string())),
    }

    if opts.samples > 0 {
        let samples = law.sample(opts.seed, opts.samples);
        let emp = empirical_tail(&samples, xs);
        let n = opts.samples as f64;
        // Four Wilson half-widths plus one count of discreteness.
        checks.push(Check::compare(
            "empirical ~ exact",
            emp.rows.iter().zip(&exact).map(|(r, e)| {
                (r.x, 4.0 * r.halfwidth + 1.0 / n, (r.fraction - e.1).abs())
            }),
            0.0,
        ));
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(LawReport {
        name: law.name(),
        cramer: law.cramer(),
        law,
        exact,
        upper: Some(upper),
        lower,
        constants,
        checks,
        passed,
    })
}

/// Runs the suite over `laws`, in order.
pub fn validate(laws: &[OracleDistribution], opts: &ValidateOptions) -> Result<ValidationReport> {
    let laws = laws
        .iter()
        .map(|l| validate_law(*l, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(ValidationReport {
        seed: opts.seed,
        samples: opts.samples,
        epsilon: opts.epsilon,
        x_grid: opts.x_grid.clone(),
        passed: laws.iter().all(|l| l.passed),
        laws,
    })
}
