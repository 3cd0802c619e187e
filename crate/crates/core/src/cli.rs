//! Batch interface behind the `tailenv` binary.
//!
//! Every subcommand writes one JSON report (and optionally a long-format CSV
//! of its envelopes). Exit status: 0 on success, 2 when a check fails or a
//! computation cannot be certified, 1 on input errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bi_lower::{closure_lower_envelope, refined_envelope, richter_sandwich, ClosureOptions};
use crate::envelope::{chernoff_upper, TailEnvelope};
use crate::error::Error;
use crate::funcore::{conjugate_extended, Domain, PhiFunction};
use crate::moment_bridge::{
    power_tail_lower, to_exponential, weibull_recovery, MomentEnvelope, PowerTailOptions,
};
use crate::oracle::OracleDistribution;
use crate::saddle::{compound_upper, m_surrogate_from_upper, optimize_epsilon, BoundVariant};
use crate::tauber::{tauberian_check, Ladders, TauberSource};
use crate::uni_lower::{unilateral_lower_envelope, UniOptions};
use crate::validate::{default_suite, validate, ValidateOptions, DEFAULT_SEED};

pub const SCHEMA_VERSION: u32 = 1;

const GRID_HELP: &str = "grid as `start:stop:step` (inclusive) or a comma list `a,b,c`";

#[derive(Debug, Parser)]
#[command(
    name = "tailenv",
    version,
    about = "Two-sided tail envelopes from moment generating function bounds",
    after_help = "Grids are written `start:stop:step` (stop included when hit) or as an \
                  explicit comma list `1,2,5`. Reports are JSON; `--normalize` drops the \
                  timestamp so identical runs give identical bytes."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Young–Fenchel conjugate of a function on a grid.
    Conjugate {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long, default_value = "1:20:1", help = GRID_HELP)]
        x: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Chernoff upper envelope exp(−φ*(x)), plus compound integral estimates.
    Upper {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long, default_value = "1:8:0.5", help = GRID_HELP)]
        x: String,
        /// λ values at which to bound ∫₀^∞ exp(λx − ζ(x)) dx with ζ the input function.
        #[arg(long, help = GRID_HELP)]
        compound_lambda: Option<String>,
        /// Fixed ε for the compound estimate; optimized over ε when omitted.
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Lower envelope from an upper MGF bound (unilateral conjugate chain).
    LowerUni {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long, default_value = "1:8:0.25", help = GRID_HELP)]
        x: String,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        /// Bound on M(ε); defaults to K[max(φ*, 0)](ε).
        #[arg(long)]
        m_surrogate: Option<f64>,
        /// Verification range `lo,hi` for the class-W certificate.
        #[arg(long)]
        w_range: Option<String>,
        /// Mark the input as violating Cramér's condition.
        #[arg(long)]
        no_cramer: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Lower envelope from two-sided MGF bounds (saddle-point closure).
    LowerBi {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long, default_value = "1:8:0.25", help = GRID_HELP)]
        x: String,
        /// Use φ1 = (1 − δ²)φ as the lower MGF exponent (φ1 = φ otherwise).
        #[arg(long)]
        pinch: Option<f64>,
        /// Also fit the closed-form envelope exp(−(1−cδ)φ*(z/(1−cδ))) for this δ.
        #[arg(long)]
        refined: Option<f64>,
        /// Add the Δ = c/λ geometry family.
        #[arg(long)]
        offsets: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// exp(−φ*(x) − c₂x) ≤ T(x) ≤ exp(−φ*(x)) for an exact MGF exponent.
    Richter {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long, default_value = "1:8:0.25", help = GRID_HELP)]
        x: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Tail envelopes from envelopes on the norms (E|ξ|^p)^{1/p}.
    Moments {
        #[command(flatten)]
        source: MomentArgs,
        #[arg(long, help = GRID_HELP)]
        x: Option<String>,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long)]
        m_surrogate: Option<f64>,
        /// Range `lo,hi` of the log-log slope fit.
        #[arg(long, default_value = "2,10")]
        fit_range: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Tauberian diagnostic: K_mgf from the MGF side, K_tail from the tail side.
    Tauber {
        #[command(flatten)]
        function: FunctionArgs,
        /// Reference law, e.g. `gaussian`, `gaussian:2`, `weibull:2`.
        #[arg(long, default_value = "gaussian")]
        dist: String,
        /// Multiply the law by this factor.
        #[arg(long = "dist-scale", default_value_t = 1.0)]
        dist_scale: f64,
        /// Estimate the tail side from this many seeded samples instead.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, env = "TAILENV_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 50.0)]
        lambda_cap: f64,
        #[arg(long, default_value_t = 8.0)]
        x_cap: f64,
        /// Ladder length; points are cap·2^{−k/2}.
        #[arg(long, default_value_t = 8)]
        ladder_points: usize,
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sandwich suite against the reference laws.
    Validate {
        /// One law (e.g. `gaussian`, `weibull:4`); the full suite when omitted.
        #[arg(long)]
        dist: Option<String>,
        #[arg(long, env = "TAILENV_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value = "1:8:0.25", help = GRID_HELP)]
        x: String,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// scale·λ²/2
    Quadratic,
    /// λ⁴/4
    Quartic,
    /// λ^p/p · ln(e + λ)^r
    PowerLog,
    /// slope·λ + intercept
    Linear,
    /// Free-form expression in λ.
    Expr,
    /// Two-column table `lambda,value`.
    Csv,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FunctionArgs {
    #[arg(long, value_enum, default_value = "quadratic")]
    pub family: Family,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 1.0)]
    pub slope: f64,
    #[arg(long, default_value_t = 0.0)]
    pub intercept: f64,
    /// Expression for `--family expr`, e.g. `lambda^2/2 + ln(1 + lambda)`.
    #[arg(long)]
    pub expr: Option<String>,
    #[arg(long, default_value = "lambda")]
    pub var: String,
    /// Table for `--family csv`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Left end of the domain.
    #[arg(long, default_value_t = 0.0)]
    pub lambda_min: f64,
    /// Right end of the domain (open); unbounded when omitted.
    #[arg(long)]
    pub lambda_max: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MomentArgs {
    /// Table `p,lower,upper` (upper optional).
    #[arg(long)]
    pub moments_csv: Option<PathBuf>,
    /// c_low·p^{1/m} ≤ |ξ|_p ≤ c_high·p^{1/m}.
    #[arg(long)]
    pub weibull_m: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub c_low: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_high: f64,
    /// |ξ|_p ≥ C·(b − p)^{−β} on [1, b).
    #[arg(long)]
    pub pole: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub pole_constant: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// JSON report path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Long-format envelope table `envelope,x,value,ln_value`.
    #[arg(long = "csv-out")]
    pub csv_out: Option<PathBuf>,
    /// Omit the timestamp so identical runs produce identical bytes.
    #[arg(long)]
    pub normalize: bool,
}

/// Outcome of a subcommand before it is written out.
struct Outcome {
    result: Value,
    envelopes: Vec<TailEnvelope>,
    passed: bool,
    diagnostics: Vec<String>,
}

impl Outcome {
    fn ok(result: Value, envelopes: Vec<TailEnvelope>) -> Self {
        Outcome { result, envelopes, passed: true, diagnostics: Vec::new() }
    }
}

/// Input errors map to exit 1; everything else the library reports is a
/// numeric failure carried in the report.
fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Csv { .. }
            | Error::InvalidGrid(_)
            | Error::InvalidArgument(_)
            | Error::Io(_)
            | Error::OutOfDomain { .. }
            | Error::EmptyDomain { .. }
    )
}

/// Parses `start:stop:step` or `a,b,c` into a strictly increasing grid.
pub fn parse_grid(s: &str) -> anyhow::Result<Vec<f64>> {
    let s = s.trim();
    let grid: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, step] = parts.as_slice() else {
            bail!("grid `{s}` must have the form start:stop:step");
        };
        let (a, b, step): (f64, f64, f64) = (
            a.trim().parse().with_context(|| format!("bad grid start `{a}`"))?,
            b.trim().parse().with_context(|| format!("bad grid stop `{b}`"))?,
            step.trim().parse().with_context(|| format!("bad grid step `{step}`"))?,
        );
        if !(step > 0.0 && a.is_finite() && b.is_finite() && b >= a) {
            bail!("grid `{s}` needs finite start <= stop and a positive step");
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        if n > 1_000_000 {
            bail!("grid `{s}` has more than a million points");
        }
        (0..=n).map(|i| a + i as f64 * step).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad grid value `{t}`")))
            .collect::<anyhow::Result<_>>()?
    };
    if grid.is_empty() {
        bail!("grid `{s}` is empty");
    }
    if let Some(i) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        bail!("grid `{s}` is not strictly increasing at position {}", i + 1);
    }
    Ok(grid)
}

fn parse_pair(s: &str) -> anyhow::Result<(f64, f64)> {
    let g = parse_grid(s)?;
    match g.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => bail!("expected two values `lo,hi`, got `{s}`"),
    }
}

/// Parses `name[:a[,b]]` into a reference law.
pub fn parse_dist(s: &str) -> anyhow::Result<OracleDistribution> {
    let (name, params) = match s.split_once(':') {
        Some((n, p)) => (n, p.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>()?),
        None => (s, Vec::new()),
    };
    let arg = |i: usize, default: Option<f64>| -> anyhow::Result<f64> {
        params
            .get(i)
            .copied()
            .or(default)
            .ok_or_else(|| anyhow!("law `{s}` needs parameter {}", i + 1))
    };
    let law = match name.trim().to_ascii_lowercase().as_str() {
        "gaussian" | "normal" => OracleDistribution::Gaussian { sigma: arg(0, Some(1.0))? },
        "exponential" => OracleDistribution::Exponential { rate: arg(0, Some(1.0))? },
        "weibull" => OracleDistribution::Weibull { shape: arg(0, None)? },
        "pareto" => OracleDistribution::Pareto { alpha: arg(0, None)? },
        "log-gamma" | "loggamma" => OracleDistribution::LogGamma {
            shape: arg(0, None)?,
            rate: arg(1, None)?,
        },
        "mixture" => OracleDistribution::GaussianMixture {
            weight: arg(0, None)?,
            sigma2: arg(1, None)?,
        },
        other => bail!("unknown law `{other}`"),
    };
    Ok(law)
}

/// Builds the input function described by the flags.
pub fn build_function(f: &FunctionArgs) -> anyhow::Result<PhiFunction> {
    let domain = match f.lambda_max {
        Some(b) => Domain::new(f.lambda_min, b)?,
        None => Domain::from(f.lambda_min)?,
    };
    let phi = match f.family {
        Family::Quadratic => PhiFunction::scaled_quadratic(f.scale, domain)?,
        Family::Quartic => PhiFunction::power_log(4.0, 0.0, domain)?,
        Family::PowerLog => PhiFunction::power_log(f.p, f.r, domain)?,
        Family::Linear => PhiFunction::linear(f.slope, f.intercept, domain)?,
        Family::Expr => {
            let src = f.expr.as_deref().ok_or_else(|| anyhow!("--family expr needs --expr"))?;
            PhiFunction::expression(src, &f.var, domain)?
        }
        Family::Csv => {
            let path = f.csv.as_deref().ok_or_else(|| anyhow!("--family csv needs --csv PATH"))?;
            PhiFunction::from_csv_path(path).with_context(|| format!("reading {}", path.display()))?
        }
    };
    Ok(phi)
}

fn envelope_ordering(lower: &[&TailEnvelope], upper: &TailEnvelope) -> (bool, Vec<String>) {
    let mut notes = Vec::new();
    for env in lower {
        for p in &env.points {
            if let Some(u) = upper.at(p.x) {
                if p.value > u.value + 1e-12 || p.ln() > u.ln() + 1e-9 * u.ln().abs().max(1.0) {
                    notes.push(format!(
                        "{} envelope exceeds the Chernoff envelope at x = {}",
                        env.provenance, p.x
                    ));
                }
            }
        }
    }
    (notes.is_empty(), notes)
}

fn to_value<T: Serialize>(v: &T) -> anyhow::Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn run_conjugate(function: &FunctionArgs, x: &str) -> anyhow::Result<Outcome> {
    let phi = build_function(function)?;
    let xs = parse_grid(x)?;
    let r = conjugate_extended(&phi, &xs)?;
    Ok(Outcome::ok(json!({ "function": phi.name(), "conjugate": to_value(&r)? }), Vec::new()))
}

fn run_upper(
    function: &FunctionArgs,
    x: &str,
    compound_lambda: Option<&str>,
    epsilon: Option<f64>,
) -> anyhow::Result<Outcome> {
    let phi = build_function(function)?;
    let xs = parse_grid(x)?;
    let upper = chernoff_upper(&phi, &xs)?;
    let mut compound = Vec::new();
    if let Some(ls) = compound_lambda {
        for l in parse_grid(ls)? {
            let b = match epsilon {
                Some(e) => compound_upper(&phi, l, e)?,
                None => optimize_epsilon(&phi, l, BoundVariant::Min)?,
            };
            compound.push(b);
        }
    }
    Ok(Outcome::ok(
        json!({ "function": phi.name(), "upper": to_value(&upper)?, "compound": to_value(&compound)? }),
        vec![upper],
    ))
}

fn run_lower_uni(
    function: &FunctionArgs,
    x: &str,
    epsilon: f64,
    m_surrogate: Option<f64>,
    w_range: Option<&str>,
    no_cramer: bool,
) -> anyhow::Result<Outcome> {
    let phi = build_function(function)?;
    let xs = parse_grid(x)?;
    let upper = chernoff_upper(&phi, &xs)?;
    let m = match m_surrogate {
        Some(m) => m,
        None => m_surrogate_from_upper(&phi, epsilon)?,
    };
    let opts = UniOptions {
        w_range: w_range.map(parse_pair).transpose()?,
        c_grid: None,
        cramer: no_cramer.then_some(false),
    };
    let (lower, cert) = unilateral_lower_envelope(&phi, epsilon, m, &xs, &opts)?;
    let (passed, diagnostics) = envelope_ordering(&[&lower], &upper);
    Ok(Outcome {
        result: json!({
            "function": phi.name(),
            "lower": to_value(&lower)?,
            "upper": to_value(&upper)?,
            "certificate": to_value(&cert)?,
        }),
        envelopes: vec![upper, lower],
        passed,
        diagnostics,
    })
}

fn run_lower_bi(
    function: &FunctionArgs,
    x: &str,
    pinch: Option<f64>,
    refined: Option<f64>,
    offsets: bool,
) -> anyhow::Result<Outcome> {
    let phi = build_function(function)?;
    let xs = parse_grid(x)?;
    let upper = chernoff_upper(&phi, &xs)?;
    let phi1 = match pinch {
        Some(d) if d > 0.0 && d < 1.0 => phi.scaled(1.0 - d * d),
        Some(d) => bail!("--pinch {d} is not in (0, 1)"),
        None => phi.clone(),
    };
    let mut opts = ClosureOptions::default();
    if offsets {
        opts = opts.with_offsets();
    }
    let (lower, report) = closure_lower_envelope(&phi1, &phi, &xs, &opts)?;
    let mut envelopes = vec![upper.clone(), lower.clone()];
    let mut result = json!({
        "function": phi.name(),
        "pinch": pinch,
        "lower": to_value(&lower)?,
        "upper": to_value(&upper)?,
        "closure": to_value(&report)?,
    });
    if let Some(delta) = refined {
        let (env, cert) = refined_envelope(&phi, delta, &xs)?;
        result["refined"] = json!({ "envelope": to_value(&env)?, "certificate": to_value(&cert)? });
        envelopes.push(env);
    }
    let lowers: Vec<&TailEnvelope> = envelopes[1..].iter().collect();
    let (passed, diagnostics) = envelope_ordering(&lowers, &upper);
    Ok(Outcome { result, envelopes, passed, diagnostics })
}

fn run_richter(function: &FunctionArgs, x: &str) -> anyhow::Result<Outcome> {
    let phi = build_function(function)?;
    let xs = parse_grid(x)?;
    let r = richter_sandwich(&phi, &xs)?;
    let (passed, diagnostics) = envelope_ordering(&[&r.lower], &r.upper);
    Ok(Outcome {
        result: json!({ "function": phi.name(), "richter": to_value(&r)? }),
        envelopes: vec![r.upper.clone(), r.lower.clone()],
        passed,
        diagnostics,
    })
}

fn run_moments(
    source: &MomentArgs,
    x: Option<&str>,
    epsilon: f64,
    m_surrogate: Option<f64>,
    fit_range: &str,
) -> anyhow::Result<Outcome> {
    let chosen = [source.moments_csv.is_some(), source.weibull_m.is_some(), source.pole.is_some()]
        .iter()
        .filter(|b| **b)
        .count();
    if chosen != 1 {
        bail!("give exactly one of --moments-csv, --weibull-m, --pole");
    }
    if let Some(m) = source.weibull_m {
        let xs = parse_grid(x.unwrap_or("1:10:0.25"))?;
        let w = weibull_recovery(m, source.c_low, source.c_high, &xs, parse_pair(fit_range)?)?;
        let mut envs = vec![w.upper.clone(), w.raw_upper.clone(), w.raw_lower.clone()];
        envs.extend(w.lower.clone());
        let lowers: Vec<&TailEnvelope> = envs.iter().filter(|e| e.side == crate::Side::Lower).collect();
        let (passed, diagnostics) = envelope_ordering(&lowers, &w.raw_upper);
        return Ok(Outcome { result: json!({ "weibull": to_value(&w)? }), envelopes: envs, passed, diagnostics });
    }
    let opts = PowerTailOptions { epsilon: Some(epsilon), m_surrogate };
    if let Some(b) = source.pole {
        let env = MomentEnvelope::power_pole(source.pole_constant, b, source.beta)?;
        let xs = parse_grid(x.unwrap_or("3,5,10,20,50,100,200,500,1000"))?;
        let r = power_tail_lower(&env, &xs, &opts)?;
        let mut diagnostics = Vec::new();
        if !r.gamma_in_open_range {
            diagnostics.push(format!("realized exponent {} lies outside (1, {b})", r.gamma));
        }
        return Ok(Outcome {
            result: json!({ "power_tail": to_value(&r)? }),
            envelopes: vec![r.envelope.clone(), r.chain_envelope.clone()],
            passed: true,
            diagnostics,
        });
    }
    let path = source.moments_csv.as_deref().expect("checked above");
    let env = MomentEnvelope::from_csv_path(path).with_context(|| format!("reading {}", path.display()))?;
    let xs = parse_grid(x.unwrap_or("1:10:0.25"))?;
    moments_from_table(&env, &xs)
}

/// Chernoff upper and closure lower envelopes for a tabulated moment envelope.
fn moments_from_table(env: &MomentEnvelope, xs: &[f64]) -> anyhow::Result<Outcome> {
    let ef = to_exponential(env)?;
    let phi2 = ef
        .phi2
        .as_ref()
        .ok_or_else(|| anyhow!("a tabulated envelope needs the upper column for tail bounds"))?;
    let lift = |e: &TailEnvelope, name: &str| {
        TailEnvelope::new(
            e.side,
            name,
            e.points
                .iter()
                .map(|p| crate::EnvelopePoint::from_ln(p.x.exp(), p.ln()))
                .collect(),
        )
    };
    let ts: Vec<f64> = xs.iter().filter(|x| **x > 1.0).map(|x| x.ln()).collect();
    let upper = lift(&chernoff_upper(phi2, &ts)?, "moment-chernoff");
    let zs: Vec<f64> = ts.iter().cloned().filter(|t| *t >= 1.0).collect();
    let mut envelopes = vec![upper.clone()];
    let mut result = json!({ "degenerate": ef.degenerate, "upper": to_value(&upper)? });
    if !zs.is_empty() {
        let (low, report) = closure_lower_envelope(&ef.phi1, phi2, &zs, &ClosureOptions::default())?;
        let lower = lift(&low, "moment-closure");
        result["lower"] = to_value(&lower)?;
        result["closure"] = to_value(&report)?;
        envelopes.push(lower);
    }
    let (passed, diagnostics) = envelope_ordering(&envelopes[1..].iter().collect::<Vec<_>>(), &upper);
    Ok(Outcome { result, envelopes, passed, diagnostics })
}

#[allow(clippy::too_many_arguments)]
fn run_tauber(
    function: &FunctionArgs,
    dist: &str,
    scale: f64,
    samples: Option<usize>,
    seed: u64,
    lambda_cap: f64,
    x_cap: f64,
    ladder_points: usize,
    tolerance: f64,
) -> anyhow::Result<Outcome> {
    let phi = build_function(function)?;
    let law = parse_dist(dist)?;
    let (source, ladders) = match samples {
        Some(n) => {
            let s: Vec<f64> = law.sample(seed, n).into_iter().map(|v| scale * v).collect();
            let x: Vec<f64> = (0..3).rev().map(|k| x_cap * 2f64.powi(-k)).collect();
            (TauberSource::Samples(s), Ladders { lambda: Vec::new(), x })
        }
        None => (
            TauberSource::Oracle { law, scale },
            Ladders {
                lambda: Ladders::geometric(lambda_cap, ladder_points),
                x: Ladders::geometric(x_cap, ladder_points),
            },
        ),
    };
    let r = tauberian_check(&phi, &source, &ladders, tolerance)?;
    let mut diagnostics = Vec::new();
    for (side, est) in [("K_mgf", &r.k_mgf), ("K_tail", &r.k_tail)] {
        if let Some(e) = est {
            if !e.converged {
                diagnostics.push(format!("{side} has not settled at the ladder cap"));
            }
        }
    }
    Ok(Outcome {
        passed: r.consistent.unwrap_or(true),
        result: json!({ "law": law.name(), "scale": scale, "seed": samples.map(|_| seed), "tauber": to_value(&r)? }),
        envelopes: Vec::new(),
        diagnostics,
    })
}

fn run_validate(dist: Option<&str>, seed: u64, samples: usize, x: &str, epsilon: f64) -> anyhow::Result<Outcome> {
    let laws = match dist {
        Some(d) => vec![parse_dist(d)?],
        None => default_suite(),
    };
    let opts = ValidateOptions { seed, x_grid: parse_grid(x)?, samples, epsilon };
    let r = validate(&laws, &opts)?;
    let diagnostics = r
        .laws
        .iter()
        .flat_map(|l| {
            l.checks
                .iter()
                .filter(|c| !c.passed)
                .map(move |c| format!("{}: {} failed", l.name, c.name))
        })
        .collect();
    let envelopes = r
        .laws
        .iter()
        .flat_map(|l| l.upper.iter().chain(&l.lower).cloned())
        .collect();
    Ok(Outcome { passed: r.passed, result: to_value(&r)?, envelopes, diagnostics })
}

fn write_csv(path: &Path, envelopes: &[TailEnvelope]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["envelope", "x", "value", "ln_value"])?;
    for e in envelopes {
        for p in &e.points {
            let ln = p.ln_value.map(|v| format!("{v:e}")).unwrap_or_default();
            w.write_record([e.provenance.as_str(), &p.x.to_string(), &format!("{:e}", p.value), &ln])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Conjugate { .. } => "conjugate",
        Command::Upper { .. } => "upper",
        Command::LowerUni { .. } => "lower-uni",
        Command::LowerBi { .. } => "lower-bi",
        Command::Richter { .. } => "richter",
        Command::Moments { .. } => "moments",
        Command::Tauber { .. } => "tauber",
        Command::Validate { .. } => "validate",
    }
}

fn output_args(c: &Command) -> &OutputArgs {
    match c {
        Command::Conjugate { output, .. }
        | Command::Upper { output, .. }
        | Command::LowerUni { output, .. }
        | Command::LowerBi { output, .. }
        | Command::Richter { output, .. }
        | Command::Moments { output, .. }
        | Command::Tauber { output, .. }
        | Command::Validate { output, .. } => output,
    }
}

fn config_value(c: &Command) -> Value {
    // Debug-free, stable rendering of the arguments actually used.
    match c {
        Command::Conjugate { function, x, .. } => json!({ "function": function, "x": x }),
        Command::Upper { function, x, compound_lambda, epsilon, .. } => {
            json!({ "function": function, "x": x, "compound_lambda": compound_lambda, "epsilon": epsilon })
        }
        Command::LowerUni { function, x, epsilon, m_surrogate, w_range, no_cramer, .. } => json!({
            "function": function, "x": x, "epsilon": epsilon, "m_surrogate": m_surrogate,
            "w_range": w_range, "no_cramer": no_cramer,
        }),
        Command::LowerBi { function, x, pinch, refined, offsets, .. } => json!({
            "function": function, "x": x, "pinch": pinch, "refined": refined, "offsets": offsets,
        }),
        Command::Richter { function, x, .. } => json!({ "function": function, "x": x }),
        Command::Moments { source, x, epsilon, m_surrogate, fit_range, .. } => json!({
            "source": source, "x": x, "epsilon": epsilon, "m_surrogate": m_surrogate, "fit_range": fit_range,
        }),
        Command::Tauber { function, dist, dist_scale, samples, seed, lambda_cap, x_cap, ladder_points, tolerance, .. } => json!({
            "function": function, "dist": dist, "dist_scale": dist_scale, "samples": samples, "seed": seed,
            "lambda_cap": lambda_cap, "x_cap": x_cap, "ladder_points": ladder_points, "tolerance": tolerance,
        }),
        Command::Validate { dist, seed, samples, x, epsilon, .. } => json!({
            "dist": dist, "seed": seed, "samples": samples, "x": x, "epsilon": epsilon,
        }),
    }
}

fn dispatch(c: &Command) -> anyhow::Result<Outcome> {
    match c {
        Command::Conjugate { function, x, .. } => run_conjugate(function, x),
        Command::Upper { function, x, compound_lambda, epsilon, .. } => {
            run_upper(function, x, compound_lambda.as_deref(), *epsilon)
        }
        Command::LowerUni { function, x, epsilon, m_surrogate, w_range, no_cramer, .. } => {
            run_lower_uni(function, x, *epsilon, *m_surrogate, w_range.as_deref(), *no_cramer)
        }
        Command::LowerBi { function, x, pinch, refined, offsets, .. } => {
            run_lower_bi(function, x, *pinch, *refined, *offsets)
        }
        Command::Richter { function, x, .. } => run_richter(function, x),
        Command::Moments { source, x, epsilon, m_surrogate, fit_range, .. } => {
            run_moments(source, x.as_deref(), *epsilon, *m_surrogate, fit_range)
        }
        Command::Tauber { function, dist, dist_scale, samples, seed, lambda_cap, x_cap, ladder_points, tolerance, .. } => {
            run_tauber(function, dist, *dist_scale, *samples, *seed, *lambda_cap, *x_cap, *ladder_points, *tolerance)
        }
        Command::Validate { dist, seed, samples, x, epsilon, .. } => {
            run_validate(dist.as_deref(), *seed, *samples, x, *epsilon)
        }
    }
}

/// Runs one parsed invocation and returns the process exit status.
///
/// Input errors are returned as `Err`; the caller exits with 1.
pub fn run(cli: &Cli) -> anyhow::Result<i32> {
    let out = output_args(&cli.command);
    let outcome = match dispatch(&cli.command) {
        Ok(o) => Ok(o),
        Err(e) => match e.downcast_ref::<Error>() {
            Some(lib) if !is_input_error(lib) => Err(lib.clone()),
            _ => return Err(e),
        },
    };
    let mut report = serde_json::Map::new();
    report.insert("schema_version".into(), json!(SCHEMA_VERSION));
    report.insert("tool".into(), json!("tailenv"));
    report.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
    report.insert("command".into(), json!(command_name(&cli.command)));
    if !out.normalize {
        report.insert("timestamp".into(), json!(timestamp()));
    }
    report.insert("config".into(), config_value(&cli.command));
    let code = match outcome {
        Ok(o) => {
            report.insert("status".into(), json!(if o.passed { "ok" } else { "check_failed" }));
            report.insert("passed".into(), json!(o.passed));
            report.insert("diagnostics".into(), json!(o.diagnostics));
            report.insert("result".into(), o.result);
            if let Some(path) = &out.csv_out {
                write_csv(path, &o.envelopes)?;
            }
            if o.passed { 0 } else { 2 }
        }
        Err(e) => {
            report.insert("status".into(), json!("numeric_failure"));
            report.insert("passed".into(), json!(false));
            report.insert("error".into(), json!(e.to_string()));
            report.insert("error_detail".into(), json!(format!("{e:?}")));
            2
        }
    };
    let mut text = serde_json::to_string_pretty(&Value::Object(report))?;
    text.push('\n');
    match &out.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(code)
}
