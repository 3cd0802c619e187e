use rayon::prelude::*;
use serde::Serialize;
use libm::erfc;
use statrs::function::gamma::{gamma_ur, ln_gamma};

use super::quadrature::integrate_half_line;
use super::rng::CounterRng;
use super::special::{ln_normal_tail, normal_quantile, normal_tail};
use crate::error::{Error, Result};
use crate::funcore::{Domain, PhiFunction};
use crate::logspace::log_add;

const LN_SQRT_PI_OVER_2: f64 = -0.120_782_237_635_245_2;

/// Reference laws with exact tails and MGF exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum OracleDistribution {
    /// Centered normal with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// Exponential with the given rate.
    Exponential { rate: f64 },
    /// Tail `exp(-x^shape)` on `x ≥ 0`.
    Weibull { shape: f64 },
    /// Tail `x^-alpha` on `x ≥ 1`.
    Pareto { alpha: f64 },
    /// `exp(θ)` with `θ ~ Gamma(shape, rate)`; tail `Q(shape, rate·ln x)`.
    LogGamma { shape: f64, rate: f64 },
    /// `weight·N(0,1) + (1 − weight)·N(0, sigma2²)`.
    GaussianMixture { weight: f64, sigma2: f64 },
}

impl OracleDistribution {
    pub fn standard_normal() -> Self {
        OracleDistribution::Gaussian { sigma: 1.0 }
    }

    pub fn name(&self) -> String {
        match self {
            OracleDistribution::Gaussian { sigma } if *sigma == 1.0 => "gaussian".into(),
            OracleDistribution::Gaussian { sigma } => format!("gaussian(sigma={sigma})"),
            OracleDistribution::Exponential { rate } => format!("exponential(rate={rate})"),
            OracleDistribution::Weibull { shape } => format!("weibull(m={shape})"),
            OracleDistribution::Pareto { alpha } => format!("pareto(alpha={alpha})"),
            OracleDistribution::LogGamma { shape, rate } => {
                format!("log-gamma(shape={shape}, rate={rate})")
            }
            OracleDistribution::GaussianMixture { weight, sigma2 } => {
                format!("gaussian-mixture(w={weight}, sigma2={sigma2})")
            }
        }
    }

    /// Left end of the support.
    pub fn support_lower(&self) -> f64 {
        match self {
            OracleDistribution::Gaussian { .. } | OracleDistribution::GaussianMixture { .. } => {
                f64::NEG_INFINITY
            }
            OracleDistribution::Pareto { .. } | OracleDistribution::LogGamma { .. } => 1.0,
            _ => 0.0,
        }
    }

    /// Cramér's condition: the MGF is finite on a neighbourhood of zero.
    pub fn cramer(&self) -> bool {
        match self {
            OracleDistribution::Weibull { shape } => *shape >= 1.0,
            OracleDistribution::Pareto { .. } | OracleDistribution::LogGamma { .. } => false,
            _ => true,
        }
    }

    /// `P(X ≥ x)`.
    pub fn tail(&self, x: f64) -> f64 {
        match self {
            OracleDistribution::Gaussian { sigma } => normal_tail(x / sigma),
            OracleDistribution::GaussianMixture { weight, sigma2 } => {
                weight * normal_tail(x) + (1.0 - weight) * normal_tail(x / sigma2)
            }
            OracleDistribution::LogGamma { shape, rate } => {
                if x <= 1.0 {
                    1.0
                } else {
                    gamma_ur(*shape, rate * x.ln())
                }
            }
            _ => self.ln_tail(x).exp(),
        }
    }

    /// `ln P(X ≥ x)`, accurate where the tail underflows.
    pub fn ln_tail(&self, x: f64) -> f64 {
        match self {
            OracleDistribution::Gaussian { sigma } => ln_normal_tail(x / sigma),
            OracleDistribution::GaussianMixture { weight, sigma2 } => log_add(
                weight.ln() + ln_normal_tail(x),
                (1.0 - weight).ln() + ln_normal_tail(x / sigma2),
            ),
            OracleDistribution::Exponential { rate } => -(rate * x.max(0.0)),
            OracleDistribution::Weibull { shape } => -(x.max(0.0).powf(*shape)),
            OracleDistribution::Pareto { alpha } => -alpha * x.max(1.0).ln(),
            OracleDistribution::LogGamma { shape, rate } => {
                if x <= 1.0 {
                    return 0.0;
                }
                let t = rate * x.ln();
                let q = gamma_ur(*shape, t);
                if q > 1e-300 {
                    q.ln()
                } else {
                    // Leading term of the incomplete gamma asymptotics.
                    (shape - 1.0) * t.ln() - t - ln_gamma(*shape)
                        + (1.0 + (shape - 1.0) / t).ln()
                }
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        let sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt();
        match self {
            OracleDistribution::Gaussian { sigma } => {
                (-0.5 * (x / sigma).powi(2)).exp() / (sigma * sqrt_2pi)
            }
            OracleDistribution::GaussianMixture { weight, sigma2 } => {
                weight * (-0.5 * x * x).exp() / sqrt_2pi
                    + (1.0 - weight) * (-0.5 * (x / sigma2).powi(2)).exp() / (sigma2 * sqrt_2pi)
            }
            OracleDistribution::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            OracleDistribution::Weibull { shape: m } => {
                if x <= 0.0 {
                    0.0
                } else {
                    m * x.powf(m - 1.0) * (-x.powf(*m)).exp()
                }
            }
            OracleDistribution::Pareto { alpha } => {
                if x < 1.0 {
                    0.0
                } else {
                    alpha * x.powf(-alpha - 1.0)
                }
            }
            OracleDistribution::LogGamma { shape, rate } => {
                if x <= 1.0 {
                    return 0.0;
                }
                let t = x.ln();
                (shape * rate.ln() + (shape - 1.0) * t.ln() - rate * t - ln_gamma(*shape) - t).exp()
            }
        }
    }

    /// Domain of `λ ≥ 0` on which the MGF is finite, or `None` when it is
    /// finite only at zero.
    pub fn mgf_domain(&self) -> Option<(f64, f64)> {
        match self {
            OracleDistribution::Exponential { rate } => Some((0.0, *rate)),
            OracleDistribution::Weibull { shape } if *shape == 1.0 => Some((0.0, 1.0)),
            OracleDistribution::Weibull { shape } if *shape > 1.0 => Some((0.0, f64::INFINITY)),
            OracleDistribution::Gaussian { .. } | OracleDistribution::GaussianMixture { .. } => {
                Some((0.0, f64::INFINITY))
            }
            _ => None,
        }
    }

    /// `ln E exp(λX)` for `λ ≥ 0`; `None` where the MGF is infinite.
    pub fn ln_mgf(&self, lambda: f64) -> Option<f64> {
        if lambda == 0.0 {
            return Some(0.0);
        }
        let (lo, hi) = self.mgf_domain()?;
        if lambda < lo || lambda >= hi {
            return None;
        }
        Some(match self {
            OracleDistribution::Gaussian { sigma } => 0.5 * sigma * sigma * lambda * lambda,
            OracleDistribution::GaussianMixture { weight, sigma2 } => log_add(
                weight.ln() + 0.5 * lambda * lambda,
                (1.0 - weight).ln() + 0.5 * sigma2 * sigma2 * lambda * lambda,
            ),
            OracleDistribution::Exponential { rate } => -(-lambda / rate).ln_1p(),
            OracleDistribution::Weibull { shape } if *shape == 1.0 => -(-lambda).ln_1p(),
            OracleDistribution::Weibull { shape } if *shape == 2.0 => {
                let half = 0.5 * lambda;
                let ln_i = LN_SQRT_PI_OVER_2 + half * half + (2.0 - erfc(half)).ln();
                log_add(0.0, lambda.ln() + ln_i)
            }
            OracleDistribution::Weibull { shape } => {
                let ln_i = weibull_ln_laplace(*shape, lambda).ok()?;
                log_add(0.0, lambda.ln() + ln_i)
            }
            _ => return None,
        })
    }

    /// The MGF exponent as a function on `[lower, b)` where `b` is the end
    /// of the MGF domain.
    pub fn mgf_exponent(&self, lower: f64) -> Result<PhiFunction> {
        let (_, hi) = self
            .mgf_domain()
            .ok_or_else(|| Error::InvalidArgument(format!("{} has no finite MGF", self.name())))?;
        let law = *self;
        let domain = Domain::new(lower, hi)?;
        let f = PhiFunction::custom(
            &format!("ln-mgf[{}]", self.name()),
            move |l| law.ln_mgf(l).unwrap_or(f64::INFINITY),
            domain,
        );
        let f = match *self {
            OracleDistribution::Gaussian { sigma } => f.with_derivative(move |l| sigma * sigma * l),
            OracleDistribution::Exponential { rate } => f.with_derivative(move |l| 1.0 / (rate - l)),
            OracleDistribution::Weibull { shape } if shape == 1.0 => {
                f.with_derivative(|l| 1.0 / (1.0 - l))
            }
            OracleDistribution::Weibull { shape } if shape != 2.0 => {
                let (values, slopes) = (Memo::new(), Memo::new());
                PhiFunction::custom(
                    &format!("ln-mgf[{}]", self.name()),
                    move |l| values.get_or(l, || law.ln_mgf(l).unwrap_or(f64::INFINITY)),
                    domain,
                )
                .with_derivative(move |l| slopes.get_or(l, || weibull_mgf_slope(shape, l)))
            }
            OracleDistribution::GaussianMixture { weight, sigma2 } => f.with_derivative(move |l| {
                let a = weight.ln() + 0.5 * l * l;
                let b = (1.0 - weight).ln() + 0.5 * sigma2 * sigma2 * l * l;
                let m = a.max(b);
                let (ea, eb) = ((a - m).exp(), (b - m).exp());
                (ea * l + eb * sigma2 * sigma2 * l) / (ea + eb)
            }),
            _ => f,
        };
        Ok(f.assume_convex())
    }

    /// `(E|X|^p)^{1/p}` where finite.
    pub fn lp_norm(&self, p: f64) -> Option<f64> {
        let abs_gauss = |p: f64| {
            (0.5 * p * 2f64.ln() + ln_gamma(0.5 * (p + 1.0)) - 0.5 * std::f64::consts::PI.ln())
                .exp()
        };
        let moment = match self {
            OracleDistribution::Gaussian { sigma } => sigma.powf(p) * abs_gauss(p),
            OracleDistribution::GaussianMixture { weight, sigma2 } => {
                (weight + (1.0 - weight) * sigma2.powf(p)) * abs_gauss(p)
            }
            OracleDistribution::Exponential { rate } => ln_gamma(1.0 + p).exp() / rate.powf(p),
            OracleDistribution::Weibull { shape } => ln_gamma(1.0 + p / shape).exp(),
            OracleDistribution::Pareto { alpha } => {
                if p >= *alpha {
                    return None;
                }
                alpha / (alpha - p)
            }
            OracleDistribution::LogGamma { shape, rate } => {
                if p >= *rate {
                    return None;
                }
                (rate / (rate - p)).powf(*shape)
            }
        };
        Some(moment.powf(1.0 / p))
    }

    /// Inverse-transform sample number `index` of the stream `seed`.
    pub fn sample_at(&self, rng: &CounterRng, index: u64) -> f64 {
        let u = rng.uniform(2 * index);
        match self {
            OracleDistribution::Gaussian { sigma } => sigma * normal_quantile(u),
            OracleDistribution::GaussianMixture { weight, sigma2 } => {
                let z = normal_quantile(u);
                if rng.uniform(2 * index + 1) < *weight {
                    z
                } else {
                    sigma2 * z
                }
            }
            OracleDistribution::Exponential { rate } => -u.ln() / rate,
            OracleDistribution::Weibull { shape } => (-u.ln()).powf(1.0 / shape),
            OracleDistribution::Pareto { alpha } => u.powf(-1.0 / alpha),
            OracleDistribution::LogGamma { shape, rate } => {
                // Integer shapes only: a sum of exponentials.
                let k = shape.round().max(1.0) as u64;
                let t: f64 = (0..k)
                    .map(|j| -rng.uniform(2 * index + (j << 40)).ln())
                    .sum::<f64>()
                    / rate;
                t.exp()
            }
        }
    }

    /// `n` samples from stream `seed`, identical for identical arguments.
    pub fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        let rng = CounterRng::new(seed);
        (0..n as u64).into_par_iter().map(|i| self.sample_at(&rng, i)).collect()
    }
}

/// `ln ∫₀^∞ exp(λx − x^m) dx` for `m > 1`, by quadrature around the peak.
struct Laplace {
    /// `ln ∫₀^∞ e^{λx − x^m} dx`.
    ln_i0: f64,
    /// `∫ x e^{λx − x^m} / ∫ e^{λx − x^m}`.
    mean: Option<f64>,
}

fn weibull_laplace(m: f64, lambda: f64, with_mean: bool) -> Result<Laplace> {
    let peak = (lambda / m).powf(1.0 / (m - 1.0));
    let pm = peak.powf(m);
    let top = lambda * peak - pm;
    let curvature = m * (m - 1.0) * peak.powf(m - 2.0);
    let width = if curvature > 0.0 { (1.0 / curvature).sqrt().min(1.0) } else { 1.0 };
    // Exponent relative to the peak, in u = x − peak; written so the large
    // terms λx and x^m never cancel in floating point.
    let shifted = |u: f64| {
        let t = u / peak;
        (pm * (m * t - (m * t.ln_1p()).exp_m1())).exp()
    };
    let q0 = integrate_half_line(shifted, -peak, 0.0, width, 1e-13)?;
    let mean = if with_mean {
        let q1 = integrate_half_line(|u| (peak + u) * shifted(u), -peak, 0.0, width, 1e-13)?;
        Some(q1.value / q0.value)
    } else {
        None
    };
    Ok(Laplace { ln_i0: top + q0.value.ln(), mean })
}

fn weibull_ln_laplace(m: f64, lambda: f64) -> Result<f64> {
    Ok(weibull_laplace(m, lambda, false)?.ln_i0)
}

/// Derivative of `ln(1 + λI₀(λ))`, i.e. `(1/λ + mean)·λI₀/(1 + λI₀)`.
fn weibull_mgf_slope(m: f64, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        // E X = Γ(1 + 1/m)
        return ln_gamma(1.0 + 1.0 / m).exp();
    }
    match weibull_laplace(m, lambda, true) {
        Ok(Laplace { ln_i0, mean: Some(mean) }) => {
            let a = lambda.ln() + ln_i0;
            let weight = 1.0 / (1.0 + (-a).exp());
            (1.0 / lambda + mean) * weight
        }
        _ => f64::NAN,
    }
}

/// Memo table for exponents that cost a quadrature per evaluation.
struct Memo {
    table: std::sync::Mutex<std::collections::HashMap<u64, f64>>,
}

impl Memo {
    const CAPACITY: usize = 1 << 18;

    fn new() -> Self {
        Memo { table: std::sync::Mutex::new(std::collections::HashMap::new()) }
    }

    fn get_or(&self, x: f64, f: impl FnOnce() -> f64) -> f64 {
        let key = x.to_bits();
        if let Some(v) = self.table.lock().map(|t| t.get(&key).copied()).ok().flatten() {
            return v;
        }
        let v = f();
        if let Ok(mut t) = self.table.lock() {
            if t.len() >= Self::CAPACITY {
                t.clear();
            }
            t.insert(key, v);
        }
        v
    }
}
