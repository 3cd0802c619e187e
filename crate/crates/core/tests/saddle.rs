mod common;

use common::gauss_legendre;
use tailenv::oracle::OracleDistribution;
use tailenv::saddle::{
    compound_upper, cramer_check, epsilon_report, k_epsilon, ln_finite_measure_upper,
    optimize_epsilon, r_epsilon, BoundVariant,
};
use tailenv::{Domain, Error, PhiFunction};

fn half_line() -> Domain {
    Domain::from(0.0).unwrap()
}

fn power(k: f64, scale: f64) -> PhiFunction {
    PhiFunction::custom(&format!("{scale}x^{k}"), move |x: f64| scale * x.powf(k), half_line())
        .assume_convex()
}

/// `ln ∫₀^∞ exp(λx − ζ(x)) dx` centred on the analytic peak of a power ζ.
fn ln_laplace(lambda: f64, k: f64, scale: f64) -> f64 {
    let peak = (lambda / (scale * k)).powf(1.0 / (k - 1.0));
    let top = lambda * peak - scale * peak.powf(k);
    let hi = 4.0 * peak + 200.0;
    let v = gauss_legendre(|x| (lambda * x - scale * x.powf(k) - top).exp(), 0.0, hi, 20_000);
    top + v.ln()
}

#[test]
fn k_examples() {
    let lin = PhiFunction::linear(1.0, 0.0, half_line()).unwrap();
    assert!((k_epsilon(&lin, 0.5).unwrap().value - 2.0).abs() < 1e-10);
    let sq = power(2.0, 1.0);
    let half_sqrt_pi = 0.5 * std::f64::consts::PI.sqrt();
    assert!((k_epsilon(&sq, 1.0).unwrap().value - half_sqrt_pi).abs() < 1e-10);
    let log2 = PhiFunction::custom("2ln(1+x)", |x: f64| 2.0 * x.ln_1p(), half_line());
    assert!(matches!(k_epsilon(&log2, 0.4), Err(Error::Divergent(_))));
}

#[test]
fn r_examples() {
    let lin = PhiFunction::linear(1.0, 0.0, half_line()).unwrap();
    assert!((r_epsilon(&lin, 0.5).unwrap().value - 2.0).abs() < 1e-10);
    assert!((r_epsilon(&lin, 0.1).unwrap().value - 10.0).abs() < 1e-9);
    let want = 0.5 * (std::f64::consts::PI / 0.75).sqrt();
    assert!((r_epsilon(&power(2.0, 1.0), 0.5).unwrap().value - want).abs() < 1e-10);
    assert!((want - 1.02333).abs() < 1e-5);
}

#[test]
fn epsilon_report_takes_the_smaller_finite_entry() {
    let r = epsilon_report(&power(2.0, 0.5), 0.2).unwrap();
    let (k, rr) = (r.k.value().unwrap(), r.r.value().unwrap());
    assert!((k - 0.5 * (std::f64::consts::PI / 0.1).sqrt()).abs() < 1e-9);
    assert!((rr - 0.5 * (std::f64::consts::PI / 0.18).sqrt()).abs() < 1e-9);
    assert_eq!(r.m, Some(k.min(rr)));

    let log2 = PhiFunction::custom("2ln(1+x)", |x: f64| 2.0 * x.ln_1p(), half_line());
    let r = epsilon_report(&log2, 0.4).unwrap();
    assert!(r.k.value().is_none() && r.r.value().is_none() && r.m.is_none());
}

#[test]
fn k_and_r_nonincreasing_in_epsilon() {
    for z in [power(2.0, 0.5), power(1.5, 1.0), PhiFunction::linear(1.0, 0.0, half_line()).unwrap()] {
        let eps = [0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9];
        let ks: Vec<f64> = eps.iter().map(|e| k_epsilon(&z, *e).unwrap().value).collect();
        let rs: Vec<f64> = eps.iter().map(|e| r_epsilon(&z, *e).unwrap().value).collect();
        assert!(ks.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{}", z.name());
        assert!(rs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{}", z.name());
    }
}

#[test]
fn compound_examples() {
    let z = PhiFunction::quadratic(half_line());
    let b = compound_upper(&z, 3.0, 0.2).unwrap();
    let k = 0.5 * (std::f64::consts::PI / 0.1).sqrt();
    let r = 0.5 * (std::f64::consts::PI / 0.18).sqrt();
    assert!((b.m - r).abs() < 1e-9 && (b.k.unwrap() - k).abs() < 1e-9);
    assert!((b.conjugate - 3.75f64.powi(2) / 2.0).abs() < 1e-9);
    let truth = ln_laplace(3.0, 2.0, 0.5);
    // e^{4.5}·sqrt(2π)·Φ(3), evaluated in mpmath
    assert!((truth.exp() - 225.334_896_220_349_12).abs() < 1e-8);
    assert!((b.bound() - 2363.5).abs() < 0.5, "{}", b.bound());
    let damped = b.ln_damped_bound.unwrap().exp();
    assert!((damped - 777.1).abs() < 0.1, "{damped}");
    assert!(b.ln_bound >= truth && b.ln_damped_bound.unwrap() >= truth);
    assert!(b.ln_damped_bound.unwrap() <= b.ln_bound);
    assert!(b.ln_bound <= b.ln_k_bound.unwrap());
}

#[test]
fn finite_measure_shortcut() {
    let z = PhiFunction::linear(1.0, 0.0, Domain::closed(0.0, 1.0).unwrap()).unwrap();
    for l in [0.5f64, 2.0, 5.0] {
        let bound = ln_finite_measure_upper(&z, 1.0, l).unwrap();
        assert!((bound - (l - 1.0).max(0.0)).abs() < 1e-9);
        let exact = ((l - 1.0).exp() - 1.0) / (l - 1.0);
        assert!(exact.ln() <= bound);
    }
    assert!(ln_finite_measure_upper(&z, 0.0, 1.0).is_err());
}

#[test]
fn compound_dominates_the_integral() {
    let cases = [(1.0, 1.0), (2.0, 0.5), (1.5, 1.0)];
    for (k, scale) in cases {
        let z = if k == 1.0 {
            PhiFunction::linear(1.0, 0.0, half_line()).unwrap()
        } else {
            power(k, scale)
        };
        for lambda in [1.0, 3.0, 10.0, 30.0] {
            for eps in [0.05, 0.2, 0.5] {
                match compound_upper(&z, lambda, eps) {
                    Ok(b) => {
                        let truth = ln_laplace(lambda, k, scale);
                        let slack = b.ln_bound - truth;
                        assert!(slack >= -1e-9, "ζ={} λ={lambda} ε={eps}: {slack}", z.name());
                        if let Some(d) = b.ln_damped_bound {
                            assert!(d - truth >= -1e-9);
                        }
                    }
                    // I(λ) = ∞ for the linear exponent at λ ≥ 1
                    Err(Error::UnboundedObjective { .. }) => assert_eq!(k, 1.0),
                    Err(e) => panic!("ζ={} λ={lambda} ε={eps}: {e}", z.name()),
                }
            }
        }
    }
}

#[test]
fn optimized_epsilon_beats_the_grid() {
    let z = PhiFunction::quadratic(half_line());
    let best = optimize_epsilon(&z, 3.0, BoundVariant::Damped).unwrap();
    for e in [0.05, 0.2, 0.5] {
        let b = compound_upper(&z, 3.0, e).unwrap();
        assert!(best.ln_damped_bound.unwrap() <= b.ln_damped_bound.unwrap() + 1e-12);
    }
    assert!(best.ln_damped_bound.unwrap() >= ln_laplace(3.0, 2.0, 0.5));
}

#[test]
fn cramer_examples() {
    let c = cramer_check(&PhiFunction::linear(1.0, 0.0, half_line()).unwrap());
    assert!(c.certified);
    assert!((c.mu.unwrap() - 1.0).abs() < 1e-12);
    assert!(cramer_check(&power(2.0, 1.0)).certified);
    let log3 = PhiFunction::custom("3ln(1+x)", |x: f64| 3.0 * x.ln_1p(), half_line());
    assert!(!cramer_check(&log3).certified);
}

fn exponential_tail_function(law: OracleDistribution) -> PhiFunction {
    PhiFunction::custom(&law.name(), move |x: f64| -law.ln_tail(x), half_line())
}

#[test]
fn k_finite_for_cramer_laws() {
    let laws = [
        OracleDistribution::standard_normal(),
        OracleDistribution::Exponential { rate: 1.0 },
        OracleDistribution::Weibull { shape: 1.0 },
        OracleDistribution::Weibull { shape: 2.0 },
        OracleDistribution::Weibull { shape: 4.0 },
    ];
    let eps = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5];
    for law in laws {
        let g = exponential_tail_function(law);
        for e in eps {
            let k = k_epsilon(&g, e).unwrap_or_else(|err| panic!("{} ε={e}: {err}", law.name()));
            assert!(k.value.is_finite() && k.value > 0.0);
        }
        assert!(cramer_check(&g).certified, "{}", law.name());
    }
}

#[test]
fn k_diverges_for_pareto() {
    let g = exponential_tail_function(OracleDistribution::Pareto { alpha: 3.0 });
    for e in [0.01, 0.1, 0.3] {
        assert!(matches!(k_epsilon(&g, e), Err(Error::Divergent(_))), "ε={e}");
    }
    assert!(k_epsilon(&g, 0.5).is_ok());
    assert!(!cramer_check(&g).certified);
}

#[test]
fn stretched_exponential_is_integrable_but_not_cramer() {
    let g = exponential_tail_function(OracleDistribution::Weibull { shape: 0.5 });
    // ∫ exp(−ε√x) dx = 2/ε²
    let k = k_epsilon(&g, 0.1).unwrap().value;
    assert!((k - 200.0).abs() < 1e-6 * 200.0, "{k}");
    assert!(!cramer_check(&g).certified);
}

#[test]
fn input_validation() {
    let z = PhiFunction::quadratic(half_line());
    assert!(matches!(k_epsilon(&z, 0.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(k_epsilon(&z, 1.5), Err(Error::InvalidArgument(_))));
    assert!(matches!(compound_upper(&z, 1.0, 1.0), Err(Error::InvalidArgument(_))));
    let neg = PhiFunction::custom("x-1", |x: f64| x - 1.0, half_line());
    assert!(matches!(r_epsilon(&neg, 0.5), Err(Error::NegativeInput { .. })));
}
