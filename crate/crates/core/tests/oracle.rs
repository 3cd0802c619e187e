mod common;

use common::{gauss_legendre, normal_tail};
use tailenv::oracle::rng::CounterRng;
use tailenv::oracle::{empirical_tail, integrate_half_line, quadrature, OracleDistribution};
use tailenv::{conjugate_at, Error, Tolerances};

fn suite() -> Vec<OracleDistribution> {
    vec![
        OracleDistribution::standard_normal(),
        OracleDistribution::Gaussian { sigma: 0.7 },
        OracleDistribution::Exponential { rate: 1.0 },
        OracleDistribution::Weibull { shape: 0.5 },
        OracleDistribution::Weibull { shape: 1.0 },
        OracleDistribution::Weibull { shape: 2.0 },
        OracleDistribution::Weibull { shape: 4.0 },
        OracleDistribution::Pareto { alpha: 3.0 },
        OracleDistribution::GaussianMixture { weight: 0.5, sigma2: 0.5 },
        OracleDistribution::LogGamma { shape: 3.0, rate: 3.0 },
    ]
}

/// `∫_x^∞ density` by composite Gauss-Legendre on a window that holds all
/// but a negligible part of the mass.
fn tail_by_density(law: OracleDistribution, x: f64) -> f64 {
    match law {
        OracleDistribution::Pareto { .. } | OracleDistribution::LogGamma { .. } => {
            let t0 = x.max(1.0).ln();
            gauss_legendre(|t| law.density(t.exp()) * t.exp(), t0, t0 + 60.0, 20_000)
        }
        OracleDistribution::Weibull { shape } => {
            let lo = x.max(0.0);
            let hi = (lo.powf(shape) + 45.0).powf(1.0 / shape);
            gauss_legendre(|y| law.density(y), lo, hi, 40_000)
        }
        OracleDistribution::Exponential { rate } => {
            let lo = x.max(0.0);
            gauss_legendre(|y| law.density(y), lo, lo + 45.0 / rate, 20_000)
        }
        _ => gauss_legendre(|y| law.density(y), x, x.max(0.0) + 40.0, 20_000),
    }
}

#[test]
fn quadrature_examples() {
    let q = quadrature(|x| (-x).exp(), 0.0, f64::INFINITY, 1e-13).unwrap();
    assert!((q.value - 1.0).abs() <= 1e-12);
    let q = quadrature(|x| (-x * x).exp(), 0.0, f64::INFINITY, 1e-13).unwrap();
    assert!((q.value - 0.886_226_9).abs() < 1e-7);
    assert!((q.value - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    let q = quadrature(|x| (3.0 * x - 0.5 * x * x).exp(), 0.0, f64::INFINITY, 1e-13).unwrap();
    // e^{4.5}·sqrt(2π)·Φ(3)
    let want = 4.5f64.exp() * (2.0 * std::f64::consts::PI).sqrt() * (1.0 - normal_tail(3.0));
    assert!((q.value - want).abs() <= 1e-9 * want && (q.value - 225.34).abs() < 1e-2);
    let q = quadrature(|x| x.sin().powi(2), 0.0, std::f64::consts::PI, 1e-13).unwrap();
    assert!((q.value - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
}

#[test]
fn divergent_integral_does_not_converge() {
    let r = integrate_half_line(|x| 1.0 / (1.0 + x), 0.0, 0.0, 1.0, 1e-10);
    assert!(matches!(r, Err(Error::NotConverged(_))));
}

#[test]
fn empirical_examples() {
    let t = empirical_tail(&[5.0], &[4.0, 5.0, 6.0]);
    let fr: Vec<f64> = t.rows.iter().map(|r| r.fraction).collect();
    assert_eq!(fr, vec![1.0, 1.0, 0.0]);
    assert_eq!(t.n, 1);

    let z = OracleDistribution::standard_normal().sample(42, 1_000_000);
    let t = empirical_tail(&z, &[0.0, 1.0, 2.0, 3.0]);
    let row = t.rows[2];
    assert!((normal_tail(2.0) - 0.02275).abs() < 1e-5);
    assert!((row.fraction - normal_tail(2.0)).abs() <= 3.0 * row.halfwidth, "{row:?}");
    assert!(row.wilson_lower <= row.fraction && row.fraction <= row.wilson_upper);
    assert!(t.rows.windows(2).all(|w| w[1].count <= w[0].count));
}

#[test]
fn tails_match_density_quadrature() {
    for law in suite() {
        let xs: Vec<f64> = match law {
            OracleDistribution::Weibull { shape } if shape < 1.0 => vec![0.5, 1.0, 4.0, 25.0, 100.0],
            OracleDistribution::Pareto { .. } | OracleDistribution::LogGamma { .. } => {
                vec![1.0, 2.0, 10.0, 100.0]
            }
            OracleDistribution::Gaussian { .. } | OracleDistribution::GaussianMixture { .. } => {
                vec![-1.0, 0.0, 1.0, 3.0, 6.0]
            }
            _ => vec![0.0, 0.5, 1.0, 2.0, 3.0],
        };
        for x in xs {
            let exact = law.tail(x);
            let quad = tail_by_density(law, x);
            assert!((quad - exact).abs() <= 1e-9 * exact, "{} x={x}: {quad} vs {exact}", law.name());
            assert!((law.ln_tail(x) - exact.ln()).abs() <= 1e-12 * exact.ln().abs().max(1.0));
        }
    }
}

#[test]
fn deep_ln_tails_are_finite() {
    let z = OracleDistribution::standard_normal();
    // −ln Q(40) = 800 + ln(40·sqrt(2π)) + O(1/1600)
    let want = 800.0 + (40.0 * (2.0 * std::f64::consts::PI).sqrt()).ln();
    assert!((-z.ln_tail(40.0) - want).abs() < 1e-3);
    assert_eq!(z.tail(40.0), 0.0);
    let w = OracleDistribution::Weibull { shape: 4.0 };
    assert_eq!(w.ln_tail(10.0), -1e4);
}

#[test]
fn mgf_matches_quadrature() {
    let cases: Vec<(OracleDistribution, Vec<f64>)> = vec![
        (OracleDistribution::standard_normal(), vec![0.5, 1.0, 3.0]),
        (OracleDistribution::Gaussian { sigma: 0.7 }, vec![1.0, 4.0]),
        (OracleDistribution::Exponential { rate: 1.0 }, vec![0.2, 0.5, 0.8]),
        (OracleDistribution::Weibull { shape: 1.0 }, vec![0.3, 0.6]),
        (OracleDistribution::Weibull { shape: 2.0 }, vec![0.5, 1.0, 3.0, 6.0]),
        (OracleDistribution::Weibull { shape: 4.0 }, vec![0.5, 2.0, 5.0]),
        (OracleDistribution::GaussianMixture { weight: 0.5, sigma2: 0.5 }, vec![1.0, 2.5]),
    ];
    for (law, lambdas) in cases {
        for l in lambdas {
            let (lo, hi) = match law {
                OracleDistribution::Exponential { .. } | OracleDistribution::Weibull { shape: 1.0 } => {
                    (0.0, 60.0 / (1.0 - l))
                }
                OracleDistribution::Weibull { shape } => (0.0, 3.0 * (l / shape).powf(1.0 / (shape - 1.0)) + 10.0),
                _ => (-40.0, 40.0 + 3.0 * l),
            };
            let mgf = gauss_legendre(|x| (l * x).exp() * law.density(x), lo, hi, 40_000);
            let exact = law.ln_mgf(l).unwrap().exp();
            assert!((mgf - exact).abs() <= 1e-7 * exact, "{} λ={l}: {mgf} vs {exact}", law.name());
        }
    }
    assert!(OracleDistribution::Pareto { alpha: 3.0 }.ln_mgf(0.1).is_none());
    assert!(OracleDistribution::Weibull { shape: 0.5 }.ln_mgf(0.1).is_none());
    assert!(OracleDistribution::Exponential { rate: 1.0 }.ln_mgf(1.0).is_none());
}

#[test]
fn mgf_exponent_is_convex_with_zero_at_origin() {
    for law in suite() {
        let Some((_, hi)) = law.mgf_domain() else { continue };
        assert_eq!(law.ln_mgf(0.0), Some(0.0));
        let top = hi.min(8.0) * 0.95;
        let ls: Vec<f64> = (0..=60).map(|k| top * k as f64 / 60.0).collect();
        let v: Vec<f64> = ls.iter().map(|l| law.ln_mgf(*l).unwrap()).collect();
        let tol = 1e-9 * v.last().unwrap().abs().max(1.0);
        assert!(v.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] >= -tol), "{}", law.name());
    }
}

#[test]
fn chernoff_dominates_the_tail() {
    let tol = Tolerances::default();
    for law in suite() {
        let Ok(phi) = law.mgf_exponent(0.0) else {
            assert!(!law.cramer(), "{}", law.name());
            continue;
        };
        assert!(law.cramer());
        for k in 0..=24 {
            let x = 1.0 + 0.5 * k as f64;
            let rate = conjugate_at(&phi, x, &tol).unwrap().value;
            assert!(law.ln_tail(x) <= -rate + 1e-9, "{} x={x}", law.name());
        }
    }
}

#[test]
fn tails_are_nonincreasing_probabilities() {
    for law in suite() {
        let mut prev = law.tail(-50.0);
        assert!(prev <= 1.0);
        for k in 0..=400 {
            let t = law.tail(-5.0 + 0.1 * k as f64);
            assert!((0.0..=1.0).contains(&t) && t <= prev, "{}", law.name());
            prev = t;
        }
        assert!(law.tail(0.0) <= 1.0);
    }
}

#[test]
fn sampling_is_deterministic() {
    let law = OracleDistribution::GaussianMixture { weight: 0.3, sigma2: 2.0 };
    let a = law.sample(7, 10_000);
    assert_eq!(a, law.sample(7, 10_000));
    assert_eq!(a[..100], law.sample(7, 100)[..]);
    assert_ne!(a, law.sample(8, 10_000));
    let rng = CounterRng::new(7);
    let u: Vec<f64> = (0..100_000).map(|i| rng.uniform(i)).collect();
    assert!(u.iter().all(|v| *v > 0.0 && *v < 1.0));
    let mean = u.iter().sum::<f64>() / u.len() as f64;
    assert!((mean - 0.5).abs() < 5.0 * (1.0 / 12.0 / u.len() as f64).sqrt());
    assert_eq!(rng.bits(12345), CounterRng::new(7).bits(12345));
}

#[test]
fn samples_follow_their_tails() {
    for law in suite() {
        let s = law.sample(11, 200_000);
        let xs = [1.0, 2.0];
        let t = empirical_tail(&s, &xs);
        for row in &t.rows {
            let exact = law.tail(row.x);
            // 99.99% Wilson bands are about twice the 95% ones
            assert!((row.fraction - exact).abs() <= 2.0 * row.halfwidth + 1e-12, "{} x={}", law.name(), row.x);
        }
    }
}
