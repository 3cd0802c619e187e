mod common;

use common::{gauss_legendre, normal_tail};
use tailenv::oracle::OracleDistribution;
use tailenv::saddle::m_surrogate_from_upper;
use tailenv::uni_lower::{
    certify_class_w, phi1, unilateral_lower_envelope, unit_level, UniOptions,
};
use tailenv::{Domain, Error, PhiFunction};

fn gauss() -> PhiFunction {
    PhiFunction::quadratic(Domain::from(0.0).unwrap())
}

fn x_grid() -> Vec<f64> {
    (0..=28).map(|k| 1.0 + 0.25 * k as f64).collect()
}

#[test]
fn phi1_examples() {
    // ln((e² − 1)/2) and ln(e − 1), evaluated in mpmath
    assert!((phi1(&gauss(), 2.0).unwrap() - 1.161_439_361_571_195_6).abs() < 1e-12);
    let lin = PhiFunction::linear(1.0, 0.0, Domain::from(0.0).unwrap()).unwrap();
    assert!((phi1(&lin, 1.0).unwrap() - 0.541_324_854_612_918_1).abs() < 1e-12);
    for l in [10.0f64, 40.0, 100.0, 1e3] {
        let gap = phi1(&gauss(), l).unwrap() - (l * l / 2.0 - l.ln());
        assert!(gap.abs() < 1e-12 + (-l * l / 2.0).exp() * 2.0);
    }
    assert!(phi1(&gauss(), 0.0).is_err());
}

#[test]
fn class_w_for_the_quadratic() {
    let lo = 2f64.sqrt();
    let w = certify_class_w(&gauss(), Some((lo, 100.0)), None).unwrap();
    assert!(w.certified && w.margin >= 0.0);
    // c(λ) = sqrt(2 φ₁(λ))/λ, minimized on a dense grid
    let c_min = (0..=200_000)
        .map(|i| lo + (100.0 - lo) * i as f64 / 200_000.0)
        .map(|l| (2.0 * ((l * l / 2.0f64).exp_m1() / l).ln()).sqrt() / l)
        .fold(f64::INFINITY, f64::min);
    assert!((c_min - 0.441).abs() < 5e-4, "{c_min}");
    assert!(w.c1 <= c_min && c_min - w.c1 < 1e-3, "{} vs {c_min}", w.c1);
    assert!((unit_level(&gauss()).unwrap() - lo).abs() < 1e-9);

    let from_one = PhiFunction::quadratic(Domain::from(1.0).unwrap());
    let w = certify_class_w(&from_one, Some((1.0, 100.0)), None).unwrap();
    assert!(!w.certified);
    assert!(((0.5f64.exp() - 1.0).ln() + 0.4328).abs() < 1e-4);
}

#[test]
fn regularly_varying_input_is_class_w() {
    let f = PhiFunction::power_log(2.0, 1.0, Domain::from(0.0).unwrap()).unwrap();
    assert!(certify_class_w(&f, None, None).unwrap().certified);
    let q = PhiFunction::power_log(4.0, 0.0, Domain::from(0.0).unwrap()).unwrap();
    assert!(certify_class_w(&q, None, None).unwrap().certified);
}

#[test]
fn gaussian_chain() {
    let m = 0.5 * (std::f64::consts::PI / 0.1).sqrt();
    assert!((m - 2.8025).abs() < 1e-4);
    assert!((m_surrogate_from_upper(&gauss(), 0.2).unwrap() - m).abs() < 1e-8);
    let (env, cert) =
        unilateral_lower_envelope(&gauss(), 0.2, m, &x_grid(), &UniOptions::default()).unwrap();
    assert!((cert.c1 - 0.441).abs() < 1e-3);
    assert_eq!(cert.lambda1, 4.0);
    assert!((cert.c2 - 0.257).abs() < 2e-3, "{}", cert.c2);
    assert!((cert.dilation - 4.87).abs() < 0.03, "{}", cert.dilation);
    assert!((cert.dilation * cert.c2 * 0.8 - 1.0).abs() < 1e-12);
    assert!(cert.super_convexity_assumed);
    assert!(cert.x_valid_from >= 1.0);

    let a = cert.dilation;
    for p in &env.points {
        let q = normal_tail(p.x);
        assert!(p.value <= q, "x={}: {} > {q}", p.x, p.value);
        let closed = -(a * p.x).powi(2) / 2.0;
        assert!((p.ln() - closed).abs() < 1e-9 * closed.abs());
    }
    assert!(env.values().windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn dilation_at_least_one_across_epsilon() {
    for eps in [0.05, 0.1, 0.2, 0.4, 0.6] {
        let m = m_surrogate_from_upper(&gauss(), eps).unwrap();
        let (_, cert) =
            unilateral_lower_envelope(&gauss(), eps, m, &x_grid(), &UniOptions::default())
                .unwrap();
        assert!(cert.dilation >= 1.0);
        assert!(cert.c2 <= cert.c1);
        assert!((cert.dilation * cert.c2 * (1.0 - eps) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn no_cramer_annotation() {
    let law = OracleDistribution::Pareto { alpha: 3.0 };
    assert!(!law.cramer() && law.ln_mgf(0.5).is_none());
    let opts = UniOptions { cramer: Some(law.cramer()), ..UniOptions::default() };
    let (env, cert) = unilateral_lower_envelope(&gauss(), 0.2, 2.8, &x_grid(), &opts).unwrap();
    assert!(cert.annotations.iter().any(|a| a.starts_with("no_cramer")));
    // the Pareto tail is far heavier than any Gaussian-type envelope
    for p in &env.points {
        assert!(p.value <= law.tail(p.x));
    }
}

#[test]
fn chain_errors() {
    let g = gauss();
    assert!(matches!(
        unilateral_lower_envelope(&g, 0.2, f64::INFINITY, &x_grid(), &UniOptions::default()),
        Err(Error::Divergent(_))
    ));
    assert!(matches!(
        unilateral_lower_envelope(&g, 1.0, 2.0, &x_grid(), &UniOptions::default()),
        Err(Error::InvalidArgument(_))
    ));
    let from_one = PhiFunction::quadratic(Domain::from(1.0).unwrap());
    let opts = UniOptions { w_range: Some((1.0, 100.0)), ..UniOptions::default() };
    assert!(matches!(
        unilateral_lower_envelope(&from_one, 0.2, 2.0, &x_grid(), &opts),
        Err(Error::NotInClassW(_))
    ));
}

#[test]
fn integration_by_parts_identity() {
    let laws = [
        (OracleDistribution::Exponential { rate: 1.0 }, vec![0.25, 0.5, 0.8]),
        (OracleDistribution::Weibull { shape: 1.0 }, vec![0.5]),
        (OracleDistribution::Weibull { shape: 2.0 }, vec![0.5, 1.0, 3.0]),
        (OracleDistribution::Weibull { shape: 4.0 }, vec![1.0, 2.0, 5.0]),
    ];
    for (law, lambdas) in laws {
        for l in lambdas {
            let upper = if matches!(law, OracleDistribution::Exponential { .. })
                || matches!(law, OracleDistribution::Weibull { shape } if shape == 1.0)
            {
                200.0 / (1.0 - l)
            } else {
                40.0
            };
            let integral = gauss_legendre(|x| (l * x + law.ln_tail(x)).exp(), 0.0, upper, 40_000);
            let mgf = law.ln_mgf(l).unwrap().exp();
            let lhs = 1.0 + l * integral;
            assert!((lhs - mgf).abs() <= 1e-9 * mgf, "{} λ={l}: {lhs} vs {mgf}", law.name());
        }
    }
}
