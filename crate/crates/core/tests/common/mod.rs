//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's search or quadrature code.
#![allow(dead_code)]

/// `sup_{λ ∈ [lo, hi]} (λx − f(λ))` by a dense scan followed by ternary
/// refinement around the best scan point.
pub fn brute_sup(f: impl Fn(f64) -> f64, lo: f64, hi: f64, x: f64) -> (f64, f64) {
    let obj = |l: f64| l * x - f(l);
    let n = 20_000;
    let h = (hi - lo) / n as f64;
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 0..=n {
        let l = lo + h * i as f64;
        let v = obj(l);
        if v > best.0 {
            best = (v, l);
        }
    }
    let (mut a, mut b) = ((best.1 - h).max(lo), (best.1 + h).min(hi));
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if obj(m1) < obj(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    let l = 0.5 * (a + b);
    if obj(l) > best.0 {
        (obj(l), l)
    } else {
        best
    }
}

/// Composite Gauss-Legendre (5 nodes) on `[a, b]` with `n` panels.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let c = a + h * (i as f64 + 0.5);
        for k in 0..5 {
            s += W[k] * f(c + 0.5 * h * X[k]);
        }
    }
    0.5 * h * s
}

/// Upper normal tail `Q(x)` through libm's `erfc`.
pub fn normal_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
