//! Gaussian tail functions accurate far into the tail.

use libm::erfc;
use statrs::function::erf::erfc_inv;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Mills ratio `Q(x)/φ(x)` by backward continued fraction, for `x ≥ 5`.
fn mills_ratio(x: f64) -> f64 {
    let mut t = x;
    for k in (1..=400).rev() {
        t = x + (k as f64) / t;
    }
    1.0 / t
}

/// `Q(x) = P(Z ≥ x)` for a standard normal `Z`.
pub fn normal_tail(x: f64) -> f64 {
    if x > 8.0 {
        ln_normal_tail(x).exp()
    } else {
        0.5 * erfc(x / std::f64::consts::SQRT_2)
    }
}

/// `ln Q(x)`, finite for every finite `x`.
pub fn ln_normal_tail(x: f64) -> f64 {
    if x > 8.0 {
        -0.5 * x * x - LN_SQRT_2PI + mills_ratio(x).ln()
    } else {
        (0.5 * erfc(x / std::f64::consts::SQRT_2)).ln()
    }
}

/// Standard normal quantile.
pub fn normal_quantile(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}
