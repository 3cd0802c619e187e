//! Adaptive Gauss–Kronrod quadrature on finite intervals and half-lines.

use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 4000;
const MAX_PANELS: usize = 1100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    /// Right end of the last panel integrated (the upper limit itself when
    /// it is finite).
    pub truncation: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let k = kron * h;
    let g = gauss * h;
    let err = (k - g).abs();
    if k.is_finite() {
        (k, err)
    } else {
        (f64::NAN, f64::INFINITY)
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Adaptive integral on a finite interval, bisecting the panel with the
/// largest error until the total error is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidArgument(format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, abs_error: 0.0, evaluations: 0, truncation: b });
    }
    let (v, e) = gk15(&f, a, b);
    if v.is_nan() {
        return Err(Error::NotConverged(format!("non-finite integrand on [{a}, {b}]")));
    }
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, error: e });
    let (mut total, mut error) = (v, e);
    let mut evals = 15;
    while error > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::NotConverged(format!(
                "[{a}, {b}]: error {error:e} after {MAX_INTERVALS} panels"
            )));
        }
        let p = heap.pop().expect("heap is nonempty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // Cannot split further; accept what we have.
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(&f, p.a, m);
        let (v2, e2) = gk15(&f, m, p.b);
        evals += 30;
        if v1.is_nan() || v2.is_nan() {
            return Err(Error::NotConverged(format!("non-finite integrand near {m}")));
        }
        total += v1 + v2 - p.value;
        error += e1 + e2 - p.error;
        heap.push(Piece { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Piece { a: m, b: p.b, value: v2, error: e2 });
    }
    // Re-sum to shed accumulated rounding from the running updates.
    let total: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(Quadrature { value: total, abs_error: error, evaluations: evals, truncation: b })
}

/// Integral over `[a, ∞)` of a nonnegative integrand.
///
/// Panels grow geometrically in both directions from `center` (a hint for
/// where the mass sits) with initial width `width`. The right tail stops once
/// a panel contributes less than `1e-16` of the running total and the
/// integrand at its end is equally negligible.
pub fn integrate_half_line<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    center: f64,
    width: f64,
    rel_tol: f64,
) -> Result<Quadrature> {
    let c = center.max(a);
    let w = if width > 0.0 && width.is_finite() { width } else { 1.0 };
    let mut total = 0.0;
    let mut error = 0.0;
    let mut evals = 0;

    let mut hi = c;
    let mut k = 0;
    while hi > a {
        let lo = (c - w * (2f64.powi(k + 1) - 1.0)).max(a);
        let q = integrate(&f, lo, hi, 1e-300, rel_tol)?;
        total += q.value;
        error += q.abs_error;
        evals += q.evaluations;
        hi = lo;
        k += 1;
    }

    let mut lo = c;
    for k in 0..MAX_PANELS {
        let hi = c + w * (2f64.powi(k as i32 + 1) - 1.0);
        if !hi.is_finite() {
            break;
        }
        let q = integrate(&f, lo, hi, rel_tol * total.abs() * 1e-3, rel_tol)?;
        total += q.value;
        error += q.abs_error;
        evals += q.evaluations;
        let end = f(hi).abs() * (hi - lo);
        let negligible = 1e-16 * total.abs();
        if k >= 1 && q.value.abs() <= negligible && end <= negligible {
            return Ok(Quadrature { value: total, abs_error: error, evaluations: evals, truncation: hi });
        }
        if total == 0.0 && k >= 60 {
            return Ok(Quadrature { value: 0.0, abs_error: error, evaluations: evals, truncation: hi });
        }
        lo = hi;
    }
    Err(Error::NotConverged(format!(
        "integrand still above threshold at truncation cap x = {lo:e} (running total {total:e})"
    )))
}

/// `∫_a^b f`, with `b = +∞` allowed.
pub fn quadrature<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    if b == f64::INFINITY {
        integrate_half_line(f, a, a, 1.0, tol)
    } else {
        integrate(f, a, b, 1e-300, tol)
    }
}
