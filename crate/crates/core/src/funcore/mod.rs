//! Scalar functions and their convex calculus.

mod conjugate;
mod phi;
pub mod search;

pub use conjugate::{
    biconjugate, conjugate, conjugate_at, conjugate_extended, conjugate_function, conjugate_with,
    s_value, saddle_x0, ConjugateResult, SupPoint,
};
pub(crate) use conjugate::check_abscissae;
pub use phi::{Domain, Expression, Form, Grid, PhiFunction};

use crate::error::Result;

/// Certifies convexity from second differences on `grid` and, on success,
/// returns the function marked convex.
pub fn certify_convex(f: &PhiFunction, grid: &[f64]) -> Result<Option<PhiFunction>> {
    if f.is_certified_convex() {
        return Ok(Some(f.clone()));
    }
    let vals = grid.iter().map(|l| f.eval(*l)).collect::<Result<Vec<_>>>()?;
    for i in 1..grid.len().saturating_sub(1) {
        let s0 = (vals[i] - vals[i - 1]) / (grid[i] - grid[i - 1]);
        let s1 = (vals[i + 1] - vals[i]) / (grid[i + 1] - grid[i]);
        if s1 < s0 - 1e-9 * (1.0 + s0.abs().max(s1.abs())) {
            return Ok(None);
        }
    }
    Ok(Some(f.clone().assume_convex()))
}

/// `n` points geometrically spaced on `[a, b]`, both ends included.
pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let r = (b / a).ln() / ((n - 1) as f64);
    (0..n)
        .map(|i| if i == n - 1 { b } else { a * (r * i as f64).exp() })
        .collect()
}

/// `n` points evenly spaced on `[a, b]`, both ends included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let h = (b - a) / ((n - 1) as f64);
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
        .collect()
}
