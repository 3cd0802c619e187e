use rayon::prelude::*;
use serde::Serialize;

const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalRow {
    pub x: f64,
    pub count: u64,
    pub fraction: f64,
    /// Half-width of the 95% Wilson score interval.
    pub halfwidth: f64,
    pub wilson_lower: f64,
    pub wilson_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalTail {
    pub n: u64,
    pub rows: Vec<EmpiricalRow>,
}

/// Exceedance fractions `#{s ≥ x}/n` with Wilson intervals.
pub fn empirical_tail(samples: &[f64], x_grid: &[f64]) -> EmpiricalTail {
    let n = samples.len() as u64;
    let rows = x_grid
        .iter()
        .map(|&x| {
            let count = samples.par_iter().filter(|s| **s >= x).count() as u64;
            wilson_row(x, count, n)
        })
        .collect();
    EmpiricalTail { n, rows }
}

fn wilson_row(x: f64, count: u64, n: u64) -> EmpiricalRow {
    if n == 0 {
        return EmpiricalRow {
            x,
            count,
            fraction: f64::NAN,
            halfwidth: f64::NAN,
            wilson_lower: 0.0,
            wilson_upper: 1.0,
        };
    }
    let nf = n as f64;
    let p = count as f64 / nf;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    EmpiricalRow {
        x,
        count,
        fraction: p,
        halfwidth: half,
        // the interval contains p exactly; at p = 0 or 1 rounding can say otherwise
        wilson_lower: (center - half).min(p).max(0.0),
        wilson_upper: (center + half).max(p).min(1.0),
    }
}
