use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
    /// Relative bracket width at which golden-section search stops.
    pub search_width: f64,
    /// Number of points in the coarse scan preceding golden-section search.
    pub scan_points: usize,
    /// Relative accuracy requested from adaptive quadrature.
    pub quad_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            abs: 1e-9,
            rel: 1e-8,
            search_width: 1e-10,
            scan_points: 128,
            quad_rel: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn close(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.abs + self.rel * a.abs().max(b.abs())
    }
}
