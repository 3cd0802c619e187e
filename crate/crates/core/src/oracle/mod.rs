//! Ground truth: reference laws, quadrature and seeded sampling.

mod dist;
mod empirical;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use dist::OracleDistribution;
pub use empirical::{empirical_tail, EmpiricalRow, EmpiricalTail};
pub use quadrature::{integrate, integrate_half_line, quadrature, Quadrature};
