//! Bilateral lower bounds from two-sided MGF bounds `φ1 ≤ ln MGF ≤ φ2`.

mod closure;
mod geometry;
mod regularity;
mod richter;

pub use closure::{closure_lower_envelope, ClosureOptions, ClosurePoint, ClosureReport, GeometryFamily};
pub use geometry::{g_minus, GMinus, GeometryRule, SaddleGeometry};
pub use regularity::{refined_envelope, verify_regularity, RefinedCertificate, RegularityReport};
pub use richter::{richter_sandwich, RichterSandwich};
