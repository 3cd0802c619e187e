//! Two-sided tail envelopes for random variables whose moment generating
//! function is known only through upper and lower bounds.
//!
//! The upper side is the classical Chernoff envelope `exp(-nu*(x))`. The
//! lower side comes from inverting the MGF bound, either through the
//! unilateral conjugate chain in [`uni_lower`] or through the bilateral
//! saddle-point construction in [`bi_lower`]. Everything is checked against
//! the reference laws in [`oracle`].

pub mod bi_lower;
pub mod cli;
pub mod envelope;
pub mod error;
pub mod funcore;
pub mod logspace;
pub mod moment_bridge;
pub mod oracle;
pub mod saddle;
pub mod tauber;
pub mod tolerance;
pub mod uni_lower;
pub mod validate;

pub use envelope::{chernoff_upper, EnvelopePoint, Side, TailEnvelope};
pub use error::{Error, Result};
pub use funcore::{
    biconjugate, conjugate, conjugate_at, saddle_x0, ConjugateResult, Domain, PhiFunction,
};
pub use tolerance::Tolerances;
