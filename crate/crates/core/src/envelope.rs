use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcore::{check_abscissae, conjugate_at, PhiFunction};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

/// One tabulated point. `ln_value` is `None` exactly when the value is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub x: f64,
    pub value: f64,
    pub ln_value: Option<f64>,
}

impl EnvelopePoint {
    pub fn from_ln(x: f64, ln: f64) -> Self {
        let ln = ln.min(0.0);
        if ln == f64::NEG_INFINITY || ln.is_nan() {
            EnvelopePoint { x, value: 0.0, ln_value: None }
        } else {
            EnvelopePoint { x, value: ln.exp(), ln_value: Some(ln) }
        }
    }

    /// `ln` of the value, `-inf` for zero.
    pub fn ln(&self) -> f64 {
        self.ln_value.unwrap_or(f64::NEG_INFINITY)
    }
}

/// Side-tagged bound on a tail function over an x-grid.
///
/// Points outside the validity range are not stored: the envelope is absent
/// there, not zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEnvelope {
    pub side: Side,
    pub provenance: String,
    pub constants: BTreeMap<String, f64>,
    pub valid_from: f64,
    pub valid_to: f64,
    pub points: Vec<EnvelopePoint>,
}

impl TailEnvelope {
    pub fn new(side: Side, provenance: &str, points: Vec<EnvelopePoint>) -> Self {
        let valid_from = points.first().map(|p| p.x).unwrap_or(f64::NAN);
        let valid_to = points.last().map(|p| p.x).unwrap_or(f64::NAN);
        TailEnvelope {
            side,
            provenance: provenance.to_string(),
            constants: BTreeMap::new(),
            valid_from,
            valid_to,
            points,
        }
    }

    pub fn with_constant(mut self, name: &str, value: f64) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The stored point at exactly `x`, if any.
    pub fn at(&self, x: f64) -> Option<&EnvelopePoint> {
        self.points.iter().find(|p| p.x == x)
    }

    /// Enforces the tail-function shape: lower envelopes take the running
    /// maximum from the right (a bound at a larger x also bounds smaller x),
    /// upper envelopes the running minimum from the left.
    pub fn monotone(mut self) -> Self {
        match self.side {
            Side::Lower => {
                let mut best = f64::NEG_INFINITY;
                for p in self.points.iter_mut().rev() {
                    if p.ln() < best {
                        *p = EnvelopePoint::from_ln(p.x, best);
                    } else {
                        best = p.ln();
                    }
                }
            }
            Side::Upper => {
                let mut best = 0.0f64;
                for p in self.points.iter_mut() {
                    if p.ln() > best {
                        *p = EnvelopePoint::from_ln(p.x, best);
                    } else {
                        best = p.ln();
                    }
                }
            }
        }
        self
    }
}

/// Chernoff envelope `min(1, exp(−ν*(x)))` from an upper MGF exponent `ν`.
pub fn chernoff_upper(nu: &PhiFunction, x_grid: &[f64]) -> Result<TailEnvelope> {
    check_abscissae(x_grid)?;
    let tol = Tolerances::default();
    let points = x_grid
        .iter()
        .map(|x| match conjugate_at(nu, *x, &tol) {
            Ok(p) => Ok(EnvelopePoint::from_ln(*x, -p.value.max(0.0))),
            Err(Error::UnboundedObjective { .. }) => Ok(EnvelopePoint::from_ln(*x, f64::NEG_INFINITY)),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TailEnvelope::new(Side::Upper, "chernoff", points).monotone())
}
