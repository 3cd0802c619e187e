use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcore::{s_value, PhiFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum GeometryRule {
    Symmetric { delta: f64 },
    Asymmetric { delta1: f64, delta2: f64 },
    Explicit,
}

/// Three points `x₋ < x₀ < x₊` around the saddle of `S(λ, x) = λx − φ2*(x)`
/// with the values and slopes of `S` needed by the tangent-line bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleGeometry {
    pub lambda: f64,
    pub x0: f64,
    pub x_minus: f64,
    pub x_plus: f64,
    pub rule: GeometryRule,
    pub s0: f64,
    pub s_minus: f64,
    pub s_plus: f64,
    /// `∂S/∂x` at `x₋`; positive.
    pub ds_minus: f64,
    /// `∂S/∂x` at `x₊`; negative.
    pub ds_plus: f64,
}

fn require_convex(phi2: &PhiFunction) -> Result<()> {
    if !phi2.is_certified_convex() {
        return Err(Error::InvalidArgument(format!(
            "{} is not certified convex",
            phi2.name()
        )));
    }
    Ok(())
}

impl SaddleGeometry {
    /// `x± = x₀(μ±)` with `μ₋ < λ < μ₊`, using the envelope identity
    /// `S(λ, x₀(μ)) = φ2(μ) + (λ − μ)·x₀(μ)` and `∂S/∂x = λ − μ` there.
    pub fn from_multipliers(
        phi2: &PhiFunction,
        mu_minus: f64,
        lambda: f64,
        mu_plus: f64,
        rule: GeometryRule,
    ) -> Result<Self> {
        require_convex(phi2)?;
        if !(mu_minus < lambda && lambda < mu_plus) {
            return Err(Error::GeometryInvalid(format!(
                "multipliers {mu_minus} < {lambda} < {mu_plus} are not ordered"
            )));
        }
        let x0 = phi2.derivative(lambda)?;
        let x_minus = phi2.derivative(mu_minus)?;
        let x_plus = phi2.derivative(mu_plus)?;
        let g = SaddleGeometry {
            lambda,
            x0,
            x_minus,
            x_plus,
            rule,
            s0: phi2.eval(lambda)?,
            s_minus: phi2.eval(mu_minus)? + (lambda - mu_minus) * x_minus,
            s_plus: phi2.eval(mu_plus)? + (lambda - mu_plus) * x_plus,
            ds_minus: lambda - mu_minus,
            ds_plus: lambda - mu_plus,
        };
        g.validate()?;
        Ok(g)
    }

    /// `x₋ = x₀(λ(1−Δ))`, `x₊ = x₀(λ(1+Δ))`.
    pub fn symmetric(phi2: &PhiFunction, lambda: f64, delta: f64) -> Result<Self> {
        let mut g = Self::asymmetric(phi2, lambda, delta, delta)?;
        g.rule = GeometryRule::Symmetric { delta };
        Ok(g)
    }

    /// `x₋ = x₀(λ(1−Δ1))`, `x₊ = x₀(λ(1+Δ2))`.
    pub fn asymmetric(phi2: &PhiFunction, lambda: f64, delta1: f64, delta2: f64) -> Result<Self> {
        if !(delta1 > 0.0 && delta1 < 1.0 && delta2 > 0.0) {
            return Err(Error::GeometryInvalid(format!(
                "deltas ({delta1}, {delta2}) outside (0,1) x (0,inf)"
            )));
        }
        Self::from_multipliers(
            phi2,
            lambda * (1.0 - delta1),
            lambda,
            lambda * (1.0 + delta2),
            GeometryRule::Asymmetric { delta1, delta2 },
        )
    }

    /// Arbitrary `x₋ < x₊`, with `S` and its slope read off the conjugate.
    pub fn explicit(phi2: &PhiFunction, lambda: f64, x_minus: f64, x_plus: f64) -> Result<Self> {
        require_convex(phi2)?;
        let x0 = phi2.derivative(lambda)?;
        let (s0, _) = s_value(phi2, lambda, x0)?;
        let (s_minus, ds_minus) = s_value(phi2, lambda, x_minus)?;
        let (s_plus, ds_plus) = s_value(phi2, lambda, x_plus)?;
        let g = SaddleGeometry {
            lambda,
            x0,
            x_minus,
            x_plus,
            rule: GeometryRule::Explicit,
            s0,
            s_minus,
            s_plus,
            ds_minus,
            ds_plus,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_minus < self.x0 && self.x0 < self.x_plus) {
            return Err(Error::GeometryInvalid(format!(
                "points not ordered: {} < {} < {}",
                self.x_minus, self.x0, self.x_plus
            )));
        }
        if !(self.ds_minus > 0.0 && self.ds_plus < 0.0) {
            return Err(Error::GeometryInvalid(format!(
                "slope signs wrong: S'(x-) = {}, S'(x+) = {}",
                self.ds_minus, self.ds_plus
            )));
        }
        let slack = 1e-9 * (1.0 + self.s0.abs());
        if self.s_minus > self.s0 + slack || self.s_plus > self.s0 + slack {
            return Err(Error::GeometryInvalid("S is not maximal at x0".into()));
        }
        Ok(())
    }
}

/// Lower bound on `T(x₋)` from the bilateral MGF bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GMinus {
    pub value: f64,
    /// `None` when the bracket is nonpositive and the bound is clamped to 0.
    pub ln_value: Option<f64>,
}

impl GMinus {
    pub fn ln(&self) -> f64 {
        self.ln_value.unwrap_or(f64::NEG_INFINITY)
    }
}

/// `e^{−λx₊}·[e^{φ1(λ)} − λe^{S(x₋)}/S′(x₋) − λe^{S(x₊)}/|S′(x₊)|]`, in
/// log space, clamped at zero.
pub fn g_minus(phi1: &PhiFunction, geometry: &SaddleGeometry) -> Result<GMinus> {
    geometry.validate()?;
    let l = geometry.lambda;
    let a = phi1.eval(l)?;
    let b = l.ln() + geometry.s_minus - geometry.ds_minus.ln();
    let c = l.ln() + geometry.s_plus - (-geometry.ds_plus).ln();
    let t = (b - a).exp() + (c - a).exp();
    if !(t < 1.0) {
        return Ok(GMinus { value: 0.0, ln_value: None });
    }
    let ln = -l * geometry.x_plus + a + (-t).ln_1p();
    Ok(GMinus { value: ln.exp(), ln_value: Some(ln) })
}
