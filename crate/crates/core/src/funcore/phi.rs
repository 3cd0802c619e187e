use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Half-open interval `[lower, upper)`, optionally closed on the right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Domain {
    pub lower: f64,
    pub upper: f64,
    pub upper_closed: bool,
}

impl Domain {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        Self::with_closure(lower, upper, false)
    }

    pub fn closed(lower: f64, upper: f64) -> Result<Self> {
        Self::with_closure(lower, upper, true)
    }

    fn with_closure(lower: f64, upper: f64, upper_closed: bool) -> Result<Self> {
        if !lower.is_finite() || lower < 0.0 || upper.is_nan() || lower >= upper {
            return Err(Error::EmptyDomain { lower, upper });
        }
        Ok(Domain {
            lower,
            upper,
            upper_closed: upper_closed && upper.is_finite(),
        })
    }

    /// `[lower, +inf)`.
    pub fn from(lower: f64) -> Result<Self> {
        Self::new(lower, f64::INFINITY)
    }

    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.lower
            && (lambda < self.upper || (self.upper_closed && lambda == self.upper))
    }

    pub fn is_bounded(&self) -> bool {
        self.upper.is_finite()
    }

    /// Largest point that may be evaluated, stepping just inside an open
/// finite end; `∞` for unbounded domains.
    pub fn last_point(&self) -> f64 {
        if self.upper_closed || !self.upper.is_finite() {
            self.upper
        } else {
            let gap = (self.upper - self.lower) * 1e-12;
            (self.upper - gap.max(self.upper.abs() * 4.0 * f64::EPSILON)).max(self.lower)
        }
    }

    fn out_of_domain(&self, lambda: f64) -> Error {
        Error::OutOfDomain {
            lambda,
            lower: self.lower,
            upper: self.upper,
            closed: self.upper_closed,
        }
    }
}

impl Default for Domain {
    fn default() -> Self {
        Domain {
            lower: 1.0,
            upper: f64::INFINITY,
            upper_closed: false,
        }
    }
}

/// Piecewise-linear function through strictly increasing knots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    lambda: Vec<f64>,
    value: Vec<f64>,
}

impl Grid {
    pub fn new(lambda: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        if lambda.len() != value.len() {
            return Err(Error::InvalidGrid(format!(
                "{} knots but {} values",
                lambda.len(),
                value.len()
            )));
        }
        if lambda.len() < 2 {
            return Err(Error::InvalidGrid("at least two knots are required".into()));
        }
        for (i, (l, v)) in lambda.iter().zip(&value).enumerate() {
            if !l.is_finite() || !v.is_finite() {
                return Err(Error::InvalidGrid(format!("non-finite entry at knot {i}")));
            }
            if i > 0 && *l <= lambda[i - 1] {
                return Err(Error::InvalidGrid(format!(
                    "knots not strictly increasing at index {i}"
                )));
            }
        }
        if lambda[0] < 0.0 {
            return Err(Error::InvalidGrid("knots must be nonnegative".into()));
        }
        Ok(Grid { lambda, value })
    }

    pub fn knots(&self) -> &[f64] {
        &self.lambda
    }

    pub fn values(&self) -> &[f64] {
        &self.value
    }

    fn segment(&self, l: f64) -> usize {
        let i = self.lambda.partition_point(|k| *k <= l);
        i.clamp(1, self.lambda.len() - 1) - 1
    }

    fn eval(&self, l: f64) -> f64 {
        let i = self.segment(l);
        let (l0, l1) = (self.lambda[i], self.lambda[i + 1]);
        let t = (l - l0) / (l1 - l0);
        self.value[i] + t * (self.value[i + 1] - self.value[i])
    }

    fn slope(&self, i: usize) -> f64 {
        (self.value[i + 1] - self.value[i]) / (self.lambda[i + 1] - self.lambda[i])
    }

    fn derivative(&self, l: f64) -> f64 {
        let n = self.lambda.len();
        match self.lambda.iter().position(|k| *k == l) {
            Some(0) => self.slope(0),
            Some(i) if i == n - 1 => self.slope(n - 2),
            Some(i) => 0.5 * (self.slope(i - 1) + self.slope(i)),
            None => self.slope(self.segment(l)),
        }
    }

    fn is_convex(&self) -> bool {
        (1..self.lambda.len() - 1).all(|i| {
            let (a, b) = (self.slope(i - 1), self.slope(i));
            b >= a - 1e-12 * (1.0 + a.abs().max(b.abs()))
        })
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

thread_local! {
    static MEVAL_CONTEXT: meval::Context<'static> = meval::Context::new();
}

/// Parsed arithmetic expression in one named variable.
#[derive(Clone)]
pub struct Expression {
    source: String,
    variable: String,
    expr: Arc<meval::Expr>,
}

impl Expression {
    pub fn parse(source: &str, variable: &str) -> Result<Self> {
        let expr: meval::Expr = source
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("cannot parse `{source}`: {e}")))?;
        MEVAL_CONTEXT
            .with(|ctx| expr.eval_with_context(((variable, 1.0), ctx)))
            .map_err(|e| Error::InvalidArgument(format!("cannot evaluate `{source}`: {e}")))?;
        Ok(Expression {
            source: source.to_string(),
            variable: variable.to_string(),
            expr: Arc::new(expr),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn eval(&self, v: f64) -> f64 {
        MEVAL_CONTEXT
            .with(|ctx| self.expr.eval_with_context(((self.variable.as_str(), v), ctx)))
            .unwrap_or(f64::NAN)
    }
}

/// Analytic shape of a [`PhiFunction`].
#[derive(Clone)]
pub enum Form {
    /// `scale * λ² / 2`.
    Quadratic { scale: f64 },
    /// `|λ|^p / p * ln(e + |λ|)^r`.
    PowerLog { p: f64, r: f64 },
    /// `slope * λ + intercept`.
    Linear { slope: f64, intercept: f64 },
    Expression(Expression),
    Custom {
        name: String,
        func: ScalarFn,
        derivative: Option<ScalarFn>,
    },
    Grid(Grid),
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Form::Quadratic { scale } => write!(f, "Quadratic({scale})"),
            Form::PowerLog { p, r } => write!(f, "PowerLog(p={p}, r={r})"),
            Form::Linear { slope, intercept } => write!(f, "Linear({slope}, {intercept})"),
            Form::Expression(e) => write!(f, "Expression({})", e.source),
            Form::Custom { name, .. } => write!(f, "Custom({name})"),
            Form::Grid(g) => write!(f, "Grid({} knots)", g.lambda.len()),
        }
    }
}

/// A scalar function of one variable on a half-open domain.
///
/// Used for MGF exponents `φ(λ)` as well as for exponents `ζ(x)` of
/// integrands; the domain is whatever the caller declares.
#[derive(Clone, Debug)]
pub struct PhiFunction {
    form: Form,
    domain: Domain,
    convex: bool,
}

impl PhiFunction {
    pub fn quadratic(domain: Domain) -> Self {
        Self::scaled_quadratic(1.0, domain).expect("unit scale is valid")
    }

    pub fn scaled_quadratic(scale: f64, domain: Domain) -> Result<Self> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::InvalidArgument(format!("quadratic scale {scale}")));
        }
        Ok(PhiFunction {
            form: Form::Quadratic { scale },
            domain,
            convex: true,
        })
    }

    /// `λ^p/p · ln(e+λ)^r`; `λ⁴/4` is `power_log(4, 0)`.
    pub fn power_log(p: f64, r: f64, domain: Domain) -> Result<Self> {
        if !(p.is_finite() && p > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("power-log p={p}, r={r}")));
        }
        Ok(PhiFunction {
            form: Form::PowerLog { p, r },
            domain,
            convex: p >= 1.0 && r >= 0.0,
        })
    }

    pub fn linear(slope: f64, intercept: f64, domain: Domain) -> Result<Self> {
        if !(slope.is_finite() && intercept.is_finite()) {
            return Err(Error::InvalidArgument("linear coefficients must be finite".into()));
        }
        if slope * domain.lower + intercept < 0.0 || slope < 0.0 {
            return Err(Error::InvalidArgument(
                "linear function must be nonnegative and nondecreasing".into(),
            ));
        }
        Ok(PhiFunction {
            form: Form::Linear { slope, intercept },
            domain,
            convex: true,
        })
    }

    /// Parses `source` as a function of `variable` (e.g. `"lambda^2/2"`).
    pub fn expression(source: &str, variable: &str, domain: Domain) -> Result<Self> {
        Ok(PhiFunction {
            form: Form::Expression(Expression::parse(source, variable)?),
            domain,
            convex: false,
        })
    }

    pub fn custom<F>(name: &str, func: F, domain: Domain) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        PhiFunction {
            form: Form::Custom {
                name: name.to_string(),
                func: Arc::new(func),
                derivative: None,
            },
            domain,
            convex: false,
        }
    }

    /// Attaches an analytic derivative to a custom function.
    pub fn with_derivative<F>(mut self, d: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if let Form::Custom { derivative, .. } = &mut self.form {
            *derivative = Some(Arc::new(d));
        }
        self
    }

    pub fn grid(grid: Grid) -> Self {
        let domain = Domain {
            lower: grid.lambda[0],
            upper: *grid.lambda.last().expect("grid has knots"),
            upper_closed: true,
        };
        let convex = grid.is_convex();
        PhiFunction {
            form: Form::Grid(grid),
            domain,
            convex,
        }
    }

    /// Loads a grid function from CSV with header `lambda,value`.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Csv { line: 1, message: e.to_string() })?
            .clone();
        if headers.len() != 2 || &headers[0] != "lambda" || &headers[1] != "value" {
            return Err(Error::Csv {
                line: 1,
                message: "expected header `lambda,value`".into(),
            });
        }
        let mut lambda: Vec<f64> = Vec::new();
        let mut value = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Csv {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let field = |i: usize| -> Result<f64> {
                record[i].parse::<f64>().map_err(|_| Error::Csv {
                    line,
                    message: format!("`{}` is not a number", &record[i]),
                })
            };
            let (l, v) = (field(0)?, field(1)?);
            if !l.is_finite() || !v.is_finite() {
                return Err(Error::Csv { line, message: "non-finite entry".into() });
            }
            if let Some(prev) = lambda.last() {
                if l <= *prev {
                    return Err(Error::Csv {
                        line,
                        message: format!("lambda {l} does not exceed previous {prev}"),
                    });
                }
            }
            lambda.push(l);
            value.push(v);
        }
        let grid = Grid::new(lambda, value).map_err(|e| Error::Csv {
            line: 0,
            message: e.to_string(),
        })?;
        Ok(Self::grid(grid))
    }

    /// Samples `self` on knots; the result is a grid function.
    pub fn sampled(&self, knots: &[f64]) -> Result<Self> {
        let values = knots.iter().map(|l| self.eval(*l)).collect::<Result<Vec<_>>>()?;
        Ok(Self::grid(Grid::new(knots.to_vec(), values)?))
    }

    /// `k * self`.
    pub fn scaled(&self, k: f64) -> Self {
        let inner = self.clone();
        let d = self.clone();
        PhiFunction {
            form: Form::Custom {
                name: format!("{k}*{}", self.name()),
                func: Arc::new(move |l| k * inner.eval_unchecked(l)),
                derivative: Some(Arc::new(move |l| k * d.derivative_unchecked(l))),
            },
            domain: self.domain,
            convex: self.convex && k >= 0.0,
        }
    }

    /// Same function on a sub-domain.
    pub fn restricted(&self, domain: Domain) -> Result<Self> {
        let inside_lower = self.domain.contains(domain.lower);
        let inside_upper = if domain.upper_closed {
            self.domain.contains(domain.upper)
        } else {
            domain.upper <= self.domain.upper
        };
        if !inside_lower || !inside_upper {
            return Err(Error::InvalidArgument(format!(
                "domain [{}, {}) is not inside [{}, {})",
                domain.lower, domain.upper, self.domain.lower, self.domain.upper
            )));
        }
        let mut f = self.clone();
        f.domain = domain;
        Ok(f)
    }

    /// Same formula on a different domain. Unlike [`restricted`](Self::restricted)
    /// this may widen the domain; grid functions cannot be widened.
    pub fn with_domain(&self, domain: Domain) -> Result<Self> {
        if let Form::Grid(_) = self.form {
            return self.restricted(domain);
        }
        let mut f = self.clone();
        f.domain = domain;
        Ok(f)
    }

    /// Declares the function convex. Correct for log-MGFs (Hölder) and for
    /// conjugates; callers take responsibility otherwise.
    pub fn assume_convex(mut self) -> Self {
        self.convex = true;
        self
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn is_certified_convex(&self) -> bool {
        self.convex
    }

    pub fn name(&self) -> String {
        match &self.form {
            Form::Quadratic { scale } if *scale == 1.0 => "quadratic".into(),
            Form::Quadratic { scale } => format!("quadratic(scale={scale})"),
            Form::PowerLog { p, r } => format!("power-log(p={p}, r={r})"),
            Form::Linear { slope, intercept } => format!("linear({slope}, {intercept})"),
            Form::Expression(e) => format!("expr({})", e.source),
            Form::Custom { name, .. } => name.clone(),
            Form::Grid(g) => format!("grid({} knots)", g.lambda.len()),
        }
    }

    pub fn eval(&self, lambda: f64) -> Result<f64> {
        if !self.domain.contains(lambda) {
            return Err(self.domain.out_of_domain(lambda));
        }
        let v = self.eval_unchecked(lambda);
        if v.is_nan() || v == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!(
                "{} evaluates to {v} at {lambda}",
                self.name()
            )));
        }
        Ok(v)
    }

    pub(crate) fn eval_unchecked(&self, l: f64) -> f64 {
        match &self.form {
            Form::Quadratic { scale } => 0.5 * scale * l * l,
            Form::PowerLog { p, r } => {
                let a = l.abs();
                let base = a.powf(*p) / p;
                if *r == 0.0 {
                    base
                } else {
                    base * (std::f64::consts::E + a).ln().powf(*r)
                }
            }
            Form::Linear { slope, intercept } => slope * l + intercept,
            Form::Expression(e) => e.eval(l),
            Form::Custom { func, .. } => func(l),
            Form::Grid(g) => g.eval(l),
        }
    }

    /// First derivative: analytic for closed forms, one-sided slopes averaged
    /// at grid knots, finite differences otherwise.
    pub fn derivative(&self, lambda: f64) -> Result<f64> {
        if !self.domain.contains(lambda) {
            return Err(self.domain.out_of_domain(lambda));
        }
        Ok(self.derivative_unchecked(lambda))
    }

    pub(crate) fn derivative_unchecked(&self, l: f64) -> f64 {
        match &self.form {
            Form::Quadratic { scale } => scale * l,
            Form::PowerLog { p, r } => {
                let a = l.abs();
                let e_a = std::f64::consts::E + a;
                let lg = e_a.ln();
                let d = a.powf(p - 1.0) * lg.powf(*r)
                    + if *r == 0.0 {
                        0.0
                    } else {
                        a.powf(*p) * r * lg.powf(r - 1.0) / (p * e_a)
                    };
                d * l.signum()
            }
            Form::Linear { slope, .. } => *slope,
            Form::Grid(g) => g.derivative(l),
            Form::Custom { derivative: Some(d), .. } => d(l),
            _ => self.finite_difference(l),
        }
    }

    fn finite_difference(&self, l: f64) -> f64 {
        let h = 1e-3 * l.abs().max(1e-2);
        let lo = self.domain.lower;
        let hi = self.domain.last_point();
        let f = |v: f64| self.eval_unchecked(v);
        if l - 2.0 * h >= lo && l + 2.0 * h <= hi {
            (f(l - 2.0 * h) - 8.0 * f(l - h) + 8.0 * f(l + h) - f(l + 2.0 * h)) / (12.0 * h)
        } else if l + 2.0 * h <= hi {
            (-3.0 * f(l) + 4.0 * f(l + h) - f(l + 2.0 * h)) / (2.0 * h)
        } else {
            let h = h.min((l - lo) / 2.0);
            (3.0 * f(l) - 4.0 * f(l - h) + f(l - 2.0 * h)) / (2.0 * h)
        }
    }

    /// Limit of the slope as λ → ∞ when it is known analytically.
    pub fn asymptotic_slope(&self) -> Option<f64> {
        if self.domain.is_bounded() {
            return None;
        }
        match &self.form {
            Form::Quadratic { scale } => Some(if *scale > 0.0 { f64::INFINITY } else { 0.0 }),
            Form::PowerLog { p, r } => Some(if *p > 1.0 || (*p == 1.0 && *r > 0.0) {
                f64::INFINITY
            } else if *p == 1.0 && *r == 0.0 {
                1.0
            } else {
                0.0
            }),
            Form::Linear { slope, .. } => Some(*slope),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_evaluates() {
        let f = PhiFunction::quadratic(Domain::default());
        assert_eq!(f.eval(2.0).unwrap(), 2.0);
    }

    #[test]
    fn grid_interpolates_midpoint() {
        let f = PhiFunction::grid(Grid::new(vec![1.0, 3.0], vec![1.0, 5.0]).unwrap());
        assert_eq!(f.eval(2.0).unwrap(), 3.0);
        assert!(matches!(f.eval(3.5), Err(Error::OutOfDomain { .. })));
        assert_eq!(f.eval(3.0).unwrap(), 5.0);
    }

    #[test]
    fn open_boundary_is_rejected() {
        let f = PhiFunction::quadratic(Domain::new(1.0, 10.0).unwrap());
        assert!(matches!(f.eval(10.0), Err(Error::OutOfDomain { .. })));
        assert!(matches!(f.eval(0.5), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn grid_rejects_unsorted_knots() {
        assert!(Grid::new(vec![1.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(Grid::new(vec![2.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(Grid::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn csv_loader_reports_line_numbers() {
        let ok = "lambda,value\n1,0.5\n2,2\n3,4.5\n";
        let f = PhiFunction::from_csv_reader(ok.as_bytes()).unwrap();
        assert_eq!(f.eval(2.5).unwrap(), 3.25);

        let bad = "lambda,value\n1,0.5\n2,2\n1.5,3\n";
        match PhiFunction::from_csv_reader(bad.as_bytes()) {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let junk = "lambda,value\n1,abc\n";
        match PhiFunction::from_csv_reader(junk.as_bytes()) {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let header = "l,v\n1,2\n";
        assert!(matches!(
            PhiFunction::from_csv_reader(header.as_bytes()),
            Err(Error::Csv { line: 1, .. })
        ));
    }

    #[test]
    fn expression_matches_closed_form() {
        let e = PhiFunction::expression("lambda^2/2", "lambda", Domain::default()).unwrap();
        assert_eq!(e.eval(3.0).unwrap(), 4.5);
        assert!((e.derivative(3.0).unwrap() - 3.0).abs() < 1e-9);
        assert!(PhiFunction::expression("lambda^", "lambda", Domain::default()).is_err());
        assert!(PhiFunction::expression("mu^2", "lambda", Domain::default()).is_err());
    }

    #[test]
    fn power_log_derivative_matches_difference() {
        let f = PhiFunction::power_log(2.0, 1.0, Domain::default()).unwrap();
        for l in [1.5, 2.5, 10.0, 77.0] {
            let h = 1e-5 * l;
            let fd = (f.eval(l + h).unwrap() - f.eval(l - h).unwrap()) / (2.0 * h);
            assert!((f.derivative(l).unwrap() - fd).abs() < 1e-6 * fd.abs());
        }
    }

    #[test]
    fn grid_convexity_is_detected() {
        let convex = Grid::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 3.0]).unwrap();
        let dented = Grid::new(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 3.0]).unwrap();
        assert!(PhiFunction::grid(convex).is_certified_convex());
        assert!(!PhiFunction::grid(dented).is_certified_convex());
    }
}
